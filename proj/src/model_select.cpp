#include "wfcm/model_select.hpp"

#include <cmath>
#include <limits>

#include "wfcm/core_model.hpp"
#include "wfcm/parallel.hpp"
#include "wfcm/random.hpp"

namespace wfcm {
namespace {

double min_center_separation(const RowMatrix& centers) {
  const auto k = centers.rows();
  if (k < 2) throw validation_error("XBI needs at least two clusters");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) best = std::min(best, (centers.row(a) - centers.row(b)).squaredNorm());
  }
  if (!(best > 0.0)) throw Error("xbi-degenerate", "two centers coincide");
  return best;
}

}  // namespace

double weighted_xbi(const Dataset& data, const ModelParams& params) {
  const double sep = min_center_separation(params.centers());
  const MembershipMatrix u = memberships(data, params);
  return surrogate_objective(data, params.centers(), params.weights(), u, params.fuzziness()) / sep;
}

double classic_xbi(const Dataset& data, const RowMatrix& centers, double m) {
  const double sep = min_center_separation(centers);
  const MembershipMatrix u = fcm_memberships(data, centers, m);
  return surrogate_objective(data, centers, Vector::Ones(centers.rows()), u, m) / sep;
}

ValidityGrid select_k(const Dataset& data, const std::vector<int>& k_values, const std::vector<double>& m_values,
                      const FitConfig& config, int threads) {
  if (k_values.empty() || m_values.empty()) throw validation_error("selection grids must not be empty");
  for (int k : k_values) {
    if (k < 2) throw validation_error("candidate k values must be >= 2");
  }
  for (double m : m_values) {
    if (!(m > 1.0)) throw validation_error("candidate m values must be > 1");
  }
  ValidityGrid grid;
  grid.k_values = k_values;
  grid.m_values = m_values;
  grid.cells.resize(k_values.size() * m_values.size());

  // One proposal and sample set serves every cell: it depends only on the data.
  const IsContext context = build_is_context(data, config);
  parallel_for(grid.cells.size(), threads, [&](std::size_t idx) {
    ValidityCell& cell = grid.cells[idx];
    cell.k = k_values[idx / m_values.size()];
    cell.m = m_values[idx % m_values.size()];
    cell.xbi = std::numeric_limits<double>::quiet_NaN();
    try {
      FitConfig cfg = config;
      cfg.m_grid = {cell.m};
      cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell.k));
      const FitResult res = fit_fixed_m(data, cell.k, cell.m, cfg, context);
      cell.xbi = weighted_xbi(data, res.params);
      cell.ok = std::isfinite(cell.xbi);
      if (!cell.ok) cell.error = "xbi-nonfinite";
      if (cell.ok && cell.xbi < 1e-3) cell.flags.emplace_back("suspiciously-small");
      for (const auto& f : res.flags) cell.flags.push_back(f);
    } catch (const Error& e) {
      cell.error = e.code();
    }
  });

  double best = std::numeric_limits<double>::infinity();
  for (const auto& cell : grid.cells) {
    if (cell.ok && cell.xbi < best) {
      best = cell.xbi;
      grid.best_k = cell.k;
      grid.best_m = cell.m;
    }
  }
  if (!std::isfinite(best)) throw Error("selection-failed", "no (k, m) cell produced a finite index");

  std::vector<double> per_k(k_values.size(), std::numeric_limits<double>::infinity());
  for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
    for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
      if (grid.cell(ki, mi).ok) per_k[ki] = std::min(per_k[ki], grid.cell(ki, mi).xbi);
    }
  }
  for (std::size_t ki = 1; ki < k_values.size(); ++ki) {
    if (!std::isfinite(per_k[ki]) || !std::isfinite(per_k[ki - 1]) || per_k[ki - 1] <= 0.0) continue;
    if ((per_k[ki - 1] - per_k[ki]) / per_k[ki - 1] < 0.1) {
      grid.elbow_k = k_values[ki - 1];
      break;
    }
  }
  return grid;
}

}  // namespace wfcm
