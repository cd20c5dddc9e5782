#include "wfcm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "wfcm/parallel.hpp"
#include "wfcm/random.hpp"
#include "wfcm/stats.hpp"

namespace wfcm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& assign) {
  double c = 0.0;
  for (std::size_t r = 0; r < assign.size(); ++r) c += cost(static_cast<Eigen::Index>(r), assign[r]);
  return c;
}

double optimal_cost(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0) return 0.0;
  return assignment_cost(cost, hungarian(cost));
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, int& rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(a.rows()) *
                     (s.size() > 0 ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol && s[i] > 0.0) {
      inv[i] = 1.0 / s[i];
      ++rank;
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double condition_number(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return kInf;
  return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : kInf;
}

Vector center_vector(const ModelParams& p, int j) { return p.centers().row(j).transpose(); }

// Summaries shared by both bootstrap entry points.
void summarize(BootstrapReport& report) {
  const ModelParams& ref = report.reference.params;
  const int k = ref.k();
  const int d = ref.dim();
  const auto& reps = report.replicates;
  const double alpha = report.alpha;

  auto add_scalar = [&](std::string name, double estimate, auto&& getter) {
    std::vector<double> values;
    values.reserve(reps.size());
    for (const auto& p : reps) values.push_back(getter(p));
    const Interval ci = percentile_ci(values, alpha);
    report.scalar_cis.push_back({std::move(name), estimate, ci.lo, ci.hi, mean(values), sample_sd(values)});
  };
  add_scalar("sigma", ref.sigma(), [](const ModelParams& p) { return p.sigma(); });
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < d; ++c) {
      add_scalar("v[" + std::to_string(j + 1) + "][" + std::to_string(c + 1) + "]", ref.centers()(j, c),
                 [j, c](const ModelParams& p) { return p.centers()(j, c); });
    }
  }
  for (int j = 0; j < k; ++j) {
    add_scalar("w[" + std::to_string(j + 1) + "]", ref.weights()[j],
               [j](const ModelParams& p) { return p.weights()[j]; });
  }
  add_scalar("m", ref.fuzziness(), [](const ModelParams& p) { return p.fuzziness(); });

  for (int j = 0; j < k; ++j) {
    std::vector<Vector> pts;
    for (const auto& p : reps) pts.push_back(center_vector(p, j));
    EllipsoidRegion probe = ellipsoid_region(pts, center_vector(ref, j), alpha, true);
    if (condition_number(probe.covariance) > 1e12) {
      report.flags.push_back("center-region-pseudoinverse:" + std::to_string(j + 1));
      report.center_regions.push_back(std::move(probe));
    } else {
      report.center_regions.push_back(ellipsoid_region(pts, center_vector(ref, j), alpha, false));
    }
  }
  std::vector<Vector> wts;
  for (const auto& p : reps) wts.push_back(p.weights());
  report.weight_region = ellipsoid_region(wts, ref.weights(), alpha, true);
}

FitResult refit_replicate(const Dataset& sample, const FitResult& reference, const FitConfig& cfg,
                          const BootstrapConfig& config) {
  const int k = reference.params.k();
  if (!config.warm_start) return fit(sample, k, cfg);
  const IsContext context = build_is_context(sample, cfg);
  std::optional<FitResult> best;
  for (double m : cfg.m_grid) {
    try {
      FitResult res = fit_fixed_m(sample, k, m, cfg, context, reference.params.with_fuzziness(m));
      if (!best || res.nll < best->nll) best.emplace(std::move(res));
    } catch (const Error&) {
      if (cfg.m_grid.size() == 1) throw;
    }
  }
  if (!best) throw Error("fit-failed", "every m in the grid failed to fit");
  return std::move(*best);
}

}  // namespace

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw validation_error("assignment cost matrix must be square");
  if (!cost.allFinite()) throw validation_error("assignment costs must be finite");
  // Potentials formulation, 1-based with a sentinel column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

std::vector<int> align_labels(const ModelParams& reference, const ModelParams& candidate) {
  const int k = reference.k();
  if (candidate.k() != k || candidate.dim() != reference.dim()) {
    throw validation_error("cannot align parameter sets of different shape");
  }
  Eigen::MatrixXd cost(k, k);
  for (int j = 0; j < k; ++j) {
    for (int l = 0; l < k; ++l) cost(j, l) = (reference.centers().row(j) - candidate.centers().row(l)).squaredNorm();
  }
  const double best = optimal_cost(cost);
  const double tol = 1e-12 * (1.0 + std::abs(best));

  // Fix labels left to right, taking the smallest column that still admits an
  // optimal completion.
  std::vector<int> perm;
  std::vector<char> taken(static_cast<std::size_t>(k), 0);
  double prefix = 0.0;
  for (int j = 0; j < k; ++j) {
    for (int l = 0; l < k; ++l) {
      if (taken[l]) continue;
      const int rest = k - j - 1;
      Eigen::MatrixXd sub(rest, rest);
      int col = 0;
      for (int c = 0; c < k; ++c) {
        if (taken[c] || c == l) continue;
        for (int r = 0; r < rest; ++r) sub(r, col) = cost(j + 1 + r, c);
        ++col;
      }
      if (prefix + cost(j, l) + optimal_cost(sub) <= best + tol) {
        perm.push_back(l);
        taken[l] = 1;
        prefix += cost(j, l);
        break;
      }
    }
  }
  return perm;
}

Interval percentile_ci(std::span<const double> values, double alpha) {
  if (values.size() < 2) throw validation_error("percentile CI needs at least two values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  for (double v : values) {
    if (!std::isfinite(v)) throw validation_error("percentile CI needs finite values");
  }
  return {quantile(values, alpha / 2.0), quantile(values, 1.0 - alpha / 2.0)};
}

double EllipsoidRegion::distance(const Vector& v) const {
  const Vector diff = v - center;
  return diff.dot(precision * diff);
}

EllipsoidRegion ellipsoid_region(const std::vector<Vector>& replicates, const Vector& center, double alpha,
                                 bool use_pseudoinverse) {
  if (replicates.size() < 2) throw validation_error("ellipsoid region needs at least two replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  const Eigen::Index p = center.size();
  for (const auto& r : replicates) {
    if (r.size() != p) throw validation_error("replicate dimension mismatch");
  }
  EllipsoidRegion out;
  out.center = center;
  out.replicate_mean = Vector::Zero(p);
  for (const auto& r : replicates) out.replicate_mean += r;
  out.replicate_mean /= static_cast<double>(replicates.size());
  out.covariance = Eigen::MatrixXd::Zero(p, p);
  for (const auto& r : replicates) {
    const Vector diff = r - out.replicate_mean;
    out.covariance += diff * diff.transpose();
  }
  out.covariance /= static_cast<double>(replicates.size() - 1);

  int rank = 0;
  Eigen::MatrixXd pinv = pseudo_inverse(out.covariance, rank);
  out.rank = rank;
  out.pseudoinverse = use_pseudoinverse;
  if (use_pseudoinverse) {
    out.precision = std::move(pinv);
  } else {
    if (rank < p) throw Error("region-singular", "replicate covariance is singular", ErrorKind::numerical);
    out.precision = out.covariance.llt().solve(Eigen::MatrixXd::Identity(p, p));
  }
  std::vector<double> dist;
  dist.reserve(replicates.size());
  for (const auto& r : replicates) dist.push_back(out.distance(r));
  out.threshold = quantile(dist, 1.0 - alpha);
  return out;
}

void BootstrapConfig::validate() const {
  if (replicates < 2) throw validation_error("bootstrap needs B >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  if (threads < 1) throw validation_error("threads must be >= 1");
}

BootstrapReport bootstrap(const Dataset& data, int k, const FitConfig& fit_config, const BootstrapConfig& config) {
  config.validate();
  return bootstrap(data, fit(data, k, fit_config), fit_config, config);
}

BootstrapReport bootstrap(const Dataset& data, const FitResult& reference, const FitConfig& fit_config,
                          const BootstrapConfig& config) {
  config.validate();
  const int n = data.n();
  const int b_count = config.replicates;
  std::vector<std::optional<ModelParams>> results(static_cast<std::size_t>(b_count));
  std::vector<std::string> codes(static_cast<std::size_t>(b_count));

  parallel_for(static_cast<std::size_t>(b_count), config.threads, [&](std::size_t b) {
    const std::uint64_t seed_b = derive_seed(config.seed, b + 1);
    Rng rng(seed_b);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int& r : rows) r = pick(rng);
    FitConfig cfg = fit_config;
    cfg.seed = derive_seed(seed_b, 0xb007);
    if (config.fix_m) cfg.m_grid = {reference.params.fuzziness()};
    try {
      const Dataset sample = data.subset(rows);
      FitResult res = refit_replicate(sample, reference, cfg, config);
      const auto perm = align_labels(reference.params, res.params);
      results[b].emplace(res.params.permuted(perm));
    } catch (const Error& e) {
      codes[b] = e.code();
    }
  });

  BootstrapReport report{reference};
  report.alpha = config.alpha;
  report.requested = b_count;
  for (int b = 0; b < b_count; ++b) {
    if (results[b]) {
      report.replicates.push_back(std::move(*results[b]));
      report.replicate_ids.push_back(b);
    } else {
      ++report.failures;
      report.failure_codes.push_back(codes[b]);
    }
  }
  if (report.failures > 0.2 * b_count || report.replicates.size() < 2) {
    throw Error("bootstrap-unstable", std::to_string(report.failures) + " of " + std::to_string(b_count) +
                                          " replicate fits failed");
  }
  if (report.failures > 0) report.flags.push_back("replicate-failures:" + std::to_string(report.failures));
  summarize(report);
  return report;
}

BootstrapReport summarize_replicates(FitResult reference, std::vector<ModelParams> replicates, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  BootstrapReport report{std::move(reference)};
  report.alpha = alpha;
  report.requested = static_cast<int>(replicates.size());
  for (std::size_t b = 0; b < replicates.size(); ++b) report.replicate_ids.push_back(static_cast<int>(b));
  report.replicates = std::move(replicates);
  summarize(report);
  return report;
}

FitResult fit_constrained_equal_centers(const Dataset& data, int k, std::pair<int, int> pair,
                                        const FitConfig& config, const IsContext& context) {
  if (!(pair.first >= 0 && pair.first < pair.second && pair.second < k)) {
    throw validation_error("center pair must satisfy 0 <= a < b < k");
  }
  FitConfig cfg = config;
  cfg.tied_centers = pair;
  return fit(data, k, cfg, context);
}

FitResult fit_constrained_equal_centers(const Dataset& data, int k, std::pair<int, int> pair,
                                        const FitConfig& config) {
  config.validate(k, data.n());
  const IsContext context = build_is_context(data, config);
  return fit_constrained_equal_centers(data, k, pair, config, context);
}

LrtReport likelihood_ratio(const Dataset& data, const IsContext& context, std::pair<int, int> pair,
                           FitResult restricted, FitResult unrestricted) {
  auto nll_of = [&](const FitResult& f) {
    return NllEngine(data, context.samples, f.params.fuzziness()).evaluate(f.params).nll;
  };
  const double nll_r = nll_of(restricted);
  const double nll_u = nll_of(unrestricted);
  LrtReport out{0.0, 2.0 * (nll_r - nll_u), data.dim(), 1.0, std::move(unrestricted), std::move(restricted), pair};
  if (!std::isfinite(out.raw_lambda)) throw Error("lrt-nonfinite", "likelihood ratio is not finite");
  if (out.raw_lambda < 0.0) {
    out.flags.emplace_back(out.raw_lambda >= -1e-6 ? "lambda-clamped" : "lambda-negative");
  }
  out.lambda = std::max(0.0, out.raw_lambda);
  out.p_value = chi_square_sf(out.lambda, out.df);
  return out;
}

LrtReport lrt_equal_centers(const Dataset& data, int k, std::pair<int, int> pair, const FitConfig& config) {
  if (k < 2) throw validation_error("the center-equality test needs k >= 2");
  config.validate(k, data.n());
  FitConfig free_cfg = config;
  free_cfg.tied_centers.reset();
  const IsContext context = build_is_context(data, free_cfg);
  FitResult restricted = fit_constrained_equal_centers(data, k, pair, free_cfg, context);
  FitResult unrestricted = fit(data, k, free_cfg, context);
  // The restricted optimum is feasible for the unrestricted model; refining
  // from it keeps the nested comparison honest when the first fit lands worse.
  try {
    FitResult alt = fit_fixed_m(data, k, restricted.params.fuzziness(), free_cfg, context, restricted.params);
    if (alt.nll < unrestricted.nll) {
      alt.m_grid_table = unrestricted.m_grid_table;
      unrestricted = std::move(alt);
    }
  } catch (const Error&) {
  }
  return likelihood_ratio(data, context, pair, std::move(restricted), std::move(unrestricted));
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw validation_error("degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw validation_error("chi-square argument must be >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace wfcm
