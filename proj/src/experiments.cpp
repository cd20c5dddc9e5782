#include "wfcm/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "wfcm/inference.hpp"
#include "wfcm/io.hpp"
#include "wfcm/parallel.hpp"
#include "wfcm/random.hpp"
#include "wfcm/synth_sampler.hpp"

namespace wfcm {
namespace {

MeanCi mean_ci(const std::vector<double>& values) {
  MeanCi out;
  out.mean = mean(values);
  if (values.size() >= 2) {
    const double half = 1.96 * sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
    out.lower = out.mean - half;
    out.upper = out.mean + half;
  }
  return out;
}

FitConfig replicate_fit_config(const ExperimentConfig& config, int n, std::uint64_t seed) {
  FitConfig cfg = config.fit;
  cfg.seed = seed;
  cfg.is_samples = std::max(cfg.is_samples, static_cast<int>(std::ceil(config.is_samples_per_obs * n)));
  return cfg;
}

std::optional<double> slope_of(const std::vector<ConsistencyRow>& rows, MeanCi ConsistencyRow::*field) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.succeeded > 0 && (r.*field).mean > 0.0) {
      xs.push_back(r.n);
      ys.push_back((r.*field).mean);
    }
  }
  if (xs.size() < 2) return std::nullopt;
  return loglog_slope(xs, ys);
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

Dataset simulate(const ModelParams& truth, int n, std::uint64_t seed, int steps_per_point) {
  return mh_sample(truth, n, default_chain(n, seed, steps_per_point)).samples;
}

void ExperimentConfig::validate() const {
  if (n_values.empty()) throw validation_error("experiment needs at least one n");
  for (int n : n_values) {
    if (n < 2) throw validation_error("experiment sample sizes must be >= 2");
  }
  if (replicates < 1) throw validation_error("replicates must be >= 1");
  if (steps_per_point < 1) throw validation_error("steps per point must be >= 1");
  if (is_samples_per_obs < 0.0) throw validation_error("is_samples_per_obs must be >= 0");
  if (threads < 1) throw validation_error("threads must be >= 1");
}

ConsistencyReport consistency_experiment(const ModelParams& truth, const ExperimentConfig& config) {
  config.validate();
  const int k = truth.k();
  ConsistencyReport report;
  for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
    const int n = config.n_values[ni];
    struct Errors {
      bool ok = false;
      double rmse = 0.0, sigma = 0.0, weight = 0.0;
      std::string error;
    };
    std::vector<Errors> errs(static_cast<std::size_t>(config.replicates));
    parallel_for(errs.size(), config.threads, [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(n)), r);
      try {
        const Dataset data = simulate(truth, n, derive_seed(seed, 1), config.steps_per_point);
        const FitResult fit = fit_fixed_m(data, k, config.fit.m_grid.size() == 1 ? config.fit.m_grid[0]
                                                                                 : truth.fuzziness(),
                                          replicate_fit_config(config, n, derive_seed(seed, 2)));
        const ModelParams est = fit.params.permuted(align_labels(truth, fit.params));
        errs[r].rmse = std::sqrt((est.centers() - truth.centers()).squaredNorm() / k);
        errs[r].sigma = std::abs(est.sigma() - truth.sigma());
        errs[r].weight = (est.weights() - truth.weights()).lpNorm<1>();
        errs[r].ok = true;
      } catch (const Error& e) {
        errs[r].error = e.code();
      }
    });
    ConsistencyRow row;
    row.n = n;
    std::vector<double> sig, wt;
    for (const auto& e : errs) {
      if (!e.ok) {
        ++row.failed;
        report.failures.push_back("n=" + std::to_string(n) + ": " + e.error);
        continue;
      }
      ++row.succeeded;
      row.center_rmse_values.push_back(e.rmse);
      sig.push_back(e.sigma);
      wt.push_back(e.weight);
    }
    if (row.succeeded > 0) {
      row.center_rmse = mean_ci(row.center_rmse_values);
      row.sigma_error = mean_ci(sig);
      row.weight_l1 = mean_ci(wt);
    }
    report.rows.push_back(std::move(row));
  }
  report.center_slope = slope_of(report.rows, &ConsistencyRow::center_rmse);
  report.sigma_slope = slope_of(report.rows, &ConsistencyRow::sigma_error);
  report.weight_slope = slope_of(report.rows, &ConsistencyRow::weight_l1);
  return report;
}

Vector reduced_parameters(const ModelParams& params, bool include_m) {
  const int k = params.k();
  const int d = params.dim();
  Vector out(1 + k * d + (k - 1) + (include_m ? 1 : 0));
  int at = 0;
  out[at++] = params.sigma();
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < d; ++c) out[at++] = params.centers()(j, c);
  }
  for (int j = 0; j + 1 < k; ++j) out[at++] = params.weights()[j];
  if (include_m) out[at++] = params.fuzziness();
  return out;
}

std::vector<std::string> reduced_parameter_names(int k, int dim, bool include_m) {
  std::vector<std::string> out{"sigma"};
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < dim; ++c) out.push_back("v[" + std::to_string(j + 1) + "][" + std::to_string(c + 1) + "]");
  }
  for (int j = 0; j + 1 < k; ++j) out.push_back("w[" + std::to_string(j + 1) + "]");
  if (include_m) out.emplace_back("m");
  return out;
}

RowMatrix whiten(const RowMatrix& centered, bool& pseudo) {
  const auto r = centered.rows();
  const auto p = centered.cols();
  if (r < 2) throw validation_error("whitening needs at least two replicates");
  const Eigen::RowVectorXd mu = centered.colwise().mean();
  const RowMatrix dev = centered.rowwise() - mu;
  const Eigen::MatrixXd cov = dev.transpose() * dev / static_cast<double>(r - 1);
  pseudo = false;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  const bool well_posed = llt.info() == Eigen::Success && top > 0.0 &&
                          eig.eigenvalues().minCoeff() > 1e-12 * top;
  if (well_posed) {
    // z = L⁻¹ (θ̂ − θ0), row by row.
    const Eigen::MatrixXd l = llt.matrixL();
    return l.triangularView<Eigen::Lower>().solve(centered.transpose()).transpose();
  }
  pseudo = true;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (eig.eigenvalues()[i] > 1e-12 * top && top > 0.0) keep.push_back(i);
  }
  RowMatrix out(r, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const Vector u = eig.eigenvectors().col(keep[c]);
    out.col(static_cast<Eigen::Index>(c)) = centered * u / std::sqrt(eig.eigenvalues()[keep[c]]);
  }
  return out;
}

NormalityReport normality_experiment(const ModelParams& truth, const ExperimentConfig& config, double level) {
  config.validate();
  if (config.replicates < 3) throw validation_error("normality experiment needs at least three replicates");
  const int k = truth.k();
  const bool include_m = config.fit.m_grid.size() > 1;
  const Vector theta0 = reduced_parameters(truth, include_m);
  NormalityReport report;
  report.level = level;
  for (const int n : config.n_values) {
    std::vector<std::optional<Vector>> est(static_cast<std::size_t>(config.replicates));
    std::vector<std::string> codes(est.size());
    parallel_for(est.size(), config.threads, [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(n)), r);
      try {
        const Dataset data = simulate(truth, n, derive_seed(seed, 1), config.steps_per_point);
        const FitConfig cfg = replicate_fit_config(config, n, derive_seed(seed, 2));
        const FitResult res = include_m ? fit(data, k, cfg) : fit_fixed_m(data, k, cfg.m_grid[0], cfg);
        const ModelParams aligned = res.params.permuted(align_labels(truth, res.params));
        est[r] = reduced_parameters(aligned, include_m);
      } catch (const Error& e) {
        codes[r] = e.code();
      }
    });
    NormalityRow row;
    row.n = n;
    std::vector<Vector> ok;
    for (std::size_t r = 0; r < est.size(); ++r) {
      if (est[r]) {
        ok.push_back(*est[r] - theta0);
      } else {
        ++row.failed;
        report.failures.push_back("n=" + std::to_string(n) + ": " + codes[r]);
      }
    }
    row.succeeded = static_cast<int>(ok.size());
    if (ok.size() >= 3) {
      RowMatrix centered(static_cast<Eigen::Index>(ok.size()), theta0.size());
      for (std::size_t r = 0; r < ok.size(); ++r) centered.row(static_cast<Eigen::Index>(r)) = ok[r].transpose();
      row.whitened = whiten(centered, row.pseudo_whitened);
      row.coordinates = row.pseudo_whitened ? std::vector<std::string>{}
                                            : reduced_parameter_names(k, truth.dim(), include_m);
      if (row.pseudo_whitened) {
        for (Eigen::Index c = 0; c < row.whitened.cols(); ++c) row.coordinates.push_back("pc" + std::to_string(c + 1));
      }
      int passed = 0;
      double total = 0.0;
      for (Eigen::Index c = 0; c < row.whitened.cols(); ++c) {
        const Vector col = row.whitened.col(c);
        const KsResult ks = ks_test_normal({col.data(), static_cast<std::size_t>(col.size())});
        row.ks.push_back(ks);
        total += ks.statistic;
        if (ks.p_value >= level) ++passed;
      }
      if (!row.ks.empty()) {
        row.mean_ks = total / static_cast<double>(row.ks.size());
        row.pass_rate = static_cast<double>(passed) / static_cast<double>(row.ks.size());
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string consistency_csv(const ConsistencyReport& report) {
  std::string out =
      "n,succeeded,failed,center_rmse,center_rmse_lo,center_rmse_hi,sigma_abs_error,sigma_abs_error_lo,"
      "sigma_abs_error_hi,weight_l1_error,weight_l1_error_lo,weight_l1_error_hi\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.succeeded) + "," + std::to_string(r.failed);
    for (const MeanCi* m : {&r.center_rmse, &r.sigma_error, &r.weight_l1}) {
      out += "," + (r.succeeded > 0 ? format_double(m->mean) : "") + "," + opt(m->lower) + "," + opt(m->upper);
    }
    out += "\n";
  }
  return out;
}

std::string normality_csv(const NormalityReport& report) {
  std::string out = "n,replicate,coordinate,whitened\n";
  for (const auto& row : report.rows) {
    for (Eigen::Index r = 0; r < row.whitened.rows(); ++r) {
      for (Eigen::Index c = 0; c < row.whitened.cols(); ++c) {
        out += std::to_string(row.n) + "," + std::to_string(r + 1) + "," + row.coordinates[c] + "," +
               format_double(row.whitened(r, c)) + "\n";
      }
    }
  }
  return out;
}

}  // namespace wfcm
