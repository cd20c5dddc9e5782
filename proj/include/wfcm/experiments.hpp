#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wfcm/estimator.hpp"
#include "wfcm/stats.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

/// Draws n points from f_θ with the default chain for that size.
Dataset simulate(const ModelParams& truth, int n, std::uint64_t seed, int steps_per_point = 1000);

struct ExperimentConfig {
  std::vector<int> n_values;
  int replicates = 10;
  std::uint64_t seed = 1;
  FitConfig fit;
  int steps_per_point = 1000;
  // IS sample count per fit is max(fit.is_samples, is_samples_per_obs·n).
  double is_samples_per_obs = 0.0;
  int threads = 1;

  void validate() const;
};

struct MeanCi {
  double mean = 0.0;
  std::optional<double> lower;  // mean ± 1.96·sd/√R; absent when R < 2
  std::optional<double> upper;
};

struct ConsistencyRow {
  int n = 0;
  int succeeded = 0;
  int failed = 0;
  MeanCi center_rmse;
  MeanCi sigma_error;
  MeanCi weight_l1;
  std::vector<double> center_rmse_values;
};

struct ConsistencyReport {
  std::vector<ConsistencyRow> rows;
  std::optional<double> center_slope;  // log-log slope of mean error on n
  std::optional<double> sigma_slope;
  std::optional<double> weight_slope;
  std::vector<std::string> failures;
};

/// Per n and replicate: simulate, fit with k known, align, record errors.
ConsistencyReport consistency_experiment(const ModelParams& truth, const ExperimentConfig& config);

struct NormalityRow {
  int n = 0;
  int succeeded = 0;
  int failed = 0;
  std::vector<std::string> coordinates;
  RowMatrix whitened;  // replicates x coordinates
  std::vector<KsResult> ks;
  double mean_ks = 0.0;
  double pass_rate = 0.0;
  bool pseudo_whitened = false;
};

struct NormalityReport {
  std::vector<NormalityRow> rows;
  double level = 0.01;
  std::vector<std::string> failures;
};

/// Replicate estimates centered at θ0 and whitened by the inverse Cholesky
/// factor of their empirical covariance. Weights enter through w_1..w_{k−1};
/// m enters only when the grid has more than one value.
NormalityReport normality_experiment(const ModelParams& truth, const ExperimentConfig& config, double level = 0.01);

/// The estimate vector used for whitening, in the order of `coordinates`.
Vector reduced_parameters(const ModelParams& params, bool include_m);
std::vector<std::string> reduced_parameter_names(int k, int dim, bool include_m);

/// Whitens centered rows; falls back to the principal subspace when the
/// covariance is singular, setting `pseudo`.
RowMatrix whiten(const RowMatrix& centered, bool& pseudo);

std::string consistency_csv(const ConsistencyReport& report);
std::string normality_csv(const NormalityReport& report);

}  // namespace wfcm
