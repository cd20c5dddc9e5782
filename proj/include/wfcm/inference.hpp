#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wfcm/estimator.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

/// Minimum-cost assignment of rows to columns for a square cost matrix
/// (Hungarian method). Entry r of the result is the column given to row r.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// Permutation perm with candidate.permuted(perm) matched to the reference:
/// it minimizes Σ_j ‖v^cand_{perm[j]} − v^ref_j‖², ties going to the
/// lexicographically smallest permutation.
std::vector<int> align_labels(const ModelParams& reference, const ModelParams& candidate);

/// Two-sided (1 − α) percentile interval, type-7 quantiles.
Interval percentile_ci(std::span<const double> values, double alpha);

struct EllipsoidRegion {
  Vector center;
  Vector replicate_mean;
  Eigen::MatrixXd covariance;  // denominator B − 1
  Eigen::MatrixXd precision;   // inverse or Moore–Penrose pseudoinverse
  int rank = 0;
  double threshold = 0.0;      // (1 − α) quantile of replicate distances
  bool pseudoinverse = false;

  /// (v − center)ᵀ precision (v − center).
  double distance(const Vector& v) const;
  bool contains(const Vector& v) const { return distance(v) <= threshold; }
};

/// Throws "region-singular" when the covariance is singular and the
/// pseudoinverse was not requested.
EllipsoidRegion ellipsoid_region(const std::vector<Vector>& replicates, const Vector& center, double alpha,
                                 bool use_pseudoinverse);

struct ScalarCi {
  std::string name;  // sigma, v[j][c], w[j], m (1-based indices)
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

struct BootstrapConfig {
  int replicates = 200;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
  // Reuse the reference m for every replicate instead of re-searching the grid.
  bool fix_m = false;
  // Start each replicate fit from the reference estimate.
  bool warm_start = true;

  void validate() const;
};

struct BootstrapReport {
  FitResult reference;
  std::vector<ModelParams> replicates;  // aligned to the reference
  std::vector<int> replicate_ids;       // b for each kept replicate
  std::vector<ScalarCi> scalar_cis;
  std::vector<EllipsoidRegion> center_regions;
  EllipsoidRegion weight_region;
  double alpha = 0.05;
  int requested = 0;
  int failures = 0;
  std::vector<std::string> failure_codes;
  std::vector<std::string> flags;
};

/// Nonparametric bootstrap: refit on resampled rows, align labels to the
/// reference, then percentile CIs and ellipsoidal regions. More than 20%
/// failed replicates raises "bootstrap-unstable".
BootstrapReport bootstrap(const Dataset& data, int k, const FitConfig& fit_config, const BootstrapConfig& config);
/// Same, with a reference fit already in hand.
BootstrapReport bootstrap(const Dataset& data, const FitResult& reference, const FitConfig& fit_config,
                          const BootstrapConfig& config);

/// CIs and regions from already-aligned replicates.
BootstrapReport summarize_replicates(FitResult reference, std::vector<ModelParams> replicates, double alpha);

/// Fit with clusters a and b (0-based, a < b) sharing one center.
FitResult fit_constrained_equal_centers(const Dataset& data, int k, std::pair<int, int> pair,
                                        const FitConfig& config, const IsContext& context);
FitResult fit_constrained_equal_centers(const Dataset& data, int k, std::pair<int, int> pair,
                                        const FitConfig& config);

struct LrtReport {
  double lambda = 0.0;      // clamped at 0
  double raw_lambda = 0.0;  // 2·(NLL restricted − NLL unrestricted) before clamping
  int df = 0;
  double p_value = 1.0;
  FitResult unrestricted;
  FitResult restricted;
  std::pair<int, int> pair;
  std::vector<std::string> flags;
};

/// Λ from two fits, both NLLs re-evaluated on the same sample set.
LrtReport likelihood_ratio(const Dataset& data, const IsContext& context, std::pair<int, int> pair,
                           FitResult restricted, FitResult unrestricted);

/// Likelihood-ratio test of v_a = v_b with a χ²_d reference distribution.
LrtReport lrt_equal_centers(const Dataset& data, int k, std::pair<int, int> pair, const FitConfig& config);

/// Upper tail of χ²_df, Q(df/2, x/2).
double chi_square_sf(double x, int df);

}  // namespace wfcm
