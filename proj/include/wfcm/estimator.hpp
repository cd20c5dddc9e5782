#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wfcm/likelihood.hpp"
#include "wfcm/normalizer.hpp"
#include "wfcm/proposal_gmm.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

enum class GradientMode { analytic, finite_difference };

struct FitConfig {
  std::vector<double> m_grid{2.0};
  int max_mm_iters = 50;
  double theta_tol = 1e-5;  // ε: stop when ‖θ(t) − θ(t−1)‖₂ ≤ ε
  double nll_tol = 1e-7;    // δ: stop when NLL(t−1) − NLL(t) ≤ δ
  int post_mm_max_iters = 300;
  int scale_weight_max_iters = 100;
  int is_samples = 5000;
  int proposal_g_min = 2;
  int proposal_g_max = 6;
  std::uint64_t seed = 1;
  int restarts = 1;
  int init_restarts = 5;  // classic FCM restarts inside the initializer
  int fcm_iters = 100;
  GradientMode gradient = GradientMode::analytic;
  ParamBounds bounds;
  // When set, clusters (a, b) (0-based) share one center throughout the fit.
  std::optional<std::pair<int, int>> tied_centers;

  void validate(int k, int n) const;
};

/// One MM iteration. The surrogate is Σ_ij w_j u_ij^m d_ij².
struct TraceRecord {
  int iteration = 0;
  double surrogate_before_membership = 0.0;
  double surrogate_after_membership = 0.0;
  double surrogate_after_centroid = 0.0;
  double nll_before_scale = 0.0;
  double nll_after_scale = 0.0;
  double wfcm_loss = 0.0;
  double nll = 0.0;
  double param_change = 0.0;
  bool starved = false;
  bool weak_step = false;
};

struct MGridEntry {
  double m = 0.0;
  double nll = 0.0;
  bool ok = false;
  std::string error;
};

struct FitResult {
  ModelParams params;
  double nll = 0.0;
  IsEstimate log_c;
  MembershipMatrix memberships;
  std::vector<TraceRecord> trace;
  double mm_nll = 0.0;  // NLL when the MM loop stopped, before post-MM refinement
  std::vector<MGridEntry> m_grid_table;
  bool converged = false;
  std::string reason;
  std::vector<std::string> flags;
  int proposal_components = 0;
};

/// Raised when an iterate produces a non-finite NLL; carries the trace so far.
class FitDiverged : public Error {
 public:
  FitDiverged(const std::string& what, std::vector<TraceRecord> trace)
      : Error("fit-diverged", what), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// Proposal plus its fixed sample set, shared across the m-grid.
struct IsContext {
  ProposalModel proposal;
  IsSampleSet samples;
  int components = 0;
  std::vector<std::string> warnings;
};

IsContext build_is_context(const Dataset& data, const FitConfig& config);

struct FcmResult {
  RowMatrix centers;
  MembershipMatrix memberships;
  std::vector<double> loss_trace;  // fcm_loss after every center update
  int iterations = 0;
};

/// Classic (unweighted) fuzzy c-means from k-means++ seeded centers.
FcmResult classic_fcm(const Dataset& data, int k, double m, int iters, std::uint64_t seed);

struct CentroidUpdate {
  RowMatrix centers;
  std::vector<int> starved_clusters;
  bool starved() const noexcept { return !starved_clusters.empty(); }
};

/// v_j = Σ_i u_ij^m x_i / Σ_i u_ij^m. Columns with mass below 1e-12 keep the
/// previous center. A tied pair is pooled into one shared center; given
/// `weights`, each side of the pool is scaled by its w_j so the shared center
/// minimizes Σ_ij w_j u_ij^m d_ij² exactly.
CentroidUpdate update_centroids(const Dataset& data, const MembershipMatrix& u, double m,
                                const RowMatrix& previous,
                                std::optional<std::pair<int, int>> tied = std::nullopt,
                                const Vector* weights = nullptr);

/// Centers from the best of `restarts` classic FCM runs, uniform weights, and
/// σ² from the mean squared distance of each point to its max-membership center.
ModelParams init_params(const Dataset& data, int k, double m, std::uint64_t seed,
                        const ParamBounds& bounds = {}, int restarts = 1, int fcm_iters = 100);

struct ScaleWeightResult {
  double sigma = 0.0;
  Vector weights;
  double nll = 0.0;
  double initial_nll = 0.0;
  bool weak_step = false;
  int iterations = 0;
};

/// Minimizes the NLL over (σ, w) with centers and m fixed. σ = exp(s) clamped
/// to the bounds; w = ε + (1 − kε)·softmax(z) keeps every weight above the floor.
ScaleWeightResult optimize_scale_weights(const NllEngine& engine, const RowMatrix& centers,
                                         double sigma, const Vector& weights,
                                         const FitConfig& config);

/// Candidate centers from every k-subset of the proposal components (or of a
/// k-component mixture when the proposal is smaller) and from 2·init_restarts
/// k-means++ draws. Each is scored by its (σ, w)-optimized NLL; the best `keep`
/// are returned, best first.
std::vector<ModelParams> screened_starts(const Dataset& data, const IsContext& context, int k, double m,
                                         const FitConfig& config, int keep);

FitResult fit_fixed_m(const Dataset& data, int k, double m, const FitConfig& config,
                      const IsContext& context, const std::optional<ModelParams>& init = std::nullopt);
FitResult fit_fixed_m(const Dataset& data, int k, double m, const FitConfig& config);

/// Runs every m in the grid on one shared sample set and returns the NLL minimizer.
FitResult fit(const Dataset& data, int k, const FitConfig& config, const IsContext& context);
FitResult fit(const Dataset& data, int k, const FitConfig& config);

/// The center box actually used for a fit: configured box or inflated data box.
std::vector<Interval> effective_center_box(const Dataset& data, const ParamBounds& bounds);

}  // namespace wfcm
