#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wfcm/proposal_gmm.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

/// Importance-sampling estimate of the log normalizing constant.
struct IsEstimate {
  double log_c = 0.0;      // estimate of log C(θ)
  double log_z = 0.0;      // −log_c, log of ∫ exp(−E_θ)
  double ess = 0.0;        // (Σω)² / Σω²
  int m_samples = 0;
  double std_error = 0.0;  // delta-method standard error of log_z (and log_c)
  bool low_ess = false;    // ess < 10
};

/// Proposal draws plus their cached log q(x_r). One set is fixed per fit and
/// reused for every θ so the NLL is a deterministic function of θ.
struct IsSampleSet {
  Dataset samples;
  std::vector<double> logq;

  int size() const noexcept { return samples.n(); }
};

IsSampleSet draw_is_samples(const ProposalModel& proposal, int count, std::uint64_t seed);

/// Builds the estimate from log importance weights log ω_r = −E(x_r) − log q(x_r).
IsEstimate is_estimate_from_log_weights(std::span<const double> log_weights);

IsEstimate estimate_log_c(const ModelParams& params, const ProposalModel& proposal,
                          const Dataset& samples, std::span<const double> cached_logq);

/// Deterministic tensor-grid trapezoid value of log C(θ) for d ≤ 3. The box
/// must make the integrand on its faces ≤ 1e-12 of the peak ("box-too-small");
/// the grid is refined once and must agree within 1e-4 ("quad-unconverged").
double log_c_quadrature(const ModelParams& params, std::span<const Interval> box, int points_per_dim);

}  // namespace wfcm
