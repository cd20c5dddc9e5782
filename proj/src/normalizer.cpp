#include "wfcm/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wfcm/core_model.hpp"

namespace wfcm {

IsSampleSet draw_is_samples(const ProposalModel& proposal, int count, std::uint64_t seed) {
  Dataset samples = gmm_sample(proposal, count, seed);
  std::vector<double> logq(static_cast<std::size_t>(count));
  for (int r = 0; r < count; ++r) logq[r] = proposal.logpdf(samples.row(r));
  return IsSampleSet{std::move(samples), std::move(logq)};
}

IsEstimate is_estimate_from_log_weights(std::span<const double> log_weights) {
  const auto m = static_cast<int>(log_weights.size());
  if (m < 1) throw validation_error("importance sampling needs at least one sample");
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw Error("is-nonfinite", "importance weight is not finite");
    }
    top = std::max(top, lw);
  }
  if (!std::isfinite(top)) throw Error("is-nonfinite", "all importance weights vanish");
  double s1 = 0.0, s2 = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - top);
    s1 += w;
    s2 += w * w;
  }
  IsEstimate est;
  est.m_samples = m;
  est.log_z = top + std::log(s1) - std::log(static_cast<double>(m));
  est.log_c = -est.log_z;
  est.ess = s1 * s1 / s2;
  const double mean = s1 / m;
  const double var = std::max(0.0, s2 / m - mean * mean);
  est.std_error = std::sqrt(var / m) / mean;
  est.low_ess = est.ess < 10.0;
  return est;
}

IsEstimate estimate_log_c(const ModelParams& params, const ProposalModel& proposal,
                          const Dataset& samples, std::span<const double> cached_logq) {
  if (samples.dim() != params.dim() || proposal.dim() != params.dim()) {
    throw validation_error("sample dimension does not match the model");
  }
  if (static_cast<int>(cached_logq.size()) != samples.n()) {
    throw validation_error("cached log q length does not match the sample count");
  }
  std::vector<double> lw(static_cast<std::size_t>(samples.n()));
  for (int r = 0; r < samples.n(); ++r) {
    if (!std::isfinite(cached_logq[r])) throw Error("is-nonfinite", "proposal log density is not finite");
    lw[r] = -energy(samples.row(r), params) - cached_logq[r];
  }
  return is_estimate_from_log_weights(lw);
}

namespace {

struct QuadResult {
  double log_z;
  double boundary_ratio;  // max face integrand / max integrand
};

QuadResult trapezoid_log_z(const ModelParams& params, std::span<const Interval> box, int points) {
  const int d = params.dim();
  std::vector<double> step(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) step[c] = (box[c].hi - box[c].lo) / (points - 1);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> x(static_cast<std::size_t>(d));
  long long total = 1;
  for (int c = 0; c < d; ++c) total *= points;

  // Streaming log-sum-exp of log(trapezoid weight) − E(x).
  double top = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  double face_min_energy = std::numeric_limits<double>::infinity();
  double min_energy = std::numeric_limits<double>::infinity();
  for (long long flat = 0; flat < total; ++flat) {
    long long rem = flat;
    double log_weight = 0.0;
    bool on_face = false;
    for (int c = 0; c < d; ++c) {
      idx[c] = static_cast<int>(rem % points);
      rem /= points;
      x[c] = box[c].lo + idx[c] * step[c];
      if (idx[c] == 0 || idx[c] == points - 1) {
        on_face = true;
        log_weight += std::log(0.5 * step[c]);
      } else {
        log_weight += std::log(step[c]);
      }
    }
    const double e = energy(x, params);
    min_energy = std::min(min_energy, e);
    if (on_face) face_min_energy = std::min(face_min_energy, e);
    const double term = log_weight - e;
    if (term > top) {
      acc = acc * std::exp(top - term) + 1.0;
      top = term;
    } else {
      acc += std::exp(term - top);
    }
  }
  return {top + std::log(acc), std::exp(min_energy - face_min_energy)};
}

}  // namespace

double log_c_quadrature(const ModelParams& params, std::span<const Interval> box, int points_per_dim) {
  const int d = params.dim();
  if (d > 3) throw validation_error("quadrature oracle supports d <= 3");
  if (static_cast<int>(box.size()) != d) throw validation_error("quadrature box has wrong dimension");
  if (points_per_dim < 3) throw validation_error("quadrature needs at least 3 points per dimension");
  for (const auto& iv : box) {
    if (!(iv.hi > iv.lo)) throw validation_error("quadrature box interval is empty");
  }
  const QuadResult coarse = trapezoid_log_z(params, box, points_per_dim);
  if (coarse.boundary_ratio > 1e-12) {
    throw Error("box-too-small", "integrand on the box boundary exceeds 1e-12 of its peak");
  }
  const QuadResult fine = trapezoid_log_z(params, box, 2 * points_per_dim - 1);
  if (std::abs(fine.log_z - coarse.log_z) >= 1e-4) {
    throw Error("quad-unconverged", "grid refinement changed log Z by more than 1e-4");
  }
  return -fine.log_z;
}

}  // namespace wfcm
