#include "wfcm/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wfcm/detail/kernel.hpp"

namespace wfcm {
namespace {

void check_point(std::span<const double> x, int dim) {
  if (static_cast<int>(x.size()) != dim) throw validation_error("point dimension mismatch");
  for (double v : x) {
    if (!std::isfinite(v)) throw validation_error("point contains non-finite values");
  }
}

void check_data(const Dataset& data, int dim) {
  if (data.dim() != dim) throw validation_error("data dimension does not match the centers");
}

// Evaluates the compact per-point loss Σ_w^(−(m−1)) for every row with the
// given log-weights (all zeros gives the classic FCM objective).
double loss_with_log_weights(const Dataset& data, const RowMatrix& centers, const Vector& log_w,
                             double m) {
  const int k = static_cast<int>(centers.rows());
  const int dim = static_cast<int>(centers.cols());
  const double alpha = 1.0 / (m - 1.0);
  std::vector<double> d2(static_cast<std::size_t>(k)), terms(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double* x = data.values().data() + static_cast<std::ptrdiff_t>(i) * dim;
    for (int j = 0; j < k; ++j) {
      d2[j] = detail::squared_distance(x, centers.data() + static_cast<std::ptrdiff_t>(j) * dim, dim);
    }
    const auto ls = detail::log_sigma_w(log_w.data(), d2.data(), k, alpha, terms.data());
    if (ls.coincident > 0) continue;
    total += std::exp(-(m - 1.0) * ls.log_s);
  }
  return total;
}

MembershipMatrix memberships_with_log_weights(const Dataset& data, const RowMatrix& centers,
                                              const Vector& log_w, double m) {
  const int k = static_cast<int>(centers.rows());
  const int dim = static_cast<int>(centers.cols());
  const double alpha = 1.0 / (m - 1.0);
  RowMatrix u(data.n(), k);
  std::vector<double> d2(static_cast<std::size_t>(k)), terms(static_cast<std::size_t>(k));
  for (int i = 0; i < data.n(); ++i) {
    const double* x = data.values().data() + static_cast<std::ptrdiff_t>(i) * dim;
    for (int j = 0; j < k; ++j) {
      d2[j] = detail::squared_distance(x, centers.data() + static_cast<std::ptrdiff_t>(j) * dim, dim);
    }
    const auto ls = detail::log_sigma_w(log_w.data(), d2.data(), k, alpha, terms.data());
    if (ls.coincident > 0) {
      const double share = 1.0 / ls.coincident;
      for (int j = 0; j < k; ++j) u(i, j) = d2[j] < kDistanceFloor ? share : 0.0;
      continue;
    }
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      u(i, j) = std::exp(terms[j] - ls.log_s);
      s += u(i, j);
    }
    // Renormalize the rounding residue so rows are stochastic to machine precision.
    for (int j = 0; j < k; ++j) u(i, j) = std::min(1.0, u(i, j) / s);
  }
  return MembershipMatrix(std::move(u));
}

}  // namespace

double SigmaW::value() const {
  return at_center() ? std::numeric_limits<double>::infinity() : std::exp(log_value);
}

SigmaW sigma_w(std::span<const double> x, const ModelParams& params) {
  check_point(x, params.dim());
  const int k = params.k();
  std::vector<double> d2(static_cast<std::size_t>(k)), terms(static_cast<std::size_t>(k));
  const Vector log_w = params.weights().array().log();
  for (int j = 0; j < k; ++j) d2[j] = detail::squared_distance(x.data(), params.center(j).data(), params.dim());
  const auto ls = detail::log_sigma_w(log_w.data(), d2.data(), k, 1.0 / (params.fuzziness() - 1.0),
                                      terms.data());
  SigmaW out;
  out.log_value = ls.log_s;
  out.coincident_center = ls.first_coincident;
  return out;
}

double energy(std::span<const double> x, const ModelParams& params) {
  const SigmaW s = sigma_w(x, params);
  if (s.at_center()) return 0.0;
  const double log_e = -2.0 * std::log(params.sigma()) - (params.fuzziness() - 1.0) * s.log_value;
  return std::exp(log_e);
}

double wfcm_loss(const Dataset& data, const ModelParams& params) {
  check_data(data, params.dim());
  const Vector log_w = params.weights().array().log();
  return loss_with_log_weights(data, params.centers(), log_w, params.fuzziness());
}

double fcm_loss(const Dataset& data, const RowMatrix& centers, double m) {
  if (!(m > 1.0)) throw validation_error("fuzziness m must be > 1");
  check_data(data, static_cast<int>(centers.cols()));
  return loss_with_log_weights(data, centers, Vector::Zero(centers.rows()), m);
}

MembershipMatrix memberships(const Dataset& data, const ModelParams& params) {
  check_data(data, params.dim());
  const Vector log_w = params.weights().array().log();
  return memberships_with_log_weights(data, params.centers(), log_w, params.fuzziness());
}

MembershipMatrix fcm_memberships(const Dataset& data, const RowMatrix& centers, double m) {
  if (!(m > 1.0)) throw validation_error("fuzziness m must be > 1");
  check_data(data, static_cast<int>(centers.cols()));
  return memberships_with_log_weights(data, centers, Vector::Zero(centers.rows()), m);
}

double nll(const Dataset& data, const ModelParams& params, double log_c) {
  if (!std::isfinite(log_c)) throw validation_error("log normalizer estimate is not finite");
  const double s2 = params.sigma() * params.sigma();
  return -static_cast<double>(data.n()) * log_c + wfcm_loss(data, params) / s2;
}

double surrogate_objective(const Dataset& data, const RowMatrix& centers, const Vector& weights,
                           const MembershipMatrix& u, double m) {
  const int k = static_cast<int>(centers.rows());
  const int dim = static_cast<int>(centers.cols());
  check_data(data, dim);
  if (u.n() != data.n() || u.k() != k) throw validation_error("membership shape mismatch");
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double* x = data.values().data() + static_cast<std::ptrdiff_t>(i) * dim;
    for (int j = 0; j < k; ++j) {
      const double uij = u(i, j);
      if (uij == 0.0) continue;
      const double d2 = detail::squared_distance(x, centers.data() + static_cast<std::ptrdiff_t>(j) * dim, dim);
      total += weights[j] * std::pow(uij, m) * d2;
    }
  }
  return total;
}

LimitCase parse_limit_case(std::string_view tag) {
  if (tag == "m_to_1") return LimitCase::m_to_1;
  if (tag == "m_eq_2") return LimitCase::m_eq_2;
  if (tag == "m_to_inf") return LimitCase::m_to_inf;
  throw validation_error("unknown limit case tag '" + std::string(tag) + "'");
}

double energy_limit_oracle(std::span<const double> x, const ModelParams& params, LimitCase which) {
  check_point(x, params.dim());
  const double s2 = params.sigma() * params.sigma();
  switch (which) {
    case LimitCase::m_to_1: {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < params.k(); ++j) {
        const double d2 = detail::squared_distance(x.data(), params.center(j).data(), params.dim());
        best = std::min(best, params.weights()[j] * d2);
      }
      return best / s2;
    }
    case LimitCase::m_eq_2: {
      if (params.fuzziness() != 2.0) throw validation_error("m_eq_2 oracle requires m == 2");
      double inv = 0.0;
      for (int j = 0; j < params.k(); ++j) {
        const double d2 = detail::squared_distance(x.data(), params.center(j).data(), params.dim());
        if (d2 < kDistanceFloor) return 0.0;
        inv += 1.0 / (params.weights()[j] * d2);
      }
      return 1.0 / (s2 * inv);
    }
    case LimitCase::m_to_inf:
      return 0.0;
  }
  throw validation_error("invalid limit case");
}

}  // namespace wfcm
