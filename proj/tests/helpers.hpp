#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "wfcm/types.hpp"

namespace testing {

inline wfcm::ModelParams make_params(double sigma, std::vector<std::vector<double>> centers, std::vector<double> weights,
                                     double m) {
  wfcm::RowMatrix v(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(centers[0].size()));
  for (std::size_t r = 0; r < centers.size(); ++r) {
    for (std::size_t c = 0; c < centers[r].size(); ++c) v(r, c) = centers[r][c];
  }
  wfcm::Vector w = Eigen::Map<wfcm::Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return wfcm::ModelParams(sigma, v, w, m);
}

inline wfcm::Dataset make_data(std::vector<std::vector<double>> rows) {
  wfcm::RowMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) x(r, c) = rows[r][c];
  }
  return wfcm::Dataset(x);
}

// Isotropic Gaussian blobs with `per` points each.
inline wfcm::Dataset blobs(const std::vector<std::vector<double>>& means, int per, double sd, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  const auto d = static_cast<Eigen::Index>(means[0].size());
  wfcm::RowMatrix x(static_cast<Eigen::Index>(means.size()) * per, d);
  Eigen::Index row = 0;
  for (const auto& mu : means) {
    for (int i = 0; i < per; ++i, ++row) {
      for (Eigen::Index c = 0; c < d; ++c) x(row, c) = mu[c] + z(rng);
    }
  }
  return wfcm::Dataset(x);
}

inline wfcm::ModelParams random_params(std::mt19937_64& rng, int k, int d, double m) {
  std::uniform_real_distribution<double> u(-3.0, 3.0), pos(0.2, 1.0);
  wfcm::RowMatrix v(k, d);
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < d; ++c) v(j, c) = u(rng);
  }
  wfcm::Vector w(k);
  for (int j = 0; j < k; ++j) w[j] = pos(rng);
  w /= w.sum();
  return wfcm::ModelParams(0.5 + pos(rng), v, w, m);
}

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int left) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left_area = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right_area = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        const double delta = left_area + right_area - whole;
        if (left <= 0 || std::abs(delta) <= 15.0 * eps) return left_area + right_area + delta / 15.0;
        return rec(lo, mid, flo, flm, fmid, left_area, eps / 2.0, left - 1) +
               rec(mid, hi, fmid, frm, fhi, right_area, eps / 2.0, left - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Per-point surrogate Σ_j w_j u_j^m d_j².
inline double point_surrogate(const std::vector<double>& u, const std::vector<double>& w,
                              const std::vector<double>& d2, double m) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += w[j] * std::pow(u[j], m) * d2[j];
  return s;
}

}  // namespace testing
