#pragma once

#include <cmath>
#include <limits>

#include "wfcm/types.hpp"

namespace wfcm::detail {

inline double squared_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

struct LogSum {
  double log_s;      // log Σ_j (w_j d_j²)^(-1/(m-1)); +inf when the point is on a center
  int coincident;    // number of centers with d² below the floor
  int first_coincident;
};

// terms[j] receives -alpha * log(w_j d_j²) (or +inf for coincident centers).
inline LogSum log_sigma_w(const double* log_w, const double* d2, int k, double alpha,
                          double* terms) {
  LogSum out{0.0, 0, -1};
  double top = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    if (d2[j] < kDistanceFloor) {
      if (out.coincident++ == 0) out.first_coincident = j;
      terms[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    terms[j] = -alpha * (log_w[j] + std::log(d2[j]));
    if (terms[j] > top) top = terms[j];
  }
  if (out.coincident > 0) {
    out.log_s = std::numeric_limits<double>::infinity();
    return out;
  }
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += std::exp(terms[j] - top);
  out.log_s = top + std::log(s);
  return out;
}

}  // namespace wfcm::detail
