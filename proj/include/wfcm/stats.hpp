#pragma once

#include <span>
#include <vector>

namespace wfcm {

double normal_cdf(double x);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);
/// Sample standard deviation with denominator n − 1 (0 for fewer than two values).
double sample_sd(std::span<const double> values);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov–Smirnov test against N(0, 1). The p-value uses the
/// asymptotic Kolmogorov distribution at λ = (√n + 0.12 + 0.11/√n)·D.
KsResult ks_test_normal(std::span<const double> values);
double kolmogorov_sf(double lambda);

/// Least-squares slope of log y on log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace wfcm
