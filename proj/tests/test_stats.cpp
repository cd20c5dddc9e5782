#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wfcm/stats.hpp"
#include "wfcm/types.hpp"

using namespace wfcm;
using doctest::Approx;

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-1.0) == Approx(0.15865525393145707).epsilon(1e-12));
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{3.0, 1.0, 4.0, 2.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == 2.5);
  CHECK(quantile(v, 0.25) == Approx(1.75));
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(v) == Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> one{7.0};
  CHECK(sample_sd(one) == 0.0);
}

TEST_CASE("Kolmogorov distribution") {
  // Known values of Q(λ) = 2 Σ (−1)^{j−1} exp(−2 j² λ²).
  CHECK(kolmogorov_sf(1.3580986393225505) == Approx(0.05).epsilon(1e-6));
  CHECK(kolmogorov_sf(1.6276236115189502) == Approx(0.01).epsilon(1e-6));
  CHECK(kolmogorov_sf(0.1) == 1.0);
  CHECK(kolmogorov_sf(10.0) < 1e-80);
}

TEST_CASE("KS test statistic and calibration") {
  // Hand case: one value at 0 gives D = 0.5.
  const std::vector<double> single{0.0};
  CHECK(ks_test_normal(single).statistic == Approx(0.5));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  int rejections = 0;
  for (int t = 0; t < 400; ++t) {
    std::vector<double> v(100);
    for (double& x : v) x = z(rng);
    rejections += ks_test_normal(v).p_value < 0.05;
  }
  // Nominal 5%: binomial(400, 0.05) has sd ≈ 4.4.
  CHECK(rejections >= 5);
  CHECK(rejections <= 36);

  std::vector<double> shifted(200);
  for (double& x : shifted) x = z(rng) + 1.0;
  CHECK(ks_test_normal(shifted).p_value < 1e-6);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{100, 400, 1600};
  const std::vector<double> y{1.0, 0.5, 0.25};
  CHECK(loglog_slope(x, y) == Approx(-0.5).epsilon(1e-12));
}
