#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "wfcm/inference.hpp"

using namespace wfcm;
using doctest::Approx;

namespace {

double brute_force_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t r = 0; r < perm.size(); ++r) c += cost(static_cast<Eigen::Index>(r), perm[r]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

FitResult reference_of(const ModelParams& p) {
  return FitResult{p, 0.0, IsEstimate{}, MembershipMatrix(RowMatrix::Constant(1, p.k(), 1.0 / p.k()))};
}

}  // namespace

TEST_CASE("Hungarian assignment is optimal") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    Eigen::MatrixXd cost(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) cost(r, c) = trial % 3 == 0 ? std::floor(u(rng) / 3.0) : u(rng);
    }
    const std::vector<int> assign = hungarian(cost);
    std::vector<int> sorted = assign;
    std::sort(sorted.begin(), sorted.end());
    for (int c = 0; c < n; ++c) REQUIRE(sorted[c] == c);
    double total = 0.0;
    for (int r = 0; r < n; ++r) total += cost(r, assign[r]);
    CHECK(total == Approx(brute_force_assignment(cost)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(hungarian(Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("label alignment undoes a relabeling") {
  const auto ref = testing::make_params(1.0, {{0.0, 0.0}, {5.0, 0.0}, {0.0, 5.0}, {5.0, 5.0}}, {0.1, 0.2, 0.3, 0.4}, 2.0);
  std::vector<int> perm{2, 0, 3, 1};
  do {
    const ModelParams cand = ref.permuted(perm);
    const std::vector<int> back = align_labels(ref, cand);
    const ModelParams aligned = cand.permuted(back);
    CHECK(aligned.centers() == ref.centers());
    CHECK(aligned.weights() == ref.weights());
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("coincident candidate centers align to the identity") {
  const auto ref = testing::make_params(1.0, {{0.0}, {1.0}}, {0.5, 0.5}, 2.0);
  const auto cand = testing::make_params(1.0, {{0.5}, {0.5}}, {0.3, 0.7}, 2.0);
  CHECK(align_labels(ref, cand) == std::vector<int>{0, 1});
}

TEST_CASE("percentile interval uses type-7 quantiles") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  const Interval ci = percentile_ci(v, 0.1);
  CHECK(ci.lo == Approx(5.95));
  CHECK(ci.hi == Approx(95.05));
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(percentile_ci(one, 0.05), Error);
  const std::vector<double> bad{1.0, NAN};
  CHECK_THROWS_AS(percentile_ci(bad, 0.05), Error);
}

TEST_CASE("ellipsoid region covers its replicates at the nominal level") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  std::vector<Vector> reps;
  for (int b = 0; b < 200; ++b) {
    Vector v(2);
    v << 1.0 + z(rng), 2.0 * z(rng) + 0.5 * z(rng);
    reps.push_back(v);
  }
  Vector center(2);
  center << 1.0, 0.0;
  const EllipsoidRegion r = ellipsoid_region(reps, center, 0.1, false);
  CHECK(r.rank == 2);
  CHECK_FALSE(r.pseudoinverse);
  CHECK(r.distance(center) == 0.0);
  CHECK((r.covariance * r.precision - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
  const auto inside = std::count_if(reps.begin(), reps.end(), [&](const Vector& v) { return r.contains(v); });
  CHECK(inside >= 180);
  CHECK(inside <= 182);
}

TEST_CASE("singular replicate covariance") {
  std::vector<Vector> reps;
  for (int b = 0; b < 10; ++b) {
    Vector v(2);
    v << b, 2.0 * b;
    reps.push_back(v);
  }
  const Vector center = Vector::Zero(2);
  CHECK_THROWS_WITH_AS(ellipsoid_region(reps, center, 0.05, false), doctest::Contains("region-singular"), Error);
  const EllipsoidRegion r = ellipsoid_region(reps, center, 0.05, true);
  CHECK(r.rank == 1);
  CHECK(r.pseudoinverse);
  // Directions outside the replicate span add nothing to the distance.
  Vector off(2);
  off << 2.0, -1.0;
  CHECK(r.distance(off) == Approx(0.0).scale(1.0));
}

TEST_CASE("summaries of identical replicates are degenerate but finite") {
  const auto p = testing::make_params(1.5, {{0.0, 0.0}, {3.0, 3.0}}, {0.4, 0.6}, 2.0);
  const BootstrapReport r = summarize_replicates(reference_of(p), {p, p, p}, 0.05);
  REQUIRE(r.scalar_cis.size() == 1 + 4 + 2 + 1);
  CHECK(r.scalar_cis[0].name == "sigma");
  CHECK(r.scalar_cis[1].name == "v[1][1]");
  CHECK(r.scalar_cis[5].name == "w[1]");
  CHECK(r.scalar_cis[7].name == "m");
  for (const auto& ci : r.scalar_cis) {
    CHECK(ci.lower == ci.upper);
    CHECK(ci.sd < 1e-12);
  }
  REQUIRE(r.center_regions.size() == 2);
  CHECK(r.center_regions[0].rank == 0);
}

TEST_CASE("chi-square upper tail") {
  // df = 2 has the closed form exp(−x/2).
  for (double x : {0.0, 0.5, 3.0, 11.0}) CHECK(chi_square_sf(x, 2) == Approx(std::exp(-x / 2)).epsilon(1e-13));
  const auto density3 = [](double t) { return std::sqrt(t) * std::exp(-t / 2) / std::sqrt(2.0 * M_PI); };
  const double tail = 1.0 - testing::adaptive_simpson(density3, 0.0, 7.8147, 1e-12);
  CHECK(chi_square_sf(7.8147, 3) == Approx(tail).epsilon(1e-8));
  CHECK(std::abs(chi_square_sf(7.8147, 3) - 0.05) < 1e-4);
  CHECK_THROWS_AS(chi_square_sf(1.0, 0), Error);
  CHECK_THROWS_AS(chi_square_sf(-1.0, 2), Error);
}

TEST_CASE("bootstrap is reproducible and thread-count independent") {
  const Dataset data = testing::blobs({{0.0, 0.0}, {5.0, 5.0}}, 40, 1.0, 6);
  FitConfig fc;
  fc.is_samples = 1500;
  BootstrapConfig bc;
  bc.replicates = 8;
  bc.seed = 42;
  const BootstrapReport a = bootstrap(data, 2, fc, bc);
  bc.threads = 2;
  const BootstrapReport b = bootstrap(data, 2, fc, bc);
  REQUIRE(a.replicates.size() == b.replicates.size());
  for (std::size_t i = 0; i < a.replicates.size(); ++i) {
    CHECK(a.replicates[i].centers() == b.replicates[i].centers());
    CHECK(a.replicates[i].sigma() == b.replicates[i].sigma());
  }
  for (const auto& rep : a.replicates) {
    // Aligned: each replicate center is nearest its own reference center.
    for (int j = 0; j < 2; ++j) {
      const double own = (rep.centers().row(j) - a.reference.params.centers().row(j)).norm();
      const double other = (rep.centers().row(j) - a.reference.params.centers().row(1 - j)).norm();
      CHECK(own < other);
    }
  }
  const auto& sigma = a.scalar_cis[0];
  CHECK(sigma.lower <= sigma.upper);
  CHECK(a.failures == 0);
  bc.replicates = 1;
  CHECK_THROWS_AS(bootstrap(data, 2, fc, bc), Error);
}

TEST_CASE("likelihood ratio for equal centers") {
  const Dataset data = testing::blobs({{0.0, 0.0}, {6.0, 0.0}}, 100, 1.0, 10);
  FitConfig fc;
  fc.is_samples = 3000;
  const IsContext ctx = build_is_context(data, fc);

  const FitResult full = fit_fixed_m(data, 2, 2.0, fc, ctx);
  const LrtReport self = likelihood_ratio(data, ctx, {0, 1}, full, full);
  CHECK(self.raw_lambda == 0.0);
  CHECK(self.lambda == 0.0);
  CHECK(self.df == 2);
  CHECK(self.p_value == 1.0);

  const FitResult tied = fit_constrained_equal_centers(data, 2, {0, 1}, fc, ctx);
  CHECK((tied.params.centers().row(0) - tied.params.centers().row(1)).norm() < 1e-12);

  const LrtReport r = lrt_equal_centers(data, 2, {0, 1}, fc);
  CHECK(r.raw_lambda >= -1e-6);
  CHECK(r.lambda > 50.0);
  CHECK(r.p_value < 1e-6);
  CHECK_THROWS_AS(lrt_equal_centers(data, 2, {1, 1}, fc), Error);
}
