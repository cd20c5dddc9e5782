#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "wfcm/proposal_gmm.hpp"

using namespace wfcm;
using doctest::Approx;

namespace {

ProposalModel standard_normal_1d() {
  Vector pi(1);
  pi << 1.0;
  RowMatrix mu(1, 1);
  mu << 0.0;
  return ProposalModel(pi, mu, {Eigen::MatrixXd::Identity(1, 1)});
}

}  // namespace

TEST_CASE("single component EM recovers the sample mean and ML covariance") {
  const Dataset data = testing::blobs({{1.0, -2.0}}, 400, 1.5, 3);
  GmmConfig cfg;
  cfg.ridge = 0.0;
  const GmmFit fit = fit_gmm(data, 1, 7, cfg);
  const Eigen::RowVectorXd mean = data.values().colwise().mean();
  const RowMatrix centered = data.values().rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.n());
  CHECK((fit.model.means().row(0) - mean).norm() < 1e-10);
  CHECK((fit.model.covariances()[0] - cov).norm() < 1e-6);
}

TEST_CASE("two separated blobs are recovered and the log-likelihood never drops") {
  const Dataset data = testing::blobs({{0.0, 0.0}, {10.0, 10.0}}, 300, 0.5, 4);
  const GmmFit fit = fit_gmm(data, 2, 11);
  RowMatrix means = fit.model.means();
  if (means(0, 0) > means(1, 0)) means.row(0).swap(means.row(1));
  CHECK((means.row(0) - Eigen::RowVector2d(0.0, 0.0)).norm() < 0.1);
  CHECK((means.row(1) - Eigen::RowVector2d(10.0, 10.0)).norm() < 0.1);
  for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
    CHECK(fit.loglik_trace[t] >= fit.loglik_trace[t - 1] - 1e-8);
  }
}

TEST_CASE("BIC picks three components for three blobs") {
  const Dataset data = testing::blobs({{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}}, 200, 0.7, 5);
  const GmmSelection sel = select_components(data, 2, 6, 3);
  CHECK(sel.components == 3);
}

TEST_CASE("oversized components are skipped with a warning") {
  const Dataset data = testing::blobs({{0.0, 0.0, 0.0}}, 30, 1.0, 6);
  // G=2 in d=3 already needs 19 parameters; G=3 needs 29, G=4 39 > 30.
  const GmmSelection sel = select_components(data, 2, 6, 3);
  CHECK_FALSE(sel.warnings.empty());
  CHECK(sel.components <= 3);
  const GmmSelection single = select_components(data, 1, 1, 3);
  CHECK(single.components == 1);
}

TEST_CASE("log density values") {
  const ProposalModel std1 = standard_normal_1d();
  const double x0 = 0.0;
  CHECK(gmm_logpdf({&x0, 1}, std1) == Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  Vector pi(2);
  pi << 0.3, 0.7;
  RowMatrix mu(2, 1);
  mu << -2.0, 1.5;
  Eigen::MatrixXd s1(1, 1), s2(1, 1);
  s1 << 0.5;
  s2 << 2.0;
  const ProposalModel mix(pi, mu, {s1, s2});
  for (double x : {-4.0, -1.0, 0.0, 3.0}) {
    const double lp = gmm_logpdf({&x, 1}, mix);
    for (int g = 0; g < 2; ++g) CHECK(lp >= std::log(pi[g]) + mix.component_logpdf(g, {&x, 1}) - 1e-14);
  }
  // Trapezoid mass on a wide grid.
  double mass = 0.0;
  const double h = 1e-3;
  for (double x = -30.0; x <= 30.0; x += h) mass += std::exp(gmm_logpdf({&x, 1}, mix)) * h;
  CHECK(mass > 0.999);
  CHECK(mass < 1.001);
}

TEST_CASE("sampling matches the model") {
  Vector pi(2);
  pi << 0.25, 0.75;
  RowMatrix mu(2, 1);
  mu << -50.0, 50.0;
  const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(1, 1);
  const ProposalModel mix(pi, mu, {s, s});
  const int m = 20000;
  const Dataset draws = gmm_sample(mix, m, 9);
  const double frac = (draws.values().col(0).array() < 0.0).cast<double>().mean();
  CHECK(std::abs(frac - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / m));

  const Dataset one = gmm_sample(standard_normal_1d(), m, 10);
  CHECK(std::abs(one.values().col(0).mean()) < 4.0 / std::sqrt(m));

  const Dataset again = gmm_sample(mix, m, 9);
  CHECK(again.values() == draws.values());
}

TEST_CASE("proposal rejects invalid parameters") {
  Vector pi(1);
  pi << 1.0;
  RowMatrix mu(1, 2);
  mu << 0.0, 0.0;
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(ProposalModel(pi, mu, {asym}), Error);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(ProposalModel(pi, mu, {indefinite}), Error);
  Vector bad(1);
  bad << 0.9;
  CHECK_THROWS_AS(ProposalModel(bad, mu, {Eigen::MatrixXd::Identity(2, 2)}), Error);
}
