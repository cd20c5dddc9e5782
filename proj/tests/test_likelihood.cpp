#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "wfcm/core_model.hpp"
#include "wfcm/lbfgs.hpp"
#include "wfcm/likelihood.hpp"

using namespace wfcm;
using doctest::Approx;

namespace {

IsSampleSet gaussian_samples(int dim, int count, std::uint64_t seed) {
  Vector pi(1);
  pi << 1.0;
  const ProposalModel q(pi, RowMatrix::Zero(1, dim), {9.0 * Eigen::MatrixXd::Identity(dim, dim)});
  return draw_is_samples(q, count, seed);
}

}  // namespace

TEST_CASE("NLL equals n log Z plus the summed energies") {
  const Dataset data = testing::blobs({{0.0, 0.0}, {4.0, 1.0}}, 30, 1.0, 4);
  const IsSampleSet s = gaussian_samples(2, 3000, 12);
  const auto p = testing::make_params(1.4, {{0.5, 0.0}, {3.0, 1.5}}, {0.35, 0.65}, 2.3);
  const NllEngine engine(data, s, p.fuzziness());
  const auto ev = engine.evaluate(p);

  double energies = 0.0;
  for (int i = 0; i < data.n(); ++i) energies += energy(data.row(i), p);
  const IsEstimate is = estimate_log_c(p, ProposalModel(Vector::Ones(1), RowMatrix::Zero(1, 2),
                                                        {9.0 * Eigen::MatrixXd::Identity(2, 2)}),
                                       s.samples, s.logq);
  CHECK(ev.is.log_z == Approx(is.log_z).epsilon(1e-12));
  CHECK(ev.nll == Approx(data.n() * is.log_z + energies).epsilon(1e-11));
  CHECK(ev.wfcm_loss == Approx(wfcm_loss(data, p)).epsilon(1e-11));
  CHECK(ev.nll == Approx(nll(data, p, is.log_c)).epsilon(1e-11));
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 1 + trial % 3;
    const int d = 1 + trial % 2;
    const double m = 1.4 + 0.3 * trial;
    const ModelParams p = testing::random_params(rng, k, d, m);
    const Dataset data = testing::blobs({std::vector<double>(d, 0.0), std::vector<double>(d, 2.0)}, 25, 1.5,
                                        100 + trial);
    const IsSampleSet s = gaussian_samples(d, 1500, 200 + trial);
    const NllEngine engine(data, s, m);

    ParamGradient g;
    engine.evaluate(p, &g);

    auto at = [&](double log_sigma, const Vector& log_w, const RowMatrix& v) {
      return engine.evaluate(engine.bind(v), std::exp(log_sigma), log_w.array().exp().matrix()).nll;
    };
    const Vector log_w = p.weights().array().log();
    const double h = 1e-6;
    const double fd_sigma = (at(std::log(p.sigma()) + h, log_w, p.centers()) -
                             at(std::log(p.sigma()) - h, log_w, p.centers())) / (2 * h);
    CHECK(g.log_sigma == Approx(fd_sigma).epsilon(1e-5));
    for (int j = 0; j < k; ++j) {
      Vector up = log_w, dn = log_w;
      up[j] += h;
      dn[j] -= h;
      const double fd = (at(std::log(p.sigma()), up, p.centers()) - at(std::log(p.sigma()), dn, p.centers())) / (2 * h);
      CHECK(g.log_w[j] == Approx(fd).epsilon(1e-5).scale(1.0));
      for (int c = 0; c < d; ++c) {
        RowMatrix vu = p.centers(), vd = p.centers();
        vu(j, c) += h;
        vd(j, c) -= h;
        const double fdv = (at(std::log(p.sigma()), log_w, vu) - at(std::log(p.sigma()), log_w, vd)) / (2 * h);
        CHECK(g.centers(j, c) == Approx(fdv).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("engine rejects mismatched inputs") {
  const Dataset data = testing::make_data({{0.0, 0.0}, {1.0, 1.0}});
  const IsSampleSet s1 = gaussian_samples(1, 10, 1);
  CHECK_THROWS_AS(NllEngine(data, s1, 2.0), Error);
  const IsSampleSet s2 = gaussian_samples(2, 10, 1);
  CHECK_THROWS_AS(NllEngine(data, s2, 1.0), Error);
  IsSampleSet broken = s2;
  broken.logq.pop_back();
  CHECK_THROWS_AS(NllEngine(data, broken, 2.0), Error);
}
