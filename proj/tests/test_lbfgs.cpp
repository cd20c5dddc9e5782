#include <doctest.h>

#include <cmath>

#include "wfcm/lbfgs.hpp"

using namespace wfcm;
using doctest::Approx;

TEST_CASE("quadratic bowl") {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Vector b(3);
  b << 1, -2, 0.5;
  const Objective f = [&](const Vector& x, Vector& g) {
    g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  };
  const LbfgsResult r = minimize_lbfgs(f, Vector::Zero(3));
  const Vector exact = a.ldlt().solve(b);
  CHECK(r.converged);
  CHECK((r.x - exact).norm() < 1e-7);
}

TEST_CASE("Rosenbrock") {
  const Objective f = [](const Vector& x, Vector& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  LbfgsOptions opt;
  opt.max_iters = 500;
  const LbfgsResult r = minimize_lbfgs(f, x0, opt);
  CHECK(r.x[0] == Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == Approx(1.0).epsilon(1e-5));
  CHECK(r.f < 1e-10);
}

TEST_CASE("never returns worse than the start") {
  // Gradient points the wrong way, so no step is accepted.
  const Objective f = [](const Vector& x, Vector& g) {
    g = -x;
    return x.squaredNorm();
  };
  Vector x0(2);
  x0 << 1.0, -2.0;
  const LbfgsResult r = minimize_lbfgs(f, x0);
  CHECK(r.f <= 5.0);
  CHECK((r.x - x0).norm() < 1e-6);
}

TEST_CASE("central differences") {
  const auto f = [](const Vector& x) { return std::sin(x[0]) * std::exp(x[1]); };
  Vector x(2);
  x << 0.3, -0.7;
  const Vector g = central_difference_gradient(f, x);
  CHECK(g[0] == Approx(std::cos(0.3) * std::exp(-0.7)).epsilon(1e-8));
  CHECK(g[1] == Approx(std::sin(0.3) * std::exp(-0.7)).epsilon(1e-8));
}
