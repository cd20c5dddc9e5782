#include "wfcm/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace wfcm {
namespace {

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop(const std::deque<Pair>& memory, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const Pair& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options) {
  LbfgsResult out;
  Vector g(x0.size());
  double f = objective(x0, g);
  out.evaluations = 1;
  out.x = std::move(x0);
  out.f = f;
  out.grad = g;
  if (!std::isfinite(f) || !g.allFinite()) {
    out.reason = "non-finite objective at start";
    out.weak_step = true;
    return out;
  }

  std::deque<Pair> memory;
  Vector x = out.x;
  Vector x_new(x.size()), g_new(x.size());
  bool restarted = false;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol * std::max(1.0, std::abs(f))) {
      out.converged = true;
      out.reason = "gradient tolerance";
      break;
    }
    Vector dir = two_loop(memory, g);
    double slope = dir.dot(g);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / std::max(1e-300, g.lpNorm<Eigen::Infinity>())) : 1.0;

    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = x + step * dir;
      f_new = objective(x_new, g_new);
      ++out.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Quadratic interpolation on the Armijo model, safeguarded to [0.1, 0.5].
      double next = 0.5 * step;
      if (std::isfinite(f_new)) {
        const double denom = 2.0 * (f_new - f - slope * step);
        if (denom > 0.0) next = std::clamp(-slope * step * step / denom, 0.1 * step, 0.5 * step);
      }
      step = next;
    }

    if (!accepted) {
      if (!memory.empty() && !restarted) {
        memory.clear();
        restarted = true;
        continue;
      }
      out.weak_step = true;
      out.reason = "line search failed";
      break;
    }
    restarted = false;

    const double improvement = f - f_new;
    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }
    x = x_new;
    f = f_new;
    g = g_new;
    out.iterations = iter + 1;
    if (f < out.f) {
      out.f = f;
      out.x = x;
      out.grad = g;
    }
    if (improvement <= options.rel_tol * std::max(1.0, std::abs(f))) {
      out.converged = true;
      out.reason = "relative improvement tolerance";
      break;
    }
  }
  if (out.reason.empty()) out.reason = "iteration limit";
  return out;
}

Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                   double rel_step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace wfcm
