#pragma once

#include <functional>
#include <string>

#include "wfcm/types.hpp"

namespace wfcm {

struct LbfgsOptions {
  int max_iters = 200;
  int history = 8;
  double grad_tol = 1e-9;  // stop when ‖g‖∞ ≤ grad_tol·max(1, |f|)
  double rel_tol = 1e-13;  // stop when an accepted step improves f by ≤ rel_tol·max(1, |f|)
  int max_line_search = 40;
};

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool weak_step = false;  // line search failed even along steepest descent
  std::string reason;
};

/// Objective returning f(x) and writing ∇f(x) into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory BFGS with Armijo backtracking. Always returns the best
/// iterate seen, so f(result) ≤ f(x0).
LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options = {});

/// Central differences with step rel_step·max(1, |x_i|).
Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                   double rel_step = 1e-5);

}  // namespace wfcm
