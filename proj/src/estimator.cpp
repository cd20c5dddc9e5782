#include "wfcm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "wfcm/core_model.hpp"
#include "wfcm/detail/kernel.hpp"
#include "wfcm/lbfgs.hpp"
#include "wfcm/random.hpp"

namespace wfcm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// cluster j -> index of its free center; a tied pair shares one index.
std::vector<int> center_map(int k, std::optional<std::pair<int, int>> tied, int& free_count) {
  std::vector<int> map(static_cast<std::size_t>(k));
  int next = 0;
  for (int j = 0; j < k; ++j) {
    if (tied && j == tied->second) {
      map[j] = map[tied->first];
    } else {
      map[j] = next++;
    }
  }
  free_count = next;
  return map;
}

// Unconstrained coordinates for (σ, w[, free centers]).
class Reparam {
 public:
  Reparam(int k, int dim, const ParamBounds& bounds, std::vector<Interval> box,
          std::vector<int> map, int free_centers, bool with_centers)
      : k_(k),
        dim_(dim),
        bounds_(bounds),
        box_(std::move(box)),
        map_(std::move(map)),
        free_centers_(free_centers),
        with_centers_(with_centers) {}

  int size() const { return 1 + k_ + (with_centers_ ? free_centers_ * dim_ : 0); }

  Vector encode(double sigma, const Vector& w, const RowMatrix& centers) const {
    Vector x(size());
    x[0] = std::log(std::clamp(sigma, bounds_.sigma_min, bounds_.sigma_max));
    const double eps = bounds_.eps_w;
    const double span = 1.0 - k_ * eps;
    for (int j = 0; j < k_; ++j) x[1 + j] = std::log(std::max((w[j] - eps) / span, 1e-300));
    x.segment(1, k_).array() -= x.segment(1, k_).mean();
    if (with_centers_) {
      for (int j = 0; j < k_; ++j) {
        for (int c = 0; c < dim_; ++c) {
          x[1 + k_ + map_[j] * dim_ + c] = std::clamp(centers(j, c), box_[c].lo, box_[c].hi);
        }
      }
    }
    return x;
  }

  double sigma(const Vector& x) const {
    return std::clamp(std::exp(x[0]), bounds_.sigma_min, bounds_.sigma_max);
  }

  Vector softmax(const Vector& x) const {
    const Vector z = x.segment(1, k_);
    Vector p = (z.array() - z.maxCoeff()).exp();
    return p / p.sum();
  }

  Vector weights(const Vector& x) const {
    const double eps = bounds_.eps_w;
    return (eps + (1.0 - k_ * eps) * softmax(x).array()).matrix();
  }

  RowMatrix centers(const Vector& x) const {
    RowMatrix v(k_, dim_);
    for (int j = 0; j < k_; ++j) {
      for (int c = 0; c < dim_; ++c) {
        v(j, c) = std::clamp(x[1 + k_ + map_[j] * dim_ + c], box_[c].lo, box_[c].hi);
      }
    }
    return v;
  }

  // Chain rule from (log σ, log w, centers) to the unconstrained coordinates.
  Vector pull_back(const Vector& x, const ParamGradient& g) const {
    Vector out = Vector::Zero(size());
    const bool sigma_free = x[0] > std::log(bounds_.sigma_min) && x[0] < std::log(bounds_.sigma_max);
    out[0] = sigma_free ? g.log_sigma : 0.0;
    const Vector p = softmax(x);
    const Vector w = weights(x);
    const Vector gw = g.log_w.array() / w.array();
    const double mean = gw.dot(p);
    const double span = 1.0 - k_ * bounds_.eps_w;
    for (int l = 0; l < k_; ++l) out[1 + l] = span * p[l] * (gw[l] - mean);
    if (with_centers_) {
      for (int j = 0; j < k_; ++j) {
        for (int c = 0; c < dim_; ++c) {
          const double raw = x[1 + k_ + map_[j] * dim_ + c];
          if (raw >= box_[c].lo && raw <= box_[c].hi) out[1 + k_ + map_[j] * dim_ + c] += g.centers(j, c);
        }
      }
    }
    return out;
  }

 private:
  int k_;
  int dim_;
  ParamBounds bounds_;
  std::vector<Interval> box_;
  std::vector<int> map_;
  int free_centers_;
  bool with_centers_;
};

double param_distance(const ModelParams& a, const ModelParams& b) {
  const double ds = a.sigma() - b.sigma();
  return std::sqrt(ds * ds + (a.centers() - b.centers()).squaredNorm() +
                   (a.weights() - b.weights()).squaredNorm());
}

RowMatrix tie_centers(RowMatrix centers, std::optional<std::pair<int, int>> tied) {
  if (tied) {
    const Eigen::RowVectorXd shared = 0.5 * (centers.row(tied->first) + centers.row(tied->second));
    centers.row(tied->first) = shared;
    centers.row(tied->second) = shared;
  }
  return centers;
}

// Wraps an evaluation so optimizer probes that break the IS estimate read as +∞.
template <class Fn>
double guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    return kInf;
  }
}

FitResult fit_once(const Dataset& data, int k, double m, const FitConfig& config,
                   const IsContext& context, ModelParams params) {
  const NllEngine engine(data, context.samples, m);
  const auto box = effective_center_box(data, config.bounds);
  const auto tied = config.tied_centers;
  std::vector<std::string> flags;

  params = ModelParams(std::clamp(params.sigma(), config.bounds.sigma_min, config.bounds.sigma_max),
                       tie_centers(params.centers(), tied), params.weights(), m, config.bounds.eps_w);

  std::vector<TraceRecord> trace;
  MembershipMatrix u_prev = fcm_memberships(data, params.centers(), m);
  double nll_prev = engine.evaluate(params).nll;
  if (!std::isfinite(nll_prev)) throw FitDiverged("initial NLL is not finite", trace);

  bool converged = false;
  std::string reason = "max-mm-iters";
  for (int t = 1; t <= config.max_mm_iters; ++t) {
    TraceRecord rec;
    rec.iteration = t;
    rec.surrogate_before_membership = surrogate_objective(data, params.centers(), params.weights(), u_prev, m);
    MembershipMatrix u = memberships(data, params);
    rec.surrogate_after_membership = surrogate_objective(data, params.centers(), params.weights(), u, m);

    CentroidUpdate cu = update_centroids(data, u, m, params.centers(), tied, &params.weights());
    rec.starved = cu.starved();
    rec.surrogate_after_centroid = surrogate_objective(data, cu.centers, params.weights(), u, m);

    ScaleWeightResult sw = optimize_scale_weights(engine, cu.centers, params.sigma(), params.weights(), config);
    rec.nll_before_scale = sw.initial_nll;
    rec.nll_after_scale = sw.nll;
    rec.weak_step = sw.weak_step;

    ModelParams next(sw.sigma, cu.centers, sw.weights, m, config.bounds.eps_w);
    rec.nll = sw.nll;
    rec.wfcm_loss = wfcm_loss(data, next);
    rec.param_change = param_distance(next, params);
    trace.push_back(rec);
    if (!std::isfinite(rec.nll)) throw FitDiverged("NLL became non-finite in the MM loop", trace);
    if (rec.starved) flags.emplace_back("starved-cluster");
    if (rec.weak_step) flags.emplace_back("weak-step");

    params = std::move(next);
    u_prev = std::move(u);
    if (rec.param_change <= config.theta_tol) {
      converged = true;
      reason = "theta-tol";
      break;
    }
    if (nll_prev - rec.nll <= config.nll_tol) {
      converged = true;
      reason = "nll-tol";
      break;
    }
    nll_prev = rec.nll;
  }
  const double mm_nll = trace.empty() ? nll_prev : trace.back().nll;

  // Post-MM refinement of (σ, V, w) jointly, m fixed.
  int free_centers = 0;
  auto map = center_map(k, tied, free_centers);
  const Reparam rp(k, data.dim(), config.bounds, box, map, free_centers, true);
  auto value_at = [&](const Vector& x) {
    return guarded([&] {
      return engine.evaluate(engine.bind(rp.centers(x)), rp.sigma(x), rp.weights(x)).nll;
    });
  };
  Objective objective = [&](const Vector& x, Vector& grad) {
    if (config.gradient == GradientMode::finite_difference) {
      grad = central_difference_gradient(value_at, x);
      return value_at(x);
    }
    return guarded([&] {
      ParamGradient g;
      const double f = engine.evaluate(engine.bind(rp.centers(x)), rp.sigma(x), rp.weights(x), &g).nll;
      grad = rp.pull_back(x, g);
      return f;
    });
  };
  LbfgsOptions opts;
  opts.max_iters = config.post_mm_max_iters;
  const LbfgsResult post = minimize_lbfgs(objective, rp.encode(params.sigma(), params.weights(), params.centers()), opts);
  if (post.weak_step) flags.emplace_back("weak-step");
  if (std::isfinite(post.f) && post.f <= mm_nll) {
    params = ModelParams(rp.sigma(post.x), rp.centers(post.x), rp.weights(post.x), m, config.bounds.eps_w);
  }

  const NllEngine::Evaluation final_eval = engine.evaluate(params);
  if (!std::isfinite(final_eval.nll)) throw FitDiverged("final NLL is not finite", trace);
  if (final_eval.is.low_ess) flags.emplace_back("low-ess");
  std::sort(flags.begin(), flags.end());
  flags.erase(std::unique(flags.begin(), flags.end()), flags.end());

  MembershipMatrix u_final = memberships(data, params);
  FitResult out{std::move(params), final_eval.nll, final_eval.is, std::move(u_final)};
  out.trace = std::move(trace);
  out.mm_nll = mm_nll;
  out.converged = converged;
  out.reason = reason;
  out.flags = std::move(flags);
  out.proposal_components = context.components;
  out.m_grid_table.push_back({m, out.nll, true, {}});
  return out;
}

}  // namespace

void FitConfig::validate(int k, int n) const {
  if (k < 1) throw validation_error("k must be >= 1");
  if (k > n) throw Error("too-many-clusters", "k exceeds the number of observations", ErrorKind::validation);
  if (m_grid.empty()) throw validation_error("m grid must not be empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (!(m_grid[i] > 1.0)) throw validation_error("every m in the grid must be > 1");
    if (i > 0 && !(m_grid[i] > m_grid[i - 1])) throw validation_error("m grid must be strictly ascending");
  }
  if (!(theta_tol > 0.0) || !(nll_tol > 0.0)) throw validation_error("tolerances must be positive");
  if (max_mm_iters < 1 || post_mm_max_iters < 0 || scale_weight_max_iters < 1) {
    throw validation_error("iteration limits must be positive");
  }
  if (is_samples < 1) throw validation_error("is_samples must be >= 1");
  if (proposal_g_min < 1 || proposal_g_max < proposal_g_min) throw validation_error("invalid proposal component range");
  if (restarts < 1 || init_restarts < 1) throw validation_error("restart counts must be >= 1");
  bounds.validate(k);
  if (tied_centers) {
    const auto [a, b] = *tied_centers;
    if (!(a >= 0 && a < b && b < k)) throw validation_error("tied center pair must satisfy 0 <= a < b < k");
  }
}

std::vector<Interval> effective_center_box(const Dataset& data, const ParamBounds& bounds) {
  if (bounds.center_box.empty()) return inflated_bounding_box(data);
  if (static_cast<int>(bounds.center_box.size()) != data.dim()) {
    throw validation_error("center box dimension does not match the data");
  }
  return bounds.center_box;
}

IsContext build_is_context(const Dataset& data, const FitConfig& config) {
  const int g_max = std::min(config.proposal_g_max, data.n());
  const int g_min = std::min(config.proposal_g_min, g_max);
  GmmSelection sel = select_components(data, g_min, g_max, derive_seed(config.seed, 0x5eed01));
  IsSampleSet samples = draw_is_samples(sel.model, config.is_samples, derive_seed(config.seed, 0x5eed02));
  return IsContext{std::move(sel.model), std::move(samples), sel.components, std::move(sel.warnings)};
}

namespace {

RowMatrix kmeanspp_centers(const Dataset& data, int k, Rng& rng) {
  const int n = data.n();
  RowMatrix centers(k, data.dim());
  std::uniform_int_distribution<int> pick(0, n - 1);
  centers.row(0) = data.values().row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), kInf);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (data.values().row(i) - centers.row(j - 1)).squaredNorm());
      total += d2[i];
    }
    int chosen = pick(rng);
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(j) = data.values().row(chosen);
  }
  return centers;
}

}  // namespace

FcmResult classic_fcm(const Dataset& data, int k, double m, int iters, std::uint64_t seed) {
  const int n = data.n();
  if (k < 1 || k > n) throw Error("too-many-clusters", "k must be in [1, n]", ErrorKind::validation);
  if (!(m > 1.0)) throw validation_error("fuzziness m must be > 1");
  Rng rng(seed);

  const RowMatrix centers = kmeanspp_centers(data, k, rng);

  FcmResult out{centers, fcm_memberships(data, centers, m)};
  const double scale = std::max(1.0, data.values().cwiseAbs().maxCoeff());
  for (int it = 0; it < std::max(1, iters); ++it) {
    CentroidUpdate cu = update_centroids(data, out.memberships, m, out.centers);
    const double moved = (cu.centers - out.centers).cwiseAbs().maxCoeff();
    out.centers = std::move(cu.centers);
    out.loss_trace.push_back(fcm_loss(data, out.centers, m));
    out.memberships = fcm_memberships(data, out.centers, m);
    out.iterations = it + 1;
    if (moved <= 1e-10 * scale) break;
  }
  return out;
}

CentroidUpdate update_centroids(const Dataset& data, const MembershipMatrix& u, double m,
                                const RowMatrix& previous, std::optional<std::pair<int, int>> tied,
                                const Vector* weights) {
  const int k = u.k();
  const int d = data.dim();
  if (u.n() != data.n() || previous.rows() != k || previous.cols() != d) {
    throw validation_error("centroid update shape mismatch");
  }
  RowMatrix sums = RowMatrix::Zero(k, d);
  Vector mass = Vector::Zero(k);
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < k; ++j) {
      const double uij = u(i, j);
      if (uij == 0.0) continue;
      const double um = std::pow(uij, m);
      mass[j] += um;
      sums.row(j) += um * data.values().row(i);
    }
  }
  if (tied) {
    const auto [a, b] = *tied;
    const double wa = weights ? (*weights)[a] : 1.0;
    const double wb = weights ? (*weights)[b] : 1.0;
    sums.row(a) = wa * sums.row(a) + wb * sums.row(b);
    sums.row(b) = sums.row(a);
    mass[a] = wa * mass[a] + wb * mass[b];
    mass[b] = mass[a];
  }
  CentroidUpdate out{previous, {}};
  for (int j = 0; j < k; ++j) {
    if (mass[j] < 1e-12) {
      out.starved_clusters.push_back(j);
      continue;
    }
    out.centers.row(j) = sums.row(j) / mass[j];
  }
  return out;
}

ModelParams init_params(const Dataset& data, int k, double m, std::uint64_t seed, const ParamBounds& bounds,
                        int restarts, int fcm_iters) {
  if (k > data.n()) throw Error("too-many-clusters", "k exceeds the number of observations", ErrorKind::validation);
  std::optional<FcmResult> best;
  double best_loss = kInf;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    FcmResult res = classic_fcm(data, k, m, fcm_iters, derive_seed(seed, static_cast<std::uint64_t>(r)));
    const double loss = fcm_loss(data, res.centers, m);
    if (loss < best_loss) {
      best_loss = loss;
      best.emplace(std::move(res));
    }
  }
  const auto labels = best->memberships.hard_labels();
  double sq = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    sq += (data.values().row(i) - best->centers.row(labels[i])).squaredNorm();
  }
  const double sigma2 = sq / data.n();
  const double sigma = std::clamp(std::sqrt(sigma2), bounds.sigma_min, bounds.sigma_max);
  return ModelParams(sigma, best->centers, Vector::Constant(k, 1.0 / k), m, bounds.eps_w);
}

ScaleWeightResult optimize_scale_weights(const NllEngine& engine, const RowMatrix& centers, double sigma,
                                         const Vector& weights, const FitConfig& config) {
  const int k = static_cast<int>(centers.rows());
  int free_centers = 0;
  const auto map = center_map(k, std::nullopt, free_centers);
  const Reparam rp(k, static_cast<int>(centers.cols()), config.bounds, {}, map, free_centers, false);
  const NllEngine::CenterCache cache = engine.bind(centers);

  auto value_at = [&](const Vector& x) {
    return guarded([&] { return engine.evaluate(cache, rp.sigma(x), rp.weights(x)).nll; });
  };
  Objective objective = [&](const Vector& x, Vector& grad) {
    if (config.gradient == GradientMode::finite_difference) {
      grad = central_difference_gradient(value_at, x);
      return value_at(x);
    }
    return guarded([&] {
      ParamGradient g;
      const double f = engine.evaluate(cache, rp.sigma(x), rp.weights(x), &g).nll;
      grad = rp.pull_back(x, g);
      return f;
    });
  };

  ScaleWeightResult out;
  out.initial_nll = guarded([&] { return engine.evaluate(cache, sigma, weights).nll; });
  LbfgsOptions opts;
  opts.max_iters = config.scale_weight_max_iters;
  const LbfgsResult res = minimize_lbfgs(objective, rp.encode(sigma, weights, centers), opts);
  out.iterations = res.iterations;
  out.weak_step = res.weak_step;
  if (std::isfinite(res.f) && res.f <= out.initial_nll) {
    out.sigma = rp.sigma(res.x);
    out.weights = rp.weights(res.x);
    out.nll = res.f;
  } else {
    out.sigma = sigma;
    out.weights = weights;
    out.nll = out.initial_nll;
  }
  return out;
}

std::vector<ModelParams> screened_starts(const Dataset& data, const IsContext& context, int k, double m,
                                         const FitConfig& config, int keep) {
  const NllEngine engine(data, context.samples, m);
  std::vector<std::pair<double, ModelParams>> scored;
  auto score = [&](const RowMatrix& centers, double sigma, Vector w) {
    w = w.cwiseMax(config.bounds.eps_w);
    w /= w.sum();
    sigma = std::clamp(sigma, config.bounds.sigma_min, config.bounds.sigma_max);
    try {
      const ScaleWeightResult sw = optimize_scale_weights(engine, centers, sigma, w, config);
      if (std::isfinite(sw.nll)) scored.emplace_back(sw.nll, ModelParams(sw.sigma, centers, sw.weights, m, config.bounds.eps_w));
    } catch (const Error&) {
    }
  };

  // Every k-subset of mixture components. Mixing weights are a poor guide
  // because a broad cluster carries more mass than a tight one of the same
  // weight. A BIC-chosen proposal can have fewer components than clusters;
  // then a k-component mixture is fitted just for the starts.
  std::optional<GmmFit> own;
  if (context.proposal.components() < k) {
    try {
      own.emplace(fit_gmm(data, k, derive_seed(config.seed, 0x5eed03)));
    } catch (const Error&) {
    }
  }
  const ProposalModel& mix = own ? own->model : context.proposal;
  const int g_count = mix.components();
  if (g_count >= k) {
    std::vector<bool> chosen(static_cast<std::size_t>(g_count), false);
    std::fill(chosen.begin(), chosen.begin() + k, true);
    do {
      RowMatrix centers(k, mix.dim());
      Vector inv_var(k);
      int j = 0;
      for (int g = 0; g < g_count; ++g) {
        if (!chosen[static_cast<std::size_t>(g)]) continue;
        centers.row(j) = mix.means().row(g);
        inv_var[j] = mix.dim() / std::max(mix.covariances()[static_cast<std::size_t>(g)].trace(), 1e-12);
        ++j;
      }
      // Near center j the energy is w_j d² / σ², so the cluster variance goes like σ² / w_j.
      score(centers, std::sqrt(2.0 / inv_var.sum()), inv_var / inv_var.sum());
    } while (std::prev_permutation(chosen.begin(), chosen.end()));
  }

  // k-means++ draws straight from the data, before any FCM pull.
  Rng rng(derive_seed(config.seed, 0x5eed04));
  for (int r = 0; r < 2 * config.init_restarts; ++r) {
    const RowMatrix centers = kmeanspp_centers(data, k, rng);
    double sq = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      sq += (centers.rowwise() - data.values().row(i)).rowwise().squaredNorm().minCoeff();
    }
    score(centers, std::sqrt(sq / data.n()), Vector::Constant(k, 1.0 / k));
  }

  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ModelParams> out;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(out.size()) < keep; ++i) {
    out.push_back(std::move(scored[i].second));
  }
  return out;
}

FitResult fit_fixed_m(const Dataset& data, int k, double m, const FitConfig& config, const IsContext& context,
                      const std::optional<ModelParams>& init) {
  config.validate(k, data.n());
  if (init) {
    if (init->k() != k || init->dim() != data.dim()) throw validation_error("initial parameters have the wrong shape");
    return fit_once(data, k, m, config, context, *init);
  }
  std::vector<ModelParams> starts;
  for (int r = 0; r < config.restarts; ++r) {
    const auto seed = derive_seed(config.seed, 0x1000 + static_cast<std::uint64_t>(r));
    starts.push_back(init_params(data, k, m, seed, config.bounds, config.init_restarts, config.fcm_iters));
  }
  // FCM tends to split a broad cluster and merge tight ones, so screened
  // starts that skip the FCM pull are tried as well.
  for (auto& p : screened_starts(data, context, k, m, config, 2)) starts.push_back(std::move(p));
  std::optional<FitResult> best;
  std::exception_ptr first_error;
  for (auto& start : starts) {
    try {
      FitResult res = fit_once(data, k, m, config, context, std::move(start));
      if (!best || res.nll < best->nll) best.emplace(std::move(res));
    } catch (const Error&) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (!best) std::rethrow_exception(first_error);
  return std::move(*best);
}

FitResult fit_fixed_m(const Dataset& data, int k, double m, const FitConfig& config) {
  config.validate(k, data.n());
  const IsContext context = build_is_context(data, config);
  return fit_fixed_m(data, k, m, config, context);
}

FitResult fit(const Dataset& data, int k, const FitConfig& config, const IsContext& context) {
  config.validate(k, data.n());
  std::vector<MGridEntry> table;
  std::optional<FitResult> best;
  for (double m : config.m_grid) {
    MGridEntry entry{m, std::numeric_limits<double>::quiet_NaN(), false, {}};
    try {
      FitResult res = fit_fixed_m(data, k, m, config, context);
      entry.nll = res.nll;
      entry.ok = true;
      if (!best || res.nll < best->nll) best.emplace(std::move(res));
    } catch (const Error& e) {
      entry.error = e.code();
    }
    table.push_back(entry);
  }
  if (!best) throw Error("fit-failed", "every m in the grid failed to fit");
  best->m_grid_table = std::move(table);
  if (std::any_of(best->m_grid_table.begin(), best->m_grid_table.end(), [](const auto& e) { return !e.ok; })) {
    best->flags.emplace_back("m-grid-partial-failure");
  }
  return std::move(*best);
}

FitResult fit(const Dataset& data, int k, const FitConfig& config) {
  config.validate(k, data.n());
  const IsContext context = build_is_context(data, config);
  return fit(data, k, config, context);
}

}  // namespace wfcm
