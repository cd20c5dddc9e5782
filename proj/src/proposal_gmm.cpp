#include "wfcm/proposal_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "wfcm/random.hpp"

namespace wfcm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(const double* v, int count) {
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) top = std::max(top, v[i]);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (int i = 0; i < count; ++i) s += std::exp(v[i] - top);
  return top + std::log(s);
}

Eigen::MatrixXd pooled_covariance(const Dataset& data) {
  const Eigen::RowVectorXd mean = data.values().colwise().mean();
  const RowMatrix centered = data.values().rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(data.n());
}

void regularize(Eigen::MatrixXd& cov, double ridge, double floor) {
  cov = 0.5 * (cov + cov.transpose());
  const double d = static_cast<double>(cov.rows());
  const double bump = std::max(ridge * cov.trace() / d, floor);
  cov.diagonal().array() += bump;
}

bool positive_definite(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  return llt.info() == Eigen::Success && cov.allFinite();
}

// k-means++ seeding: first mean uniform, later ones with probability ∝ D².
RowMatrix seed_means(const Dataset& data, int components, Rng& rng) {
  const int n = data.n();
  RowMatrix means(components, data.dim());
  std::uniform_int_distribution<int> pick(0, n - 1);
  means.row(0) = data.values().row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int g = 1; g < components; ++g) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (data.values().row(i) - means.row(g - 1)).squaredNorm());
      total += d2[i];
    }
    int chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> unit(0.0, total);
      double target = unit(rng);
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    means.row(g) = data.values().row(chosen);
  }
  return means;
}

}  // namespace

ProposalModel::ProposalModel(Vector mix_weights, RowMatrix means,
                             std::vector<Eigen::MatrixXd> covariances)
    : mix_weights_(std::move(mix_weights)), means_(std::move(means)), covariances_(std::move(covariances)) {
  const int g = static_cast<int>(means_.rows());
  const int d = static_cast<int>(means_.cols());
  if (g < 1 || d < 1) throw validation_error("proposal needs at least one component");
  if (mix_weights_.size() != g || static_cast<int>(covariances_.size()) != g) {
    throw validation_error("proposal component counts disagree");
  }
  if (std::abs(mix_weights_.sum() - 1.0) > 1e-12 || (mix_weights_.array() < 0.0).any()) {
    throw validation_error("proposal mixture weights must lie on the simplex");
  }
  chol_.reserve(covariances_.size());
  log_norm_.reserve(covariances_.size());
  for (const auto& cov : covariances_) {
    if (cov.rows() != d || cov.cols() != d) throw validation_error("proposal covariance has wrong shape");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
      throw validation_error("proposal covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw validation_error("proposal covariance is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    chol_.push_back(std::move(l));
    log_norm_.push_back(-0.5 * (d * kLog2Pi + log_det));
  }
}

double ProposalModel::component_logpdf(int g, std::span<const double> x) const {
  const int d = dim();
  const Eigen::MatrixXd& l = chol_[static_cast<std::size_t>(g)];
  // Forward substitution for z = L⁻¹ (x − μ).
  double z[16];
  std::vector<double> heap;
  double* zp = z;
  if (d > 16) {
    heap.resize(static_cast<std::size_t>(d));
    zp = heap.data();
  }
  double quad = 0.0;
  for (int r = 0; r < d; ++r) {
    double acc = x[r] - means_(g, r);
    for (int c = 0; c < r; ++c) acc -= l(r, c) * zp[c];
    zp[r] = acc / l(r, r);
    quad += zp[r] * zp[r];
  }
  return log_norm_[static_cast<std::size_t>(g)] - 0.5 * quad;
}

double ProposalModel::logpdf(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw validation_error("proposal point dimension mismatch");
  const int g = components();
  double buf[32];
  std::vector<double> heap;
  double* terms = buf;
  if (g > 32) {
    heap.resize(static_cast<std::size_t>(g));
    terms = heap.data();
  }
  for (int c = 0; c < g; ++c) {
    terms[c] = mix_weights_[c] > 0.0 ? std::log(mix_weights_[c]) + component_logpdf(c, x)
                                     : -std::numeric_limits<double>::infinity();
  }
  return log_sum_exp(terms, g);
}

double gmm_logpdf(std::span<const double> x, const ProposalModel& model) { return model.logpdf(x); }

GmmFit fit_gmm(const Dataset& data, int components, std::uint64_t seed, const GmmConfig& config) {
  const int n = data.n();
  const int d = data.dim();
  if (components < 1) throw validation_error("GMM needs at least one component");
  if (n < components) throw validation_error("GMM needs at least as many rows as components");

  Rng rng(seed);
  const Eigen::MatrixXd pooled = pooled_covariance(data);
  const double abs_floor = 1e-9 * std::max(pooled.trace() / d, 1e-300) + 1e-300;

  RowMatrix means = seed_means(data, components, rng);
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(components), pooled);
  for (auto& c : covs) regularize(c, config.ridge, abs_floor);
  Vector pi = Vector::Constant(components, 1.0 / components);

  GmmFit fit{ProposalModel(pi, means, covs)};
  std::uniform_int_distribution<int> pick(0, n - 1);
  RowMatrix resp(n, components);
  std::vector<double> terms(static_cast<std::size_t>(components));

  auto e_step = [&](const ProposalModel& model) {
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto x = data.row(i);
      for (int g = 0; g < components; ++g) {
        terms[g] = pi[g] > 0.0 ? std::log(pi[g]) + model.component_logpdf(g, x)
                               : -std::numeric_limits<double>::infinity();
      }
      const double lse = log_sum_exp(terms.data(), components);
      ll += lse;
      for (int g = 0; g < components; ++g) resp(i, g) = std::exp(terms[g] - lse);
    }
    return ll;
  };

  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const double ll = e_step(fit.model);
    if (!std::isfinite(ll)) throw Error("proposal-degenerate", "GMM log-likelihood is not finite");
    fit.loglik_trace.push_back(ll);
    fit.iterations = iter + 1;
    if (iter > 0 && std::abs(ll - prev) <= config.tol * std::max(1.0, std::abs(ll))) {
      fit.converged = true;
      fit.loglik = ll;
      break;
    }
    prev = ll;

    // M-step with degenerate-component re-seeding.
    const Vector mass = resp.colwise().sum();
    bool reseeded = false;
    for (int g = 0; g < components; ++g) {
      bool degenerate = mass[g] < 1e-8 * n;
      Eigen::RowVectorXd mu;
      Eigen::MatrixXd cov;
      if (!degenerate) {
        mu = (resp.col(g).transpose() * data.values()) / mass[g];
        const RowMatrix centered = data.values().rowwise() - mu;
        cov = (centered.transpose() * resp.col(g).asDiagonal() * centered) / mass[g];
        regularize(cov, config.ridge, abs_floor);
        degenerate = !positive_definite(cov);
      }
      if (degenerate) {
        if (++fit.reseeds > 3) {
          throw Error("proposal-degenerate", "GMM component collapsed after 3 re-seeds");
        }
        mu = data.values().row(pick(rng));
        cov = pooled;
        regularize(cov, config.ridge, abs_floor);
        pi[g] = 1.0 / components;
        reseeded = true;
      } else {
        pi[g] = mass[g] / n;
      }
      means.row(g) = mu;
      covs[static_cast<std::size_t>(g)] = cov;
    }
    pi /= pi.sum();
    fit.model = ProposalModel(pi, means, covs);
    if (reseeded) prev = -std::numeric_limits<double>::infinity();
  }
  if (!fit.converged) {
    fit.loglik = e_step(fit.model);
    fit.loglik_trace.push_back(fit.loglik);
  }
  return fit;
}

int gmm_parameter_count(int components, int dim) {
  return components - 1 + components * dim + components * dim * (dim + 1) / 2;
}

GmmSelection select_components(const Dataset& data, int g_min, int g_max, std::uint64_t seed,
                               const GmmConfig& config) {
  if (g_min < 1 || g_max < g_min) throw validation_error("invalid component range");
  if (g_max > data.n()) throw validation_error("component range exceeds the number of rows");
  std::vector<std::string> warnings;
  std::optional<GmmFit> best;
  int best_g = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, double>> table;
  const double log_n = std::log(static_cast<double>(data.n()));
  for (int g = g_min; g <= g_max; ++g) {
    const int p = gmm_parameter_count(g, data.dim());
    if (g > g_min && p > data.n()) {
      std::ostringstream os;
      os << "skipping G=" << g << ": " << p << " parameters exceed n=" << data.n();
      warnings.push_back(os.str());
      continue;
    }
    GmmFit fit = fit_gmm(data, g, derive_seed(seed, static_cast<std::uint64_t>(g)), config);
    const double bic = -2.0 * fit.loglik + p * log_n;
    table.emplace_back(g, bic);
    if (bic < best_bic) {
      best_bic = bic;
      best_g = g;
      best.emplace(std::move(fit));
    }
  }
  return GmmSelection{best->model, best_g, std::move(table), std::move(warnings)};
}

Dataset gmm_sample(const ProposalModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw validation_error("sample count must be >= 1");
  Rng rng(seed);
  const int d = model.dim();
  std::discrete_distribution<int> comp(model.mix_weights().data(),
                                       model.mix_weights().data() + model.mix_weights().size());
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix out(count, d);
  Vector z(d);
  for (int r = 0; r < count; ++r) {
    const int g = comp(rng);
    for (int c = 0; c < d; ++c) z[c] = normal(rng);
    out.row(r) = model.means().row(g) + (model.cholesky(g) * z).transpose();
  }
  return Dataset(std::move(out));
}

}  // namespace wfcm
