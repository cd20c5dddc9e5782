#include "wfcm/likelihood.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "wfcm/detail/kernel.hpp"

namespace wfcm {
namespace {

RowMatrix squared_distances(const RowMatrix& points, const RowMatrix& centers) {
  const int n = static_cast<int>(points.rows());
  const int k = static_cast<int>(centers.rows());
  const int d = static_cast<int>(centers.cols());
  RowMatrix d2(n, k);
  for (int i = 0; i < n; ++i) {
    const double* x = points.data() + static_cast<std::ptrdiff_t>(i) * d;
    for (int j = 0; j < k; ++j) {
      d2(i, j) = detail::squared_distance(x, centers.data() + static_cast<std::ptrdiff_t>(j) * d, d);
    }
  }
  return d2;
}

// Adds coef·∇E(x) for one point given its log-terms.
void accumulate_gradient(double coef, double e, const double* x, const double* terms, double log_s,
                         const double* d2, const RowMatrix& centers, ParamGradient& g) {
  const int k = static_cast<int>(centers.rows());
  const int dim = static_cast<int>(centers.cols());
  const double ce = coef * e;
  g.log_sigma += -2.0 * ce;
  for (int j = 0; j < k; ++j) {
    const double u = std::exp(terms[j] - log_s);
    g.log_w[j] += ce * u;
    const double scale = 2.0 * ce * u / d2[j];
    for (int c = 0; c < dim; ++c) g.centers(j, c) += scale * (centers(j, c) - x[c]);
  }
}

}  // namespace

NllEngine::NllEngine(const Dataset& data, const IsSampleSet& samples, double m)
    : data_(&data), samples_(&samples), m_(m) {
  if (!(m > 1.0)) throw validation_error("fuzziness m must be > 1");
  if (samples.samples.dim() != data.dim()) throw validation_error("IS samples and data differ in dimension");
  if (static_cast<int>(samples.logq.size()) != samples.samples.n()) {
    throw validation_error("IS sample set is missing cached log q values");
  }
}

NllEngine::CenterCache NllEngine::bind(const RowMatrix& centers) const {
  if (centers.cols() != data_->dim()) throw validation_error("center dimension mismatch");
  return CenterCache{centers, squared_distances(data_->values(), centers),
                     squared_distances(samples_->samples.values(), centers)};
}

NllEngine::Evaluation NllEngine::evaluate(const ModelParams& params, ParamGradient* grad) const {
  return evaluate(bind(params.centers()), params.sigma(), params.weights(), grad);
}

NllEngine::Evaluation NllEngine::evaluate(const CenterCache& cache, double sigma, const Vector& weights,
                                          ParamGradient* grad) const {
  const int k = static_cast<int>(cache.centers.rows());
  const int dim = static_cast<int>(cache.centers.cols());
  const double alpha = 1.0 / (m_ - 1.0);
  const double log_sigma2 = 2.0 * std::log(sigma);
  const Vector log_w = weights.array().log();
  const int n = data_->n();
  const int mcount = samples_->size();

  if (grad) {
    grad->log_sigma = 0.0;
    grad->log_w = Vector::Zero(k);
    grad->centers = RowMatrix::Zero(k, dim);
  }

  std::vector<double> terms(static_cast<std::size_t>(k));
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* d2 = cache.data_d2.data() + static_cast<std::ptrdiff_t>(i) * k;
    const auto ls = detail::log_sigma_w(log_w.data(), d2, k, alpha, terms.data());
    if (ls.coincident > 0) continue;
    const double per_point = std::exp(-(m_ - 1.0) * ls.log_s);
    loss += per_point;
    if (grad) {
      const double* x = data_->values().data() + static_cast<std::ptrdiff_t>(i) * dim;
      accumulate_gradient(1.0, std::exp(-log_sigma2) * per_point, x, terms.data(), ls.log_s, d2,
                          cache.centers, *grad);
    }
  }

  // Sample energies; terms are kept for the gradient pass.
  std::vector<double> log_weights(static_cast<std::size_t>(mcount));
  std::vector<double> energies(static_cast<std::size_t>(mcount));
  std::vector<double> log_s(static_cast<std::size_t>(mcount));
  std::vector<double> sample_terms;
  if (grad) sample_terms.resize(static_cast<std::size_t>(mcount) * k);
  for (int r = 0; r < mcount; ++r) {
    const double* d2 = cache.sample_d2.data() + static_cast<std::ptrdiff_t>(r) * k;
    double* t = grad ? sample_terms.data() + static_cast<std::ptrdiff_t>(r) * k : terms.data();
    const auto ls = detail::log_sigma_w(log_w.data(), d2, k, alpha, t);
    const double e = ls.coincident > 0 ? 0.0 : std::exp(-log_sigma2 - (m_ - 1.0) * ls.log_s);
    energies[r] = e;
    log_s[r] = ls.log_s;
    log_weights[r] = -e - samples_->logq[r];
  }

  Evaluation out;
  out.is = is_estimate_from_log_weights(log_weights);
  out.wfcm_loss = loss;
  out.nll = -static_cast<double>(n) * out.is.log_c + loss / (sigma * sigma);

  if (grad) {
    double top = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) top = std::max(top, lw);
    double total = 0.0;
    for (double lw : log_weights) total += std::exp(lw - top);
    for (int r = 0; r < mcount; ++r) {
      if (!std::isfinite(log_s[r])) continue;
      const double wbar = std::exp(log_weights[r] - top) / total;
      if (wbar == 0.0) continue;
      const double* x = samples_->samples.values().data() + static_cast<std::ptrdiff_t>(r) * dim;
      const double* d2 = cache.sample_d2.data() + static_cast<std::ptrdiff_t>(r) * k;
      accumulate_gradient(-static_cast<double>(n) * wbar, energies[r], x,
                          sample_terms.data() + static_cast<std::ptrdiff_t>(r) * k, log_s[r], d2,
                          cache.centers, *grad);
    }
  }
  return out;
}

}  // namespace wfcm
