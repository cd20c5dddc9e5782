#pragma once

#include "wfcm/normalizer.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

/// Gradient with respect to log σ, log w_j and the center coordinates.
struct ParamGradient {
  double log_sigma = 0.0;
  Vector log_w;
  RowMatrix centers;
};

/// Negative log-likelihood with log C(θ) estimated on a fixed importance
/// sample set. Holds references: `data` and `samples` must outlive the engine.
///
/// NLL(θ) = n·log Z(θ) + σ⁻² J(V, w), where log Z is the self-normalized IS
/// estimate. Its gradient is Σ_i ∇E(x_i) − n Σ_r ω̄_r ∇E(x_r) with ω̄ the
/// normalized importance weights, exact for the fixed-sample objective.
class NllEngine {
 public:
  NllEngine(const Dataset& data, const IsSampleSet& samples, double m);

  struct CenterCache {
    RowMatrix centers;
    RowMatrix data_d2;    // n x k squared distances
    RowMatrix sample_d2;  // M x k
  };

  struct Evaluation {
    double nll = 0.0;
    double wfcm_loss = 0.0;
    IsEstimate is;
  };

  double fuzziness() const noexcept { return m_; }
  const Dataset& data() const noexcept { return *data_; }
  const IsSampleSet& samples() const noexcept { return *samples_; }

  CenterCache bind(const RowMatrix& centers) const;

  Evaluation evaluate(const CenterCache& cache, double sigma, const Vector& weights,
                      ParamGradient* grad = nullptr) const;
  Evaluation evaluate(const ModelParams& params, ParamGradient* grad = nullptr) const;

 private:
  const Dataset* data_;
  const IsSampleSet* samples_;
  double m_;
};

}  // namespace wfcm
