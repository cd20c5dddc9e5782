#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wfcm/types.hpp"

namespace wfcm {

struct GmmConfig {
  int max_iters = 300;
  double tol = 1e-10;   // relative log-likelihood change that stops EM
  double ridge = 1e-6;  // added to each covariance diagonal, scaled by trace(Σ)/d
};

/// Full-covariance Gaussian mixture used as the importance-sampling proposal.
/// Cholesky factors and log-determinants are computed once at construction.
class ProposalModel {
 public:
  ProposalModel(Vector mix_weights, RowMatrix means, std::vector<Eigen::MatrixXd> covariances);

  int components() const noexcept { return static_cast<int>(means_.rows()); }
  int dim() const noexcept { return static_cast<int>(means_.cols()); }
  const Vector& mix_weights() const noexcept { return mix_weights_; }
  const RowMatrix& means() const noexcept { return means_; }
  const std::vector<Eigen::MatrixXd>& covariances() const noexcept { return covariances_; }
  const Eigen::MatrixXd& cholesky(int g) const { return chol_[static_cast<std::size_t>(g)]; }

  double component_logpdf(int g, std::span<const double> x) const;
  double logpdf(std::span<const double> x) const;

 private:
  Vector mix_weights_;
  RowMatrix means_;
  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_norm_;  // -0.5 (d log 2π + log|Σ_g|)
};

struct GmmFit {
  ProposalModel model;
  double loglik = 0.0;
  std::vector<double> loglik_trace;  // one entry per EM iteration
  int iterations = 0;
  int reseeds = 0;
  bool converged = false;
};

/// EM for a G-component full-covariance mixture. Means are seeded k-means++
/// style from data rows, covariances start at the pooled sample covariance.
GmmFit fit_gmm(const Dataset& data, int components, std::uint64_t seed, const GmmConfig& config = {});

struct GmmSelection {
  ProposalModel model;
  int components = 0;
  std::vector<std::pair<int, double>> bic;  // (G, BIC) for every G actually fitted
  std::vector<std::string> warnings;
};

/// Number of free parameters of a G-component full-covariance mixture in d dims.
int gmm_parameter_count(int components, int dim);

/// Fits every G in [g_min, g_max] and keeps the BIC minimizer. G values with
/// more parameters than observations are skipped with a warning.
GmmSelection select_components(const Dataset& data, int g_min, int g_max, std::uint64_t seed,
                               const GmmConfig& config = {});

double gmm_logpdf(std::span<const double> x, const ProposalModel& model);

/// Ancestral sampling; deterministic for a fixed seed.
Dataset gmm_sample(const ProposalModel& model, int count, std::uint64_t seed);

}  // namespace wfcm
