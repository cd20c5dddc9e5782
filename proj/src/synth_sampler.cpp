#include "wfcm/synth_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "wfcm/core_model.hpp"
#include "wfcm/random.hpp"

namespace wfcm {
namespace {

double auto_jump_scale(const ModelParams& params, double local_sd) {
  const int k = params.k();
  if (k < 2) return 5.0 * local_sd;
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      total += (params.centers().row(a) - params.centers().row(b)).norm();
      ++pairs;
    }
  }
  const double mean = total / pairs;
  return mean > 0.0 ? mean : 5.0 * local_sd;
}

}  // namespace

void ChainConfig::validate(int dim) const {
  if (iterations < 1) throw validation_error("chain iterations must be >= 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw validation_error("burn-in fraction must be in [0, 1)");
  if (!(local_step_sd > 0.0)) throw validation_error("local step sd must be positive");
  if (!(jump_probability >= 0.0 && jump_probability <= 1.0)) throw validation_error("jump probability must be in [0, 1]");
  if (jump_scale && !(*jump_scale > 0.0)) throw validation_error("jump scale must be positive");
  if (thinning < 0) throw validation_error("thinning must be >= 1 (0 selects auto)");
  if (initial_point && initial_point->size() != dim) throw validation_error("initial point has the wrong dimension");
}

ChainConfig default_chain(int count, std::uint64_t seed, int steps_per_point) {
  if (count < 1 || steps_per_point < 1) throw validation_error("count and steps per point must be >= 1");
  ChainConfig c;
  c.seed = seed;
  const double kept = static_cast<double>(count) * steps_per_point;
  c.iterations = static_cast<int>(std::min(2e9, std::max(20000.0, std::ceil(kept / (1.0 - c.burn_in_fraction)))));
  return c;
}

ChainOutput mh_sample(const ModelParams& params, int count, const ChainConfig& config) {
  if (count < 1) throw validation_error("sample count must be >= 1");
  const int d = params.dim();
  config.validate(d);

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ChainDiagnostics diag;
  diag.seed = config.seed;
  diag.jump_scale = config.jump_scale.value_or(auto_jump_scale(params, config.local_step_sd));

  int iterations = config.iterations;
  int burn_in = static_cast<int>(std::floor(config.burn_in_fraction * iterations));
  int thin = config.thinning;
  if (thin == 0) {
    thin = std::max(1, (iterations - burn_in) / count);
  }
  // Make sure one chain yields `count` kept points.
  if ((iterations - burn_in) / thin < count) {
    const int kept_needed = count * thin;
    iterations = static_cast<int>(std::ceil(kept_needed / (1.0 - config.burn_in_fraction))) + 1;
    burn_in = static_cast<int>(std::floor(config.burn_in_fraction * iterations));
    while ((iterations - burn_in) / thin < count) {
      ++iterations;
      burn_in = static_cast<int>(std::floor(config.burn_in_fraction * iterations));
    }
  }
  diag.iterations = iterations;
  diag.burn_in = burn_in;
  diag.thinning = thin;

  Vector x(d);
  if (config.initial_point) {
    x = *config.initial_point;
  } else {
    std::uniform_int_distribution<int> pick(0, params.k() - 1);
    const int j = pick(rng);
    for (int c = 0; c < d; ++c) x[c] = params.centers()(j, c) + config.local_step_sd * normal(rng);
  }
  double e = energy({x.data(), static_cast<std::size_t>(d)}, params);

  RowMatrix out(count, d);
  Vector proposal(d);
  Vector sums = Vector::Zero(d);
  long accepted = 0;
  long post_burn = 0;
  int stored = 0;
  for (int t = 0; t < iterations && stored < count; ++t) {
    const double scale = unit(rng) < config.jump_probability ? diag.jump_scale : config.local_step_sd;
    for (int c = 0; c < d; ++c) proposal[c] = x[c] + scale * normal(rng);
    const double e_new = energy({proposal.data(), static_cast<std::size_t>(d)}, params);
    const double log_ratio = e - e_new;
    const bool accept = log_ratio >= 0.0 || std::log(unit(rng)) < log_ratio;
    if (accept) {
      x = proposal;
      e = e_new;
    }
    if (t >= burn_in) {
      ++post_burn;
      if (accept) ++accepted;
      sums += x;
      if ((t - burn_in + 1) % thin == 0) out.row(stored++) = x.transpose();
    }
  }
  diag.acceptance_rate = post_burn > 0 ? static_cast<double>(accepted) / post_burn : 0.0;
  diag.chain_means = post_burn > 0 ? Vector(sums / static_cast<double>(post_burn)) : x;
  if (diag.acceptance_rate < 0.01 || diag.acceptance_rate > 0.99) {
    diag.warnings.emplace_back("acceptance-rate-out-of-range");
  }
  return ChainOutput{Dataset(std::move(out)), std::move(diag)};
}

}  // namespace wfcm
