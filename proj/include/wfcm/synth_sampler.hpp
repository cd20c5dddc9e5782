#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wfcm/types.hpp"

namespace wfcm {

struct ChainConfig {
  int iterations = 20000;
  double burn_in_fraction = 0.2;
  double local_step_sd = 1.2;
  double jump_probability = 0.1;
  std::optional<double> jump_scale;  // empty = auto (mean pairwise center distance)
  int thinning = 0;                  // 0 = auto
  std::uint64_t seed = 1;
  std::optional<Vector> initial_point;  // empty = a random center plus local noise

  void validate(int dim) const;
};

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  Vector chain_means;
  int iterations = 0;
  int burn_in = 0;
  int thinning = 1;
  double jump_scale = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct ChainOutput {
  Dataset samples;
  ChainDiagnostics diagnostics;
};

/// Random-walk Metropolis–Hastings on the unnormalized density exp(−E_θ(x)).
/// A step is a local Gaussian move, or with probability jump_probability an
/// isotropic jump at the inter-center scale. Auto thinning is
/// max(1, ⌊kept / count⌋); the chain is extended when that still falls short.
ChainOutput mh_sample(const ModelParams& params, int count, const ChainConfig& config);

/// Chain sized for `count` points: `steps_per_point` post-burn-in steps per
/// returned point (never fewer than 20000 iterations), so auto thinning keeps
/// successive draws close to independent even when clusters are far apart.
ChainConfig default_chain(int count, std::uint64_t seed, int steps_per_point = 1000);

}  // namespace wfcm
