#pragma once

#include <string>

#include "minopt/dataset.hpp"
#include "minopt/oracles.hpp"
#include "minopt/rng.hpp"

namespace minopt {

enum class SamplingPolicy {
  kUniform,         // x uniform in the input space
  kManifoldLatent,  // near-manifold draws (manifold task only)
  kLoggingUniform,  // contextual: arms chosen uniformly
  kLogging49,       // contextual: correct arm 49% of the time
};

SamplingPolicy parse_policy(const std::string& name);
std::string policy_name(SamplingPolicy p);

/// Builds n oracle-scored records. Pure function of (oracle, n, policy, seed).
Dataset generate_static_dataset(const Oracle& oracle, std::size_t n,
                                SamplingPolicy policy, Rng& rng);

/// One uniform draw from an input space.
std::vector<double> sample_uniform_x(const InputSpace& space, Rng& rng);

}  // namespace minopt
