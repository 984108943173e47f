#include "minopt/datagen.hpp"

#include <stdexcept>

namespace minopt {

SamplingPolicy parse_policy(const std::string& name) {
  if (name == "uniform") return SamplingPolicy::kUniform;
  if (name == "manifold-latent") return SamplingPolicy::kManifoldLatent;
  if (name == "logging-uniform") return SamplingPolicy::kLoggingUniform;
  if (name == "logging-49") return SamplingPolicy::kLogging49;
  throw std::invalid_argument("unknown sampling policy: " + name);
}

std::string policy_name(SamplingPolicy p) {
  switch (p) {
    case SamplingPolicy::kUniform: return "uniform";
    case SamplingPolicy::kManifoldLatent: return "manifold-latent";
    case SamplingPolicy::kLoggingUniform: return "logging-uniform";
    case SamplingPolicy::kLogging49: return "logging-49";
  }
  return "?";
}

std::vector<double> sample_uniform_x(const InputSpace& space, Rng& rng) {
  std::vector<double> x(space.x_dim());
  if (space.is_continuous()) {
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = rng.uniform(space.lower()[i], space.upper()[i]);
  } else {
    for (double& v : x) v = double(rng.index(space.alphabet()));
  }
  return x;
}

Dataset generate_static_dataset(const Oracle& oracle, std::size_t n,
                                SamplingPolicy policy, Rng& rng) {
  if (n < 1) throw std::invalid_argument("generate_static_dataset: need n >= 1");

  const bool logging = policy == SamplingPolicy::kLoggingUniform ||
                       policy == SamplingPolicy::kLogging49;
  if (logging && !oracle.contextual)
    throw std::invalid_argument("logging policy needs a contextual oracle");
  if (policy == SamplingPolicy::kManifoldLatent &&
      !oracle.sample_near_manifold_fn)
    throw std::invalid_argument(
        "manifold-latent policy needs a manifold oracle");

  Dataset ds(oracle.space, oracle.contextual, oracle.context_dim);
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    if (oracle.contextual) {
      r.context = oracle.sample_context_fn(rng);
      const std::size_t arms = oracle.space.alphabet();
      std::size_t arm;
      if (policy == SamplingPolicy::kLogging49) {
        if (rng.uniform() < 0.49) {
          arm = oracle.correct_arm_fn(r.context);
        } else {
          // one of the wrong arms, uniformly
          const std::size_t correct = oracle.correct_arm_fn(r.context);
          arm = rng.index(arms - 1);
          if (arm >= correct) ++arm;
        }
      } else {
        arm = rng.index(arms);
      }
      r.x = {double(arm)};
      r.y = oracle.evaluate(r.context, r.x);
    } else {
      r.x = policy == SamplingPolicy::kManifoldLatent
                ? oracle.sample_near_manifold_fn(rng)
                : sample_uniform_x(oracle.space, rng);
      r.y = oracle.evaluate(r.x);
    }
    ds.add(std::move(r));
  }
  return ds;
}

}  // namespace minopt
