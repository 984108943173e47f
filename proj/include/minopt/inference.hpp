#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minopt/forward_model.hpp"
#include "minopt/inverse_map.hpp"

namespace minopt {

struct InferenceConfig {
  /// Agreement tolerance, in standardized-y units of the forward model.
  double eps1 = 0.5;
  /// Minimum log-prior of z, in nats. NaN selects the default: the standard
  /// normal log-density at radius 2*sqrt(d_z).
  double eps2 = std::numeric_limits<double>::quiet_NaN();
  double mu1 = 10.0;
  double mu2 = 10.0;
  std::size_t steps = 200;
  double step_size = 0.05;
  std::size_t restarts = 32;
  std::uint64_t seed = 0;
  /// Record the penalized objective per ascent step (diagnostics/tests).
  bool record_trace = false;

  double resolved_eps2(std::size_t d_z) const;
};

struct RestartSummary {
  double y_init = 0.0;       // raw units
  double objective = 0.0;    // forward prediction at the end, raw units
  double residual = 0.0;     // standardized units
  double log_prior = 0.0;
  bool feasible = false;
};

struct InferenceResult {
  std::vector<double> x_star;  // raw coordinates, or hard index sequence
  double y_tilde = 0.0;        // raw units
  std::vector<double> z_star;
  std::uint64_t noise_seed = 0;  // categorical: fixed Gumbel noise stream
  double forward_prediction = 0.0;  // raw units
  double residual = 0.0;            // standardized units
  double log_prior = 0.0;
  bool feasible = false;
  std::size_t best_restart = 0;
  std::vector<RestartSummary> restarts;
  /// Per-restart penalized objective per step; only with record_trace.
  std::vector<std::vector<double>> objective_trace;

  std::string to_json() const;
};

/// Search over (y, z) maximizing the forward model's score of the inverse
/// map's output, with quadratic penalties enforcing forward/inverse
/// agreement and a prior-likelihood floor on z. Gradients flow end-to-end
/// through both networks. The best feasible restart wins; if none is
/// feasible the minimum-residual restart is returned flagged infeasible.
/// Everything reported is recomputed exactly from (z_star, y_tilde).
InferenceResult approx_infer(const InverseMap& inv, const ForwardModel& fwd,
                             const InferenceConfig& cfg,
                             std::span<const double> context, Rng& rng);

/// The no-inference ablation: n samples conditioned on the best observed y.
std::vector<InvSample> naive_best_y(const Dataset& data, const InverseMap& inv,
                                    std::size_t n, Rng& rng);

}  // namespace minopt
