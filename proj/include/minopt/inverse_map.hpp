#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "minopt/dataset.hpp"
#include "minopt/encode.hpp"
#include "minopt/mlp.hpp"
#include "minopt/optim.hpp"
#include "minopt/rng.hpp"

namespace minopt {

struct GanConfig {
  std::size_t d_z = 32;  // 16 is the categorical default, set by make_default
  std::vector<std::size_t> hidden = {256, 256};
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  std::size_t batch = 64;
  std::size_t steps = 5000;
  std::size_t d_steps = 1;  // discriminator updates per generator update
  double gumbel_tau = 0.75;
  double instance_noise = 0.1;  // decays linearly to 0 over a training run
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;

  static GanConfig make_default(const InputSpace& space);
};

/// One generator draw. For categorical spaces both the relaxed simplex view
/// and the hard argmax sequence are returned; `x` is always a valid point of
/// the input space.
struct InvSample {
  std::vector<double> x;
  std::vector<double> relaxed;  // empty for continuous heads
};

/// Stochastic inverse map (z, y [, c]) -> x. Continuous heads tanh-scale
/// into the box, so samples satisfy the bounds by construction; categorical
/// heads emit per-position Gumbel-softmax simplex points.
class InverseMap {
 public:
  InverseMap() = default;
  InverseMap(InputSpace space, bool contextual, std::size_t context_dim,
             GanConfig cfg, Rng& init_rng);

  const InputSpace& space() const { return enc_.space(); }
  const XEncoder& encoder() const { return enc_; }
  bool contextual() const { return contextual_; }
  std::size_t context_dim() const { return context_dim_; }
  const GanConfig& config() const { return cfg_; }
  std::size_t d_z() const { return cfg_.d_z; }

  Standardizer& y_standardizer() { return y_std_; }
  const Standardizer& y_standardizer() const { return y_std_; }
  VectorStandardizer& ctx_standardizer() { return ctx_std_; }
  const VectorStandardizer& ctx_standardizer() const { return ctx_std_; }

  double y_max() const { return y_max_; }
  double y_p90() const { return y_p90_; }
  void set_y_stats(double y_max, double y_p90) {
    y_max_ = y_max;
    y_p90_ = y_p90;
  }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  /// Generator forward pass in network coordinates: returns [B, dx] in
  /// [-1,1] for continuous heads, or relaxed [B, L*A] for categorical heads
  /// (gumbel noise required, shape [B*L, A]).
  NodeId build(Graph& g, NodeId gen_input, const Tensor* gumbel,
               std::vector<NodeId>* param_nodes) const;

  std::vector<InvSample> sample(double y_raw, std::span<const double> context,
                                std::size_t n, Rng& rng) const;

  /// Deterministic reconstruction of a sample from its latents; categorical
  /// heads re-derive the fixed Gumbel noise from `noise_seed`.
  InvSample decode(std::span<const double> z, double y_raw,
                   std::span<const double> context,
                   std::uint64_t noise_seed) const;

  /// Width of the generator input: d_z + 1 + context_dim.
  std::size_t input_dim() const { return cfg_.d_z + 1 + context_dim_; }

 private:
  XEncoder enc_{InputSpace::continuous({0.0}, {1.0})};
  bool contextual_ = false;
  std::size_t context_dim_ = 0;
  GanConfig cfg_;
  Mlp net_;
  Standardizer y_std_;
  VectorStandardizer ctx_std_;
  double y_max_ = 0.0;
  double y_p90_ = 0.0;

  friend InverseMap load_inverse_map(const std::filesystem::path&,
                                     const std::string&);
};

/// Score-conditioned discriminator over (x, y [, c]); sigmoid(logit) lies in
/// (0,1). Training works on the logit for numerical stability.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(std::size_t x_dim, std::size_t context_dim,
                const GanConfig& cfg, Rng& init_rng);

  NodeId build(Graph& g, NodeId disc_input,
               std::vector<NodeId>* param_nodes) const;

  /// Disc(x|y[,c]) in (0,1); input is already encoded/standardized.
  double output(std::span<const double> x_enc, double y_std,
                std::span<const double> ctx_std) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
};

/// Indices drawn i.i.d. proportional to the weights (inverse-CDF sampling).
/// With all-equal weights the draws coincide exactly with Rng::index.
std::vector<std::size_t> weighted_minibatch(std::span<const double> weights,
                                            std::size_t batch, Rng& rng);

/// Incremental cGAN trainer. Standardizers are fitted once on the reference
/// dataset and stay frozen, so warm-started training across active-loop
/// iterations sees a stable input scale.
class GanTrainer {
 public:
  GanTrainer(const Dataset& reference, const GanConfig& cfg);

  /// Runs `n_steps` generator updates (each preceded by cfg.d_steps
  /// discriminator updates) on the given records with the given sampling
  /// weights. Instance noise decays linearly to zero within this call.
  void run_steps(const Dataset& data, std::span<const double> weights,
                 std::size_t n_steps);

  const InverseMap& model() const { return gen_; }
  InverseMap& model() { return gen_; }
  const Discriminator& discriminator() const { return disc_; }

  /// (discriminator loss, generator loss) per generator step.
  const std::vector<std::pair<double, double>>& loss_trace() const {
    return trace_;
  }

 private:
  GanConfig cfg_;
  InverseMap gen_;
  Discriminator disc_;
  Adam g_opt_, d_opt_;
  Rng rng_;
  std::size_t global_step_ = 0;
  std::vector<std::pair<double, double>> trace_;
};

struct GanTrainResult {
  InverseMap inverse_map;
  Discriminator discriminator;
  std::vector<std::pair<double, double>> loss_trace;
};

/// Adversarial training of the inverse map with importance-weighted
/// minibatch sampling. Deterministic under cfg.seed.
GanTrainResult train_inverse_map(const Dataset& data,
                                 std::span<const double> weights,
                                 const GanConfig& cfg);

void save_inverse_map(const InverseMap& inv, const std::filesystem::path& dir,
                      const std::string& stem = "inverse_map");
InverseMap load_inverse_map(const std::filesystem::path& dir,
                            const std::string& stem = "inverse_map");

}  // namespace minopt
