#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "minopt/dataset.hpp"
#include "minopt/encode.hpp"
#include "minopt/mlp.hpp"

namespace minopt {

struct ForwardConfig {
  std::vector<std::size_t> hidden = {256, 256, 256};
  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t steps = 3000;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Independently trained proxy regressor x [, c] -> y_hat. Inputs enter in
/// network coordinates (continuous boxes as [-1,1]^d, categorical as
/// one-hot); the scalar output is standardized and decoded on the way out.
class ForwardModel {
 public:
  ForwardModel() = default;
  ForwardModel(InputSpace space, bool contextual, std::size_t context_dim,
               ForwardConfig cfg, Rng& init_rng);

  const InputSpace& space() const { return enc_.space(); }
  const XEncoder& encoder() const { return enc_; }
  bool contextual() const { return contextual_; }
  std::size_t context_dim() const { return context_dim_; }
  const ForwardConfig& config() const { return cfg_; }

  Standardizer& y_standardizer() { return y_std_; }
  const Standardizer& y_standardizer() const { return y_std_; }
  VectorStandardizer& ctx_standardizer() { return ctx_std_; }
  const VectorStandardizer& ctx_standardizer() const { return ctx_std_; }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  double predict(std::span<const double> x,
                 std::span<const double> context = {}) const;
  std::vector<double> predict_batch(
      std::span<const std::vector<double>> xs,
      std::span<const double> context = {}) const;

  /// d y_hat / d x in raw units via the graph; continuous spaces only.
  std::vector<double> gradient(std::span<const double> x,
                               std::span<const double> context = {}) const;

  /// Network pass on an already-encoded input; returns standardized y_hat.
  NodeId build(Graph& g, NodeId x_enc, NodeId ctx_enc,
               std::vector<NodeId>* param_nodes) const;

 private:
  XEncoder enc_{InputSpace::continuous({0.0}, {1.0})};
  bool contextual_ = false;
  std::size_t context_dim_ = 0;
  ForwardConfig cfg_;
  Mlp net_;
  Standardizer y_std_;
  VectorStandardizer ctx_std_;

  friend ForwardModel load_forward_model(const std::filesystem::path&,
                                         const std::string&);
};

struct ForwardTrainResult {
  ForwardModel model;
  double val_mse = 0.0;  // raw y units, on the held-out split
};

/// MSE training with a seeded 90/10 train/validation split. Unweighted: the
/// proxy should cover the data distribution, not the reweighted one.
ForwardTrainResult train_forward(const Dataset& data, const ForwardConfig& cfg);

/// Projected gradient ascent on the model prediction from one start point;
/// coordinates are clipped to the box every step. Returns the visited point
/// with the best prediction. Continuous spaces only.
std::vector<double> naive_forward_optimize_one(const ForwardModel& model,
                                               std::span<const double> start,
                                               std::size_t steps,
                                               double step_size);

std::vector<std::vector<double>> naive_forward_optimize(
    const ForwardModel& model, std::span<const std::vector<double>> starts,
    std::size_t steps, double step_size);

void save_forward_model(const ForwardModel& m, const std::filesystem::path& dir,
                        const std::string& stem = "forward_model");
ForwardModel load_forward_model(const std::filesystem::path& dir,
                                const std::string& stem = "forward_model");

}  // namespace minopt
