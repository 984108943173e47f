#pragma once

#include <string>
#include <vector>

#include "minopt/autodiff.hpp"
#include "minopt/checkpoint.hpp"
#include "minopt/rng.hpp"

namespace minopt {

enum class Activation { kRelu, kLeakyRelu, kTanh };

struct MlpConfig {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::size_t> hidden;
  Activation act = Activation::kLeakyRelu;
  double leaky_slope = 0.2;
};

/// Fully connected network with a linear output layer. Heads (tanh scaling,
/// softmax, sigmoid) are applied by the owning model.
class Mlp {
 public:
  Mlp() = default;
  static Mlp init(const MlpConfig& cfg, Rng& rng);

  /// Builds the forward pass. When `param_nodes` is non-null the weights
  /// enter the graph as gradient-carrying leaves appended to it in layer
  /// order; otherwise they are constants.
  NodeId build(Graph& g, NodeId input,
               std::vector<NodeId>* param_nodes) const;

  /// Pure-tensor forward pass for hot paths that need no gradients.
  void apply(const double* in, double* out, std::size_t batch) const;

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;

  const MlpConfig& config() const { return cfg_; }
  std::size_t layer_count() const { return weights_.size(); }

  void append_named(NamedTensors& out, const std::string& prefix) const;
  static Mlp from_named(const NamedTensors& in, const std::string& prefix,
                        const MlpConfig& cfg);

 private:
  MlpConfig cfg_;
  std::vector<Tensor> weights_;  // [fan_in, fan_out]
  std::vector<Tensor> biases_;   // [fan_out]
};

}  // namespace minopt
