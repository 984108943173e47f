#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "minopt/rng.hpp"
#include "minopt/tensor.hpp"

namespace minopt {

/// Handle to a node in a Graph. Valid only for the graph that produced it.
struct NodeId {
  std::uint32_t v = 0;
};

enum class Op : std::uint8_t {
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kMul,
  kRelu,
  kLeakyRelu,
  kTanh,
  kSigmoid,
  kLog,
  kExp,
  kSoftplus,
  kSoftmax,
  kMean,
  kSum,
  kConcat,
  kReshape,
  kAffine,
};

/// Reverse-mode tape over dense tensors. Ops evaluate eagerly on
/// construction; every intermediate value stays cached for backward. Node
/// ids are assigned in creation order, so parents always precede children
/// and backward is a single reverse sweep.
///
/// A graph is single-threaded; independent graphs are safe to use from
/// different threads.
class Graph {
 public:
  /// Constant leaf. Receives no gradient.
  NodeId input(Tensor value);
  /// Leaf that participates in backward (network parameters, or search
  /// variables such as the inference procedure's y and z).
  NodeId param(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  /// Elementwise; the rank-1 operand (either side) broadcasts over the
  /// leading batch extent of a rank-2 operand.
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId leaky_relu(NodeId a, double slope);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId log(NodeId a);
  NodeId exp(NodeId a);
  NodeId softplus(NodeId a);
  /// Softmax along the last axis.
  NodeId softmax(NodeId a);
  NodeId mean(NodeId a);
  NodeId sum(NodeId a);
  /// Concatenate along the last axis (ranks must match, other extents equal).
  NodeId concat(NodeId a, NodeId b);
  NodeId reshape(NodeId a, Shape shape);
  /// scale * x + shift, elementwise with scalar coefficients.
  NodeId affine(NodeId a, double scale, double shift);

  const Tensor& value(NodeId n) const { return nodes_[n.v].value; }

  /// Gradient of the output w.r.t. every param leaf (and any interior node
  /// on a path to one). `output` must be scalar.
  void backward(NodeId output);

  bool has_grad(NodeId n) const { return !nodes_[n.v].grad.shape().empty(); }
  const Tensor& grad(NodeId n) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::array<std::uint32_t, 2> parent{};
    std::uint8_t n_parents = 0;
    bool needs_grad = false;
    double c0 = 0.0;  // op-specific scalar (slope, scale)
    double c1 = 0.0;  // op-specific scalar (shift)
    Tensor value;
    Tensor grad;  // empty until backward touches it
  };

  NodeId push(Node n);
  NodeId unary(Op op, NodeId a, Tensor value, double c0 = 0.0, double c1 = 0.0);
  NodeId binary(Op op, NodeId a, NodeId b, Tensor value);
  Tensor& grad_buf(std::uint32_t idx);
  void backward_into(const Node& n, const Tensor& g);

  std::vector<Node> nodes_;
};

/// out += a @ b (row-major, shapes already checked by the caller).
void matmul_accumulate(const double* a, const double* b, double* out,
                       std::size_t m, std::size_t k, std::size_t n);

/// Relaxed one-hot sample: softmax((logits + Gumbel noise) / temperature)
/// along the last axis. Pure-tensor convenience path.
Tensor gumbel_softmax_sample(const Tensor& logits, double temperature,
                             Rng& rng);

/// Draws standard Gumbel noise with the shape of `logits`.
Tensor gumbel_noise(const Shape& shape, Rng& rng);

/// Graph-building form: differentiable w.r.t. logits at fixed noise.
NodeId gumbel_softmax(Graph& g, NodeId logits, const Tensor& noise,
                      double temperature);

}  // namespace minopt
