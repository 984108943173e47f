#include "minopt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minopt {

Mlp Mlp::init(const MlpConfig& cfg, Rng& rng) {
  if (cfg.in == 0 || cfg.out == 0)
    throw std::invalid_argument("mlp: zero input or output width");
  Mlp m;
  m.cfg_ = cfg;
  std::vector<std::size_t> widths;
  widths.push_back(cfg.in);
  for (std::size_t h : cfg.hidden) widths.push_back(h);
  widths.push_back(cfg.out);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    const bool relu_family =
        cfg.act == Activation::kRelu || cfg.act == Activation::kLeakyRelu;
    const double scale = relu_family ? std::sqrt(2.0 / double(fan_in))
                                     : std::sqrt(1.0 / double(fan_in));
    Tensor w(Shape{fan_in, fan_out});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
    m.weights_.push_back(std::move(w));
    m.biases_.emplace_back(Shape{fan_out});
  }
  return m;
}

NodeId Mlp::build(Graph& g, NodeId input,
                  std::vector<NodeId>* param_nodes) const {
  NodeId h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    NodeId w = param_nodes ? g.param(weights_[l]) : g.input(weights_[l]);
    NodeId b = param_nodes ? g.param(biases_[l]) : g.input(biases_[l]);
    if (param_nodes) {
      param_nodes->push_back(w);
      param_nodes->push_back(b);
    }
    h = g.add(g.matmul(h, w), b);
    if (l + 1 < weights_.size()) {
      switch (cfg_.act) {
        case Activation::kRelu: h = g.relu(h); break;
        case Activation::kLeakyRelu: h = g.leaky_relu(h, cfg_.leaky_slope); break;
        case Activation::kTanh: h = g.tanh(h); break;
      }
    }
  }
  return h;
}

void Mlp::apply(const double* in, double* out, std::size_t batch) const {
  std::vector<double> cur(in, in + batch * cfg_.in);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Tensor& w = weights_[l];
    const Tensor& b = biases_[l];
    const std::size_t fan_in = w.extent(0), fan_out = w.extent(1);
    std::vector<double> next(batch * fan_out);
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t c = 0; c < fan_out; ++c) next[r * fan_out + c] = b[c];
    matmul_accumulate(cur.data(), w.data(), next.data(), batch, fan_in,
                      fan_out);
    if (l + 1 < weights_.size()) {
      for (double& v : next) {
        switch (cfg_.act) {
          case Activation::kRelu: v = v > 0 ? v : 0.0; break;
          case Activation::kLeakyRelu:
            v = v > 0 ? v : cfg_.leaky_slope * v;
            break;
          case Activation::kTanh: v = std::tanh(v); break;
        }
      }
    }
    cur = std::move(next);
  }
  std::copy(cur.begin(), cur.end(), out);
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

void Mlp::append_named(NamedTensors& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.add(prefix + ".w" + std::to_string(l), weights_[l]);
    out.add(prefix + ".b" + std::to_string(l), biases_[l]);
  }
}

Mlp Mlp::from_named(const NamedTensors& in, const std::string& prefix,
                    const MlpConfig& cfg) {
  Mlp m;
  m.cfg_ = cfg;
  for (std::size_t l = 0;; ++l) {
    const std::string wn = prefix + ".w" + std::to_string(l);
    if (!in.has(wn)) break;
    m.weights_.push_back(in.get(wn));
    m.biases_.push_back(in.get(prefix + ".b" + std::to_string(l)));
  }
  if (m.weights_.empty())
    throw std::runtime_error("checkpoint: no layers under prefix " + prefix);
  return m;
}

}  // namespace minopt
