#pragma once

#include <cstddef>
#include <vector>

#include "minopt/tensor.hpp"

namespace minopt {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are zero-initialized and the step
/// count advances by exactly one per update.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, const std::vector<Tensor*>& params);

  void step(const std::vector<Tensor*>& params,
            const std::vector<const Tensor*>& grads);

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Single-tensor convenience wrapper around the same update rule.
void adam_step(Tensor& param, const Tensor& grad, Adam& state);

}  // namespace minopt
