#include "minopt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace minopt {

Adam::Adam(AdamConfig cfg, const std::vector<Tensor*>& params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void Adam::step(const std::vector<Tensor*>& params,
                const std::vector<const Tensor*>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("adam: parameter/gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    const Tensor& g = *grads[pi];
    Tensor& m = m_[pi];
    Tensor& v = v_[pi];
    if (!p.same_shape(g) || !p.same_shape(m))
      throw ShapeError("adam: shape mismatch at parameter " +
                       std::to_string(pi));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.require_finite("adam update");
  }
}

void adam_step(Tensor& param, const Tensor& grad, Adam& state) {
  state.step({&param}, {&grad});
}

}  // namespace minopt
