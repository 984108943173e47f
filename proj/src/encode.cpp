#include "minopt/encode.hpp"

#include <algorithm>
#include <stdexcept>

namespace minopt {

Standardizer Standardizer::fit(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("standardizer: empty sample");
  double m = 0;
  for (double v : values) m += v;
  m /= double(values.size());
  double var = 0;
  for (double v : values) var += (v - m) * (v - m);
  var /= double(values.size());
  Standardizer s;
  s.mean = m;
  s.stddev = std::sqrt(var);
  if (s.stddev < 1e-12) s.stddev = 1.0;  // degenerate sample: shift only
  return s;
}

void VectorStandardizer::encode(std::span<const double> v, double* out) const {
  for (std::size_t i = 0; i < mean.size(); ++i)
    out[i] = (v[i] - mean[i]) / stddev[i];
}

VectorStandardizer VectorStandardizer::fit(
    std::span<const std::vector<double>> rows, std::size_t dim) {
  VectorStandardizer s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 1.0);
  if (rows.empty()) return s;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += r[i];
  for (double& m : s.mean) m /= double(rows.size());
  std::vector<double> var(dim, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i)
      var[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
  for (std::size_t i = 0; i < dim; ++i) {
    const double sd = std::sqrt(var[i] / double(rows.size()));
    s.stddev[i] = sd < 1e-12 ? 1.0 : sd;
  }
  return s;
}

VectorStandardizer VectorStandardizer::identity(std::size_t dim) {
  VectorStandardizer s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 1.0);
  return s;
}

XEncoder::XEncoder(InputSpace space) : space_(std::move(space)) {
  if (space_.is_continuous()) {
    dim_ = space_.x_dim();
    mid_.resize(dim_);
    half_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      mid_[i] = 0.5 * (space_.lower()[i] + space_.upper()[i]);
      half_[i] = 0.5 * (space_.upper()[i] - space_.lower()[i]);
    }
  } else {
    dim_ = space_.length() * space_.alphabet();
  }
}

void XEncoder::encode(std::span<const double> x, double* out) const {
  if (space_.is_continuous()) {
    for (std::size_t i = 0; i < dim_; ++i)
      out[i] = (x[i] - mid_[i]) / half_[i];
  } else {
    std::fill(out, out + dim_, 0.0);
    const std::size_t a = space_.alphabet();
    for (std::size_t p = 0; p < space_.length(); ++p)
      out[p * a + static_cast<std::size_t>(x[p])] = 1.0;
  }
}

std::vector<double> XEncoder::encode(std::span<const double> x) const {
  std::vector<double> out(dim_);
  encode(x, out.data());
  return out;
}

std::vector<double> XEncoder::decode_continuous(
    std::span<const double> u) const {
  if (!space_.is_continuous())
    throw std::logic_error("decode_continuous on categorical space");
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = mid_[i] + half_[i] * u[i];
  return x;
}

EncodedRecords encode_records(const Dataset& data, const XEncoder& enc,
                              const Standardizer& y_std,
                              const VectorStandardizer& ctx_std) {
  EncodedRecords out;
  out.n = data.size();
  out.x_dim = enc.dim();
  out.ctx_dim = data.contextual() ? data.context_dim() : 0;
  out.x.resize(out.n * out.x_dim);
  out.y.resize(out.n);
  out.ctx.resize(out.n * out.ctx_dim);
  for (std::size_t i = 0; i < out.n; ++i) {
    const Record& r = data[i];
    enc.encode(r.x, out.x.data() + i * out.x_dim);
    out.y[i] = y_std.encode(r.y);
    if (out.ctx_dim)
      ctx_std.encode(r.context, out.ctx.data() + i * out.ctx_dim);
  }
  return out;
}

std::vector<double> XEncoder::hard_indices(
    std::span<const double> relaxed) const {
  if (space_.is_continuous())
    throw std::logic_error("hard_indices on continuous space");
  const std::size_t a = space_.alphabet();
  std::vector<double> seq(space_.length());
  for (std::size_t p = 0; p < space_.length(); ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < a; ++c)
      if (relaxed[p * a + c] > relaxed[p * a + best]) best = c;
    seq[p] = double(best);
  }
  return seq;
}

}  // namespace minopt
