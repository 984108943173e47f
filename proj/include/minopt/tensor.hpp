#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace minopt {

/// Raised when any numeric op produces a NaN or infinity. Non-finite values
/// are never propagated silently.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of doubles. No views or strides; slicing copies.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size())
      throw ShapeError("tensor data length does not match shape");
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor full(Shape shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  /// Number of rows when viewed as a matrix over the last axis.
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const;

  /// Throws NonFiniteError mentioning `what` if any entry is NaN/Inf.
  void require_finite(const std::string& what) const;

  static std::size_t count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_str(const Shape& s);

}  // namespace minopt
