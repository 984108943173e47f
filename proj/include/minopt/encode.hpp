#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "minopt/dataset.hpp"
#include "minopt/tensor.hpp"

namespace minopt {

/// Affine scalar standardizer (zero mean, unit variance on the fit sample).
struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;

  double encode(double v) const { return (v - mean) / stddev; }
  double decode(double v) const { return v * stddev + mean; }

  static Standardizer fit(std::span<const double> values);
};

/// Per-coordinate standardizer for context vectors.
struct VectorStandardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }
  void encode(std::span<const double> v, double* out) const;
  static VectorStandardizer fit(std::span<const std::vector<double>> rows,
                                std::size_t dim);
  static VectorStandardizer identity(std::size_t dim);
};

/// Maps raw inputs into network coordinates: continuous boxes become
/// [-1,1]^d, categorical sequences become flattened one-hots. The generator
/// produces network coordinates directly, so bounds hold by construction.
class XEncoder {
 public:
  explicit XEncoder(InputSpace space);

  const InputSpace& space() const { return space_; }
  /// Encoded width: d for continuous, length*alphabet for categorical.
  std::size_t dim() const { return dim_; }

  void encode(std::span<const double> x, double* out) const;
  std::vector<double> encode(std::span<const double> x) const;

  /// Continuous only: network coordinates in [-1,1] back to raw bounds.
  std::vector<double> decode_continuous(std::span<const double> u) const;

  /// Categorical only: per-position argmax of a flattened simplex block.
  std::vector<double> hard_indices(std::span<const double> relaxed) const;

  double mid(std::size_t i) const { return mid_[i]; }
  double half(std::size_t i) const { return half_[i]; }

 private:
  InputSpace space_;
  std::size_t dim_;
  std::vector<double> mid_, half_;  // continuous only
};

/// Dataset packed into network coordinates: x encoded, y standardized,
/// contexts standardized. Row-major, one row per record.
struct EncodedRecords {
  std::size_t n = 0;
  std::size_t x_dim = 0;
  std::size_t ctx_dim = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> ctx;
};

EncodedRecords encode_records(const Dataset& data, const XEncoder& enc,
                              const Standardizer& y_std,
                              const VectorStandardizer& ctx_std);

}  // namespace minopt
