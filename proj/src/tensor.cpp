#include "minopt/tensor.hpp"

#include <cmath>

namespace minopt {

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite())
    throw NonFiniteError("non-finite value produced by " + what);
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace minopt
