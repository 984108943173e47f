#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace minopt {

/// Derive a child seed from a parent seed and a label. Every component of a
/// run pulls its stream from the global seed through this function, so a
/// whole experiment is reproducible from one integer.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Counter-based PRNG (splitmix64). Self-contained so that draws are
/// identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in the open interval (0,1); never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). Identical to the inverse-CDF weighted sampler
  /// evaluated with equal weights, which the identity-reweighting tests rely
  /// on.
  std::size_t index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal via Box-Muller (stateless variant).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Child stream for a named purpose; does not advance this stream.
  Rng split(std::string_view label) const {
    return Rng(derive_seed(state_, label));
  }

 private:
  std::uint64_t state_;
};

}  // namespace minopt
