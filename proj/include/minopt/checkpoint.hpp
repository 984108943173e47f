#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "minopt/tensor.hpp"

namespace minopt {

/// Ordered list of named parameter tensors. Order is preserved so that
/// writes are deterministic and round-trips are bit-exact.
struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t) {
    items.emplace_back(std::move(name), std::move(t));
  }
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// Binary checkpoint: magic "MINCKPT1", then per tensor: u32 name length,
/// UTF-8 name, u32 rank, u32 extents, raw little-endian f64 payload.
void save_checkpoint(const std::filesystem::path& path,
                     const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace minopt
