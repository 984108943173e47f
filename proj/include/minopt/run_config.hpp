#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "minopt/active_loop.hpp"
#include "minopt/forward_model.hpp"
#include "minopt/inference.hpp"
#include "minopt/inverse_map.hpp"
#include "minopt/reweight.hpp"

namespace minopt {

/// Bad configuration (unknown keys, unparsable values, invalid modes).
/// Maps to exit code 2 at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode {
  kStatic,
  kActive,
  kGreedyAblation,
  kBaselineForward,
  kBaselineNoInfer,
  kBaselineNoReweight,
};

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode m);

struct DataParams {
  std::size_t n = 1000;
  std::string policy = "uniform";
  std::string path;  // optional: load instead of generating
};

struct ActiveParams {
  std::size_t queries = 800;
  std::size_t k_synthetic = 0;   // 0 = max(32, |D0|/20)
  double y_noise_scale = 0.0;    // 0 = adaptive tau
  std::size_t steps_per_iter = 200;
  double greedy_noise = 0.1;
};

/// Fully resolved run description. Every field has a default; unknown keys
/// in a config file or --set override are rejected, all offenders reported
/// at once. One global seed derives every component stream.
struct RunConfig {
  std::string oracle = "quad1d";
  RunMode mode = RunMode::kStatic;
  std::uint64_t seed = 0;
  std::string model_dir;  // cmd_infer: where train left its checkpoints

  DataParams data;
  GanConfig gan;          // gan.d_z == 0 selects the per-head default
  ForwardConfig forward;
  ReweightConfig reweight;
  InferenceConfig infer;
  ActiveParams active;

  /// Parse file (optional) + dotted-path overrides ("gan.batch=32").
  static RunConfig load(const std::string& config_path,
                        const std::vector<std::string>& overrides);

  std::string to_json() const;

  /// The assembled loop config for active modes.
  ActiveConfig active_config() const;
};

}  // namespace minopt
