#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "minopt/dataset.hpp"
#include "minopt/forward_model.hpp"
#include "minopt/inference.hpp"
#include "minopt/inverse_map.hpp"
#include "minopt/oracles.hpp"
#include "minopt/reweight.hpp"
#include "minopt/rng.hpp"

namespace minopt {

/// Synthetic (x, y) pairs at unseen high scores: y is drawn from the top
/// score bin and pushed up by strictly positive noise, x is drawn uniformly
/// from the bounded input space. Kept separate from real records so
/// provenance is structural.
struct SyntheticPair {
  std::vector<double> x;
  double y = 0.0;
  double base_y = 0.0;  // the real score the noise was added to
};

struct SyntheticSet {
  std::vector<SyntheticPair> items;
};

SyntheticSet make_synthetic(const Dataset& data, std::size_t k,
                            double noise_scale, std::size_t bins, Rng& rng);

struct ActiveConfig {
  std::size_t queries = 800;
  /// 0 selects max(32, |D0|/20).
  std::size_t k_synthetic = 0;
  /// Std of the positive noise added to synthetic scores; 0 selects the
  /// adaptive temperature of the current dataset.
  double y_noise_scale = 0.0;
  std::size_t steps_per_iter = 200;  // generator updates per model per round
  std::size_t bins = 20;
  double lambda = 0.003;
  /// Greedy ablation: query noise (std in network coordinates for continuous
  /// spaces; per-position resample probability for categorical ones).
  double greedy_noise = 0.1;
  std::uint64_t seed = 0;

  GanConfig gan;
  ForwardConfig forward;
  InferenceConfig infer;
};

struct RunHistoryRow {
  std::size_t iter = 0;
  std::vector<double> x;
  double y = 0.0;          // framework (maximize) score
  double best_so_far = 0.0;
  double cum_regret = 0.0;  // NaN when the optimum is unknown
  double elapsed_ms = 0.0;
};

struct RunHistory {
  std::uint64_t seed = 0;
  std::vector<RunHistoryRow> rows;

  double final_best() const { return rows.empty() ? 0.0 : rows.back().best_so_far; }
};

/// CSV header for a run over the given space. Categorical sequences are one
/// dash-separated column.
std::string history_csv_header(const InputSpace& space);
/// One CSV row. elapsed_ms is written as 0 so reruns are byte-identical;
/// wall-clock lives in the run summary instead.
std::string history_csv_row(const RunHistoryRow& row, const InputSpace& space);

struct ActiveResult {
  RunHistory history;
  Dataset data;  // initial records plus every query
  InverseMap exploration;
  InverseMap exploitation;
  ForwardModel forward;
  InferenceResult final_answer;
};

/// Randomized-labeling loop: each round augments the data with a fresh
/// synthetic set, trains the exploration copy on real+synthetic and the
/// exploitation copy on real only (both warm-started, reweighting rebuilt on
/// their respective data), queries the oracle at the exploration model's
/// sample conditioned on the highest augmented score, and finally runs the
/// inference procedure on the exploitation copy.
ActiveResult active_loop(const Oracle& oracle, const Dataset& initial,
                         const ActiveConfig& cfg,
                         const std::function<void(const RunHistoryRow&)>&
                             on_row = nullptr);

/// Ablation: no synthetic set; queries are exploitation-model samples at the
/// best observed score plus additive noise.
ActiveResult greedy_ablation_loop(const Oracle& oracle, const Dataset& initial,
                                  const ActiveConfig& cfg,
                                  const std::function<void(const RunHistoryRow&)>&
                                      on_row = nullptr);

/// Cumulative regret sum_t (f_star - y_t); non-decreasing when f_star is the
/// true optimum.
std::vector<double> compute_regret(const RunHistory& history, double f_star);

}  // namespace minopt
