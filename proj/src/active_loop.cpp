#include "minopt/active_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "minopt/datagen.hpp"

namespace minopt {

SyntheticSet make_synthetic(const Dataset& data, std::size_t k,
                            double noise_scale, std::size_t bins, Rng& rng) {
  SyntheticSet out;
  if (k == 0) return out;
  if (data.empty()) throw std::invalid_argument("make_synthetic: empty dataset");
  if (!(noise_scale > 0))
    throw std::invalid_argument("make_synthetic: noise scale must be > 0");

  const auto ys = data.y_values();
  const Binning binning = bin_scores(ys, bins);
  const std::size_t top = binning.bin_of(data.y_max());
  std::vector<std::size_t> top_records;
  for (std::size_t i = 0; i < ys.size(); ++i)
    if (binning.bin_of(ys[i]) == top) top_records.push_back(i);

  out.items.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    SyntheticPair p;
    p.base_y = ys[top_records[rng.index(top_records.size())]];
    double n = rng.normal();
    while (n == 0.0) n = rng.normal();
    p.y = p.base_y + std::abs(n) * noise_scale;
    p.x = sample_uniform_x(data.space(), rng);
    out.items.push_back(std::move(p));
  }
  return out;
}

std::string history_csv_header(const InputSpace& space) {
  std::string h = "iter";
  if (space.is_continuous()) {
    for (std::size_t i = 0; i < space.x_dim(); ++i)
      h += ",x_" + std::to_string(i);
  } else {
    h += ",x";
  }
  return h + ",y,best_so_far,cum_regret,elapsed_ms";
}

std::string history_csv_row(const RunHistoryRow& row, const InputSpace& space) {
  std::string s = std::to_string(row.iter);
  if (space.is_continuous()) {
    for (double v : row.x) s += "," + format_double(v);
  } else {
    s += ",";
    for (std::size_t i = 0; i < row.x.size(); ++i) {
      if (i) s += "-";
      s += std::to_string(static_cast<long long>(row.x[i]));
    }
  }
  s += "," + format_double(row.y);
  s += "," + format_double(row.best_so_far);
  s += ",";
  if (!std::isnan(row.cum_regret)) s += format_double(row.cum_regret);
  s += ",0";
  return s;
}

namespace {

ActiveResult run_loop(const Oracle& oracle, const Dataset& initial,
                      const ActiveConfig& cfg, bool greedy,
                      const std::function<void(const RunHistoryRow&)>& on_row) {
  if (cfg.queries < 1)
    throw std::invalid_argument("active loop: need at least one query");
  if (initial.empty())
    throw std::invalid_argument("active loop: empty initial dataset");
  if (oracle.contextual)
    throw std::invalid_argument("active loop: non-contextual oracles only");

  const std::size_t k_synth =
      cfg.k_synthetic > 0 ? cfg.k_synthetic
                          : std::max<std::size_t>(32, initial.size() / 20);

  Dataset data = initial;

  GanConfig exploit_cfg = cfg.gan;
  exploit_cfg.seed = derive_seed(cfg.seed, "gan-exploit");
  GanConfig explore_cfg = cfg.gan;
  explore_cfg.seed = derive_seed(cfg.seed, "gan-explore");

  GanTrainer exploit(data, exploit_cfg);
  // The exploration copy is standardized against the same real reference;
  // synthetic scores land slightly above the observed range, which is fine.
  std::optional<GanTrainer> explore;
  if (!greedy) explore.emplace(data, explore_cfg);

  const ReweightConfig rw{cfg.bins, cfg.lambda, 0.0, false};

  RunHistory history;
  history.seed = cfg.seed;
  double best = data.y_max();
  double cum_regret = 0.0;
  const bool has_opt = oracle.known_optimum.has_value();
  const double f_star = has_opt ? oracle.known_optimum->value : 0.0;

  const auto t_start = std::chrono::steady_clock::now();

  for (std::size_t t = 0; t < cfg.queries; ++t) {
    // Exploitation copy: real records only, reweighting rebuilt each round.
    {
      const auto ys = data.y_values();
      const ReweightingScheme scheme = make_reweighting(ys, rw);
      exploit.run_steps(data, scheme.record_weight, cfg.steps_per_iter);
    }

    double y_cond = data.y_max();
    std::vector<double> query_x;
    Rng query_rng(derive_seed(derive_seed(cfg.seed, "query"), t));

    if (greedy) {
      query_x = exploit.model().sample(y_cond, {}, 1, query_rng)[0].x;
      if (cfg.greedy_noise > 0) {
        const InputSpace& space = data.space();
        if (space.is_continuous()) {
          const XEncoder& enc = exploit.model().encoder();
          std::vector<double> u = enc.encode(query_x);
          for (double& v : u)
            v = std::clamp(v + cfg.greedy_noise * query_rng.normal(), -1.0, 1.0);
          query_x = enc.decode_continuous(u);
        } else {
          for (double& v : query_x)
            if (query_rng.uniform() < std::min(cfg.greedy_noise, 1.0))
              v = double(query_rng.index(space.alphabet()));
        }
      }
    } else {
      // Randomized labeling: augment, retrain exploration copy, sample at
      // the highest augmented score.
      Rng synth_rng(derive_seed(derive_seed(cfg.seed, "synthetic"), t));
      const double noise_scale = cfg.y_noise_scale > 0
                                     ? cfg.y_noise_scale
                                     : adaptive_tau(data.y_values());
      const SyntheticSet synth =
          make_synthetic(data, k_synth, noise_scale, cfg.bins, synth_rng);

      Dataset augmented = data;
      for (const SyntheticPair& p : synth.items)
        augmented.add(Record{{}, p.x, p.y});
      const auto ys_aug = augmented.y_values();
      const ReweightingScheme scheme_aug = make_reweighting(ys_aug, rw);
      explore->run_steps(augmented, scheme_aug.record_weight,
                         cfg.steps_per_iter);

      y_cond = augmented.y_max();
      query_x = explore->model().sample(y_cond, {}, 1, query_rng)[0].x;
    }

    double y_t;
    try {
      y_t = oracle.evaluate(query_x);
    } catch (const std::exception&) {
      // One retry with a fresh z draw, then give up.
      const auto& model = greedy ? exploit.model() : explore->model();
      query_x = model.sample(y_cond, {}, 1, query_rng)[0].x;
      y_t = oracle.evaluate(query_x);
    }

    data.add(Record{{}, query_x, y_t});
    best = std::max(best, y_t);
    if (has_opt) cum_regret += f_star - y_t;

    RunHistoryRow row;
    row.iter = t;
    row.x = query_x;
    row.y = y_t;
    row.best_so_far = best;
    row.cum_regret = has_opt ? cum_regret
                             : std::numeric_limits<double>::quiet_NaN();
    row.elapsed_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t_start)
            .count();
    if (on_row) on_row(row);
    history.rows.push_back(std::move(row));
  }

  // Final answer: inference on the exploitation copy against a forward model
  // trained on everything observed.
  ForwardConfig fwd_cfg = cfg.forward;
  fwd_cfg.seed = derive_seed(cfg.seed, "forward");
  ForwardTrainResult fwd = train_forward(data, fwd_cfg);

  InferenceConfig inf_cfg = cfg.infer;
  if (inf_cfg.seed == 0) inf_cfg.seed = derive_seed(cfg.seed, "infer");
  Rng infer_rng(derive_seed(cfg.seed, "infer-rng"));
  InferenceResult final_answer =
      approx_infer(exploit.model(), fwd.model, inf_cfg, {}, infer_rng);

  ActiveResult result{std::move(history),
                      std::move(data),
                      greedy ? exploit.model() : explore->model(),
                      exploit.model(),
                      std::move(fwd.model),
                      std::move(final_answer)};
  return result;
}

}  // namespace

ActiveResult active_loop(const Oracle& oracle, const Dataset& initial,
                         const ActiveConfig& cfg,
                         const std::function<void(const RunHistoryRow&)>& on_row) {
  return run_loop(oracle, initial, cfg, false, on_row);
}

ActiveResult greedy_ablation_loop(
    const Oracle& oracle, const Dataset& initial, const ActiveConfig& cfg,
    const std::function<void(const RunHistoryRow&)>& on_row) {
  return run_loop(oracle, initial, cfg, true, on_row);
}

std::vector<double> compute_regret(const RunHistory& history, double f_star) {
  if (!std::isfinite(f_star))
    throw std::invalid_argument("compute_regret: unknown optimum");
  std::vector<double> curve;
  curve.reserve(history.rows.size());
  double acc = 0;
  for (const auto& row : history.rows) {
    acc += f_star - row.y;
    curve.push_back(acc);
  }
  return curve;
}

}  // namespace minopt
