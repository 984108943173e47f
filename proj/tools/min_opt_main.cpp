// min-opt: dataset generation, training, inference, active optimization and
// report aggregation for score-conditioned inverse-map optimizers.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "minopt/active_loop.hpp"
#include "minopt/datagen.hpp"
#include "minopt/dataset.hpp"
#include "minopt/forward_model.hpp"
#include "minopt/inference.hpp"
#include "minopt/inverse_map.hpp"
#include "minopt/oracles.hpp"
#include "minopt/reweight.hpp"
#include "minopt/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minopt;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string oracle;
  std::string mode;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  bool overwrite = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_out = true) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--oracle", args.oracle, "oracle name (registry string)");
  cmd->add_option("--mode", args.mode, "run mode");
  cmd->add_option("--seed", args.seed, "global seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  auto* out = cmd->add_option("--out", args.out_dir, "run directory");
  if (need_out) out->required();
  cmd->add_flag("--overwrite", args.overwrite,
                "allow writing into a non-empty run directory");
  cmd->add_option("--set", args.sets,
                  "config override as dotted.path=value (repeatable)");
}

RunConfig resolve_config(const CommonArgs& args) {
  std::vector<std::string> overrides = args.sets;
  // Flags are just sugar for --set.
  if (!args.oracle.empty()) overrides.push_back("oracle=" + args.oracle);
  if (!args.mode.empty()) overrides.push_back("mode=" + args.mode);
  if (args.seed_set) overrides.push_back("seed=" + std::to_string(args.seed));
  return RunConfig::load(args.config_path, overrides);
}

// Run directories are never mutated silently; reruns need --overwrite or a
// fresh directory.
fs::path prepare_run_dir(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !args.overwrite)
    throw ConfigError("run directory exists and is not empty: " +
                      dir.string() + " (use --overwrite)");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void echo_config(const fs::path& dir, const RunConfig& cfg) {
  write_text(dir / "resolved-config.json", cfg.to_json());
}

GanConfig resolved_gan(const RunConfig& cfg, const InputSpace& space) {
  GanConfig g = cfg.gan;
  if (g.d_z == 0) g.d_z = GanConfig::make_default(space).d_z;
  g.seed = derive_seed(cfg.seed, "gan");
  return g;
}

Dataset load_or_generate(const RunConfig& cfg, const Oracle& oracle) {
  if (!cfg.data.path.empty()) return Dataset::load(cfg.data.path);
  Rng rng(derive_seed(cfg.seed, "datagen"));
  return generate_static_dataset(oracle, cfg.data.n,
                                 parse_policy(cfg.data.policy), rng);
}

int cmd_gen_data(const CommonArgs& args) {
  const RunConfig cfg = resolve_config(args);
  const fs::path dir = prepare_run_dir(args);
  echo_config(dir, cfg);
  const Oracle oracle = make_oracle(cfg.oracle);
  Rng rng(derive_seed(cfg.seed, "datagen"));
  const Dataset ds = generate_static_dataset(oracle, cfg.data.n,
                                             parse_policy(cfg.data.policy), rng);
  ds.save(dir / "dataset.jsonl");
  json summary;
  summary["records"] = ds.size();
  summary["y_max"] = ds.y_max();
  summary["oracle"] = oracle.name;
  write_text(dir / "summary.json", summary.dump(2));
  std::cout << "wrote " << (dir / "dataset.jsonl").string() << " ("
            << ds.size() << " records)\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = resolve_config(args);
  const fs::path dir = prepare_run_dir(args);
  echo_config(dir, cfg);
  const Oracle oracle = make_oracle(cfg.oracle);
  const Dataset ds = load_or_generate(cfg, oracle);
  if (!cfg.data.path.empty()) {
  } else {
    ds.save(dir / "dataset.jsonl");
  }

  ReweightConfig rw = cfg.reweight;
  rw.identity = cfg.mode == RunMode::kBaselineNoReweight;
  const ReweightingScheme scheme = make_reweighting(ds.y_values(), rw);
  write_text(dir / "reweight.json", scheme.to_json());

  GanConfig gan = resolved_gan(cfg, ds.space());
  const GanTrainResult res =
      train_inverse_map(ds, scheme.record_weight, gan);
  save_inverse_map(res.inverse_map, dir);
  {
    NamedTensors t;
    res.discriminator.net().append_named(t, "disc");
    save_checkpoint(dir / "discriminator.ckpt", t);
  }

  ForwardConfig fc = cfg.forward;
  fc.seed = derive_seed(cfg.seed, "forward");
  const ForwardTrainResult fwd = train_forward(ds, fc);
  save_forward_model(fwd.model, dir);

  std::ostringstream loss;
  loss << "step,d_loss,g_loss\n";
  for (std::size_t i = 0; i < res.loss_trace.size(); ++i)
    loss << i << "," << format_double(res.loss_trace[i].first) << ","
         << format_double(res.loss_trace[i].second) << "\n";
  write_text(dir / "loss.csv", loss.str());

  json summary;
  summary["records"] = ds.size();
  summary["forward_val_mse"] = fwd.val_mse;
  summary["gan_steps"] = res.loss_trace.size();
  write_text(dir / "summary.json", summary.dump(2));
  std::cout << "trained on " << ds.size() << " records, forward val MSE "
            << fwd.val_mse << "\n";
  return 0;
}

int cmd_infer(const CommonArgs& args) {
  const RunConfig cfg = resolve_config(args);
  if (cfg.model_dir.empty())
    throw ConfigError("cmd infer needs model_dir (use --set model_dir=DIR)");
  const fs::path dir = prepare_run_dir(args);
  echo_config(dir, cfg);
  const Oracle oracle = make_oracle(cfg.oracle);

  const InverseMap inv = load_inverse_map(cfg.model_dir);
  const ForwardModel fwd = load_forward_model(cfg.model_dir);

  json verdict;
  InferenceConfig ic = cfg.infer;
  if (ic.seed == 0) ic.seed = derive_seed(cfg.seed, "infer");

  if (cfg.mode == RunMode::kBaselineNoInfer) {
    // Sample at the best observed score; report oracle stats over the draws.
    const Dataset ds = load_or_generate(cfg, oracle);
    Rng rng(derive_seed(cfg.seed, "noinfer"));
    const auto samples = naive_best_y(ds, inv, 128, rng);
    double best = -1e300, mean = 0;
    std::vector<double> best_x;
    for (const auto& s : samples) {
      const double y = oracle.evaluate(s.x);
      mean += y;
      if (y > best) {
        best = y;
        best_x = s.x;
      }
    }
    mean /= double(samples.size());
    verdict["method"] = "naive-best-y";
    verdict["x_star"] = best_x;
    verdict["oracle_score"] = best;
    verdict["oracle_score_raw"] = oracle.raw(best);
    verdict["mean_oracle_score"] = mean;
    verdict["dataset_y_max"] = ds.y_max();
  } else if (cfg.mode == RunMode::kBaselineForward) {
    const Dataset ds = load_or_generate(cfg, oracle);
    Rng rng(derive_seed(cfg.seed, "fwd-starts"));
    std::vector<std::vector<double>> starts;
    for (int i = 0; i < 32; ++i) starts.push_back(ds[rng.index(ds.size())].x);
    const auto finals = naive_forward_optimize(fwd, starts, cfg.infer.steps,
                                               cfg.infer.step_size);
    double best = -1e300;
    std::vector<double> best_x;
    for (const auto& x : finals) {
      const double y = oracle.evaluate(x);
      if (y > best) {
        best = y;
        best_x = x;
      }
    }
    verdict["method"] = "naive-forward-optimize";
    verdict["x_star"] = best_x;
    verdict["oracle_score"] = best;
    verdict["oracle_score_raw"] = oracle.raw(best);
    verdict["dataset_y_max"] = ds.y_max();
  } else {
    Rng rng(derive_seed(cfg.seed, "infer-rng"));
    const InferenceResult res = approx_infer(inv, fwd, ic, {}, rng);
    write_text(dir / "inference.json", res.to_json());
    const double y = oracle.evaluate(res.x_star);
    verdict["method"] = "approx-infer";
    verdict["x_star"] = res.x_star;
    verdict["y_tilde"] = res.y_tilde;
    verdict["feasible"] = res.feasible;
    verdict["oracle_score"] = y;
    verdict["oracle_score_raw"] = oracle.raw(y);
  }
  write_text(dir / "result.json", verdict.dump(2));
  std::cout << verdict.dump() << "\n";
  return 0;
}

int cmd_active(const CommonArgs& args) {
  const RunConfig cfg = resolve_config(args);
  const fs::path dir = prepare_run_dir(args);
  echo_config(dir, cfg);
  const Oracle oracle = make_oracle(cfg.oracle);
  const Dataset initial = load_or_generate(cfg, oracle);

  ActiveConfig ac = cfg.active_config();
  if (ac.gan.d_z == 0) ac.gan.d_z = GanConfig::make_default(initial.space()).d_z;

  // Crash-safe history: one flushed row per query.
  std::ofstream csv(dir / "history.csv", std::ios::trunc);
  csv << history_csv_header(initial.space()) << "\n" << std::flush;
  auto on_row = [&](const RunHistoryRow& row) {
    csv << history_csv_row(row, initial.space()) << "\n" << std::flush;
  };

  const auto t0 = std::chrono::steady_clock::now();
  const ActiveResult res =
      cfg.mode == RunMode::kGreedyAblation
          ? greedy_ablation_loop(oracle, initial, ac, on_row)
          : active_loop(oracle, initial, ac, on_row);
  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  save_inverse_map(res.exploitation, dir, "inverse_map");
  save_inverse_map(res.exploration, dir, "inverse_map_explore");
  save_forward_model(res.forward, dir);
  write_text(dir / "inference.json", res.final_answer.to_json());

  json summary;
  summary["queries"] = res.history.rows.size();
  summary["best_so_far"] = res.history.final_best();
  summary["best_so_far_raw"] = oracle.raw(res.history.final_best());
  summary["final_x"] = res.final_answer.x_star;
  const double final_y = oracle.evaluate(res.final_answer.x_star);
  summary["final_oracle_score"] = final_y;
  summary["final_oracle_score_raw"] = oracle.raw(final_y);
  summary["wall_clock_ms"] = wall_ms;  // not covered by the byte-identical contract
  write_text(dir / "summary.json", summary.dump(2));
  std::cout << "best_so_far=" << res.history.final_best()
            << " raw=" << oracle.raw(res.history.final_best()) << "\n";
  return 0;
}

// Median / quartiles over run directories, per iteration and final.
int cmd_report(const std::vector<std::string>& run_dirs,
               const CommonArgs& args) {
  if (run_dirs.empty()) throw ConfigError("cmd report needs run directories");
  const fs::path dir = prepare_run_dir(args);

  std::vector<std::vector<double>> best_curves;
  for (const std::string& rd : run_dirs) {
    std::ifstream in(fs::path(rd) / "history.csv");
    if (!in)
      throw std::runtime_error("no history.csv under " + rd);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::string> cols;
    {
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const auto best_idx =
        std::find(cols.begin(), cols.end(), "best_so_far") - cols.begin();
    std::vector<double> curve;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      for (long i = 0; i <= best_idx; ++i) std::getline(ss, cell, ',');
      curve.push_back(std::stod(cell));
    }
    best_curves.push_back(std::move(curve));
  }

  std::size_t t_max = 0;
  for (const auto& c : best_curves) t_max = std::max(t_max, c.size());

  auto stat_at = [&](std::size_t t, double q) {
    std::vector<double> vals;
    for (const auto& c : best_curves)
      if (t < c.size()) vals.push_back(c[t]);
    return quantile(std::move(vals), q);
  };

  std::ostringstream agg;
  agg << "iter,median,q25,q75\n";
  for (std::size_t t = 0; t < t_max; ++t)
    agg << t << "," << format_double(stat_at(t, 0.5)) << ","
        << format_double(stat_at(t, 0.25)) << ","
        << format_double(stat_at(t, 0.75)) << "\n";
  write_text(dir / "aggregate.csv", agg.str());

  std::vector<double> finals;
  for (const auto& c : best_curves)
    if (!c.empty()) finals.push_back(c.back());
  json rep;
  rep["runs"] = run_dirs.size();
  rep["final_best"] = {{"median", quantile(finals, 0.5)},
                       {"q25", quantile(finals, 0.25)},
                       {"q75", quantile(finals, 0.75)},
                       {"min", *std::min_element(finals.begin(), finals.end())},
                       {"max", *std::max_element(finals.begin(), finals.end())}};
  write_text(dir / "report.json", rep.dump(2));
  std::cout << rep.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model inversion optimizer"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, infer_args, active_args, report_args;
  std::vector<std::string> report_dirs;

  auto* gen = app.add_subcommand("gen-data", "generate an oracle-scored dataset");
  add_common(gen, gen_args);
  auto* train = app.add_subcommand("train", "train inverse map + forward model");
  add_common(train, train_args);
  auto* infer = app.add_subcommand("infer", "run the inference procedure");
  add_common(infer, infer_args);
  auto* active = app.add_subcommand("active", "run the active query loop");
  add_common(active, active_args);
  auto* report = app.add_subcommand("report", "aggregate run directories");
  report->add_option("dirs", report_dirs, "run directories")->required();
  add_common(report, report_args);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (train->parsed()) return cmd_train(train_args);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (active->parsed()) return cmd_active(active_args);
    if (report->parsed()) return cmd_report(report_dirs, report_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
