#include "minopt/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace minopt {

using nlohmann::json;

RunMode parse_mode(const std::string& name) {
  if (name == "static") return RunMode::kStatic;
  if (name == "active") return RunMode::kActive;
  if (name == "greedy-ablation") return RunMode::kGreedyAblation;
  if (name == "baseline-forward") return RunMode::kBaselineForward;
  if (name == "baseline-noinfer") return RunMode::kBaselineNoInfer;
  if (name == "baseline-noreweight") return RunMode::kBaselineNoReweight;
  throw ConfigError("unknown mode: " + name);
}

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::kStatic: return "static";
    case RunMode::kActive: return "active";
    case RunMode::kGreedyAblation: return "greedy-ablation";
    case RunMode::kBaselineForward: return "baseline-forward";
    case RunMode::kBaselineNoInfer: return "baseline-noinfer";
    case RunMode::kBaselineNoReweight: return "baseline-noreweight";
  }
  return "?";
}

namespace {

// Known keys, one dotted path per leaf. Strict parsing walks the document
// and reports every unknown path at once.
const std::vector<std::string> kKnownKeys = {
    "oracle", "mode", "seed", "model_dir",
    "data.n", "data.policy", "data.path",
    "gan.d_z", "gan.hidden", "gan.lr_g", "gan.lr_d", "gan.batch", "gan.steps",
    "gan.d_steps", "gan.gumbel_tau", "gan.instance_noise", "gan.leaky_slope",
    "forward.hidden", "forward.lr", "forward.batch", "forward.steps",
    "forward.val_fraction",
    "reweight.bins", "reweight.lambda", "reweight.tau",
    "infer.eps1", "infer.eps2", "infer.mu1", "infer.mu2", "infer.steps",
    "infer.step_size", "infer.restarts",
    "active.queries", "active.k_synthetic", "active.y_noise_scale",
    "active.steps_per_iter", "active.greedy_noise",
};

void collect_paths(const json& j, const std::string& prefix,
                   std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const bool known_section =
        path == "data" || path == "gan" || path == "forward" ||
        path == "reweight" || path == "infer" || path == "active";
    if (value.is_object() && known_section) {
      collect_paths(value, path, out);
    } else {
      out.push_back(path);
    }
  }
}

json* locate(json& root, const std::string& dotted, bool create) {
  json* cur = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (dot == std::string::npos) {
      if (!create && !cur->contains(key)) return nullptr;
      return &(*cur)[key];
    }
    if (!create && !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

template <typename T>
void read_if(const json& root, const std::string& dotted, T& out) {
  const json* cur = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!cur->is_object() || !cur->contains(key)) return;
    cur = &cur->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_null()) return;  // null keeps the default
  try {
    out = cur->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + dotted + ": " + cur->dump());
  }
}

}  // namespace

RunConfig RunConfig::load(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config parse error: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
  }

  for (const std::string& ov : overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got: " + ov);
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unquoted strings are taken verbatim
    }
    *locate(doc, key, true) = value;
  }

  // Strict key check: every offending key reported in one error.
  std::vector<std::string> paths;
  collect_paths(doc, "", paths);
  std::string unknown;
  for (const std::string& p : paths) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), p) ==
        kKnownKeys.end()) {
      if (!unknown.empty()) unknown += ", ";
      unknown += p;
    }
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);

  RunConfig cfg;
  read_if(doc, "oracle", cfg.oracle);
  std::string mode = mode_name(cfg.mode);
  read_if(doc, "mode", mode);
  cfg.mode = parse_mode(mode);
  read_if(doc, "seed", cfg.seed);
  read_if(doc, "model_dir", cfg.model_dir);

  read_if(doc, "data.n", cfg.data.n);
  read_if(doc, "data.policy", cfg.data.policy);
  read_if(doc, "data.path", cfg.data.path);

  cfg.gan.d_z = 0;  // auto unless set
  read_if(doc, "gan.d_z", cfg.gan.d_z);
  read_if(doc, "gan.hidden", cfg.gan.hidden);
  read_if(doc, "gan.lr_g", cfg.gan.lr_g);
  read_if(doc, "gan.lr_d", cfg.gan.lr_d);
  read_if(doc, "gan.batch", cfg.gan.batch);
  read_if(doc, "gan.steps", cfg.gan.steps);
  read_if(doc, "gan.d_steps", cfg.gan.d_steps);
  read_if(doc, "gan.gumbel_tau", cfg.gan.gumbel_tau);
  read_if(doc, "gan.instance_noise", cfg.gan.instance_noise);
  read_if(doc, "gan.leaky_slope", cfg.gan.leaky_slope);

  read_if(doc, "forward.hidden", cfg.forward.hidden);
  read_if(doc, "forward.lr", cfg.forward.lr);
  read_if(doc, "forward.batch", cfg.forward.batch);
  read_if(doc, "forward.steps", cfg.forward.steps);
  read_if(doc, "forward.val_fraction", cfg.forward.val_fraction);

  read_if(doc, "reweight.bins", cfg.reweight.bins);
  read_if(doc, "reweight.lambda", cfg.reweight.lambda);
  read_if(doc, "reweight.tau", cfg.reweight.tau);

  read_if(doc, "infer.eps1", cfg.infer.eps1);
  read_if(doc, "infer.eps2", cfg.infer.eps2);
  read_if(doc, "infer.mu1", cfg.infer.mu1);
  read_if(doc, "infer.mu2", cfg.infer.mu2);
  read_if(doc, "infer.steps", cfg.infer.steps);
  read_if(doc, "infer.step_size", cfg.infer.step_size);
  read_if(doc, "infer.restarts", cfg.infer.restarts);

  read_if(doc, "active.queries", cfg.active.queries);
  read_if(doc, "active.k_synthetic", cfg.active.k_synthetic);
  read_if(doc, "active.y_noise_scale", cfg.active.y_noise_scale);
  read_if(doc, "active.steps_per_iter", cfg.active.steps_per_iter);
  read_if(doc, "active.greedy_noise", cfg.active.greedy_noise);
  return cfg;
}

std::string RunConfig::to_json() const {
  json j;
  j["oracle"] = oracle;
  j["mode"] = mode_name(mode);
  j["seed"] = seed;
  j["model_dir"] = model_dir;
  j["data"] = {{"n", data.n}, {"policy", data.policy}, {"path", data.path}};
  j["gan"] = {{"d_z", gan.d_z},
              {"hidden", gan.hidden},
              {"lr_g", gan.lr_g},
              {"lr_d", gan.lr_d},
              {"batch", gan.batch},
              {"steps", gan.steps},
              {"d_steps", gan.d_steps},
              {"gumbel_tau", gan.gumbel_tau},
              {"instance_noise", gan.instance_noise},
              {"leaky_slope", gan.leaky_slope}};
  j["forward"] = {{"hidden", forward.hidden},
                  {"lr", forward.lr},
                  {"batch", forward.batch},
                  {"steps", forward.steps},
                  {"val_fraction", forward.val_fraction}};
  j["reweight"] = {{"bins", reweight.bins},
                   {"lambda", reweight.lambda},
                   {"tau", reweight.tau}};
  j["infer"] = {{"eps1", infer.eps1},
                {"eps2", std::isnan(infer.eps2) ? json() : json(infer.eps2)},
                {"mu1", infer.mu1},
                {"mu2", infer.mu2},
                {"steps", infer.steps},
                {"step_size", infer.step_size},
                {"restarts", infer.restarts}};
  j["active"] = {{"queries", active.queries},
                 {"k_synthetic", active.k_synthetic},
                 {"y_noise_scale", active.y_noise_scale},
                 {"steps_per_iter", active.steps_per_iter},
                 {"greedy_noise", active.greedy_noise}};
  return j.dump(2);
}

ActiveConfig RunConfig::active_config() const {
  ActiveConfig a;
  a.queries = active.queries;
  a.k_synthetic = active.k_synthetic;
  a.y_noise_scale = active.y_noise_scale;
  a.steps_per_iter = active.steps_per_iter;
  a.bins = reweight.bins;
  a.lambda = reweight.lambda;
  a.greedy_noise = active.greedy_noise;
  a.seed = seed;
  a.gan = gan;
  a.forward = forward;
  a.infer = infer;
  return a;
}

}  // namespace minopt
