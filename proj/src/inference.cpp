#include "minopt/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace minopt {

using nlohmann::json;

double InferenceConfig::resolved_eps2(std::size_t d_z) const {
  if (!std::isnan(eps2)) return eps2;
  // log N(z;0,I) at ||z|| = 2*sqrt(d_z)
  const double d = double(d_z);
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - 2.0 * d;
}

namespace {

double log_prior_of(std::span<const double> z) {
  double ss = 0;
  for (double v : z) ss += v * v;
  return -0.5 * double(z.size()) * std::log(2.0 * std::numbers::pi) -
         0.5 * ss;
}

struct RestartOutcome {
  RestartSummary summary;
  std::vector<double> x;
  std::vector<double> z;
  double y_raw = 0.0;
  std::uint64_t noise_seed = 0;
};

}  // namespace

InferenceResult approx_infer(const InverseMap& inv, const ForwardModel& fwd,
                             const InferenceConfig& cfg,
                             std::span<const double> context, Rng& rng) {
  if (!(cfg.eps1 > 0) || cfg.steps < 1 || cfg.restarts < 1)
    throw std::invalid_argument("approx_infer: bad config");
  if (!(inv.space() == fwd.space()))
    throw std::invalid_argument(
        "approx_infer: inverse map and forward model disagree on the space");
  if (inv.contextual() && context.size() != inv.context_dim())
    throw std::invalid_argument("approx_infer: bad context");

  const std::size_t dz = inv.d_z();
  const double eps2 = cfg.resolved_eps2(dz);
  const Standardizer& fy = fwd.y_standardizer();
  const Standardizer& gy = inv.y_standardizer();
  const bool categorical = !inv.space().is_continuous();
  const std::size_t len = categorical ? inv.space().length() : 0;
  const std::size_t alpha = categorical ? inv.space().alphabet() : 0;

  // Context constants, standardized per model.
  Tensor ctx_g, ctx_f;
  if (inv.contextual()) {
    ctx_g = Tensor(Shape{1, inv.context_dim()});
    inv.ctx_standardizer().encode(context, ctx_g.data());
    ctx_f = Tensor(Shape{1, fwd.context_dim()});
    fwd.ctx_standardizer().encode(context, ctx_f.data());
  }

  const double y_spread = inv.y_max() - inv.y_p90();
  const double logp_const =
      -0.5 * double(dz) * std::log(2.0 * std::numbers::pi);

  std::vector<RestartOutcome> outcomes;
  outcomes.reserve(cfg.restarts);
  std::vector<std::vector<double>> traces;

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rr(derive_seed(cfg.seed == 0 ? rng.next_u64() : cfg.seed, r));
    // One fixed Gumbel noise draw per restart so the categorical relaxation
    // stays a deterministic function of (y, z) during ascent.
    const std::uint64_t noise_seed = derive_seed(rr.next_u64(), "gumbel");
    Tensor gnoise;
    if (categorical) {
      Rng noise_rng(noise_seed);
      gnoise = gumbel_noise(Shape{len, alpha}, noise_rng);
    }

    // Extrapolated init: beyond the best observed score, scale-aware.
    const double y0_raw = inv.y_max() + y_spread * (0.5 + 0.1 * rr.normal());
    double t = fy.encode(y0_raw);  // ascent variable: forward-standardized y
    std::vector<double> z(dz);
    for (double& v : z) v = rr.normal();

    std::vector<double> trace;
    if (cfg.record_trace) trace.reserve(cfg.steps);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
      Graph g;
      NodeId t_n = g.param(Tensor({1, 1}, {t}));
      NodeId z_n = g.param(Tensor({1, dz}, z));
      // raw y, then the generator's own standardization of it
      NodeId y_raw_n = g.affine(t_n, fy.stddev, fy.mean);
      NodeId y_g = g.affine(y_raw_n, 1.0 / gy.stddev, -gy.mean / gy.stddev);
      NodeId gin = g.concat(z_n, y_g);
      if (inv.contextual()) gin = g.concat(gin, g.input(ctx_g));
      NodeId x_net = inv.build(g, gin, categorical ? &gnoise : nullptr, nullptr);
      NodeId yhat =
          fwd.build(g, x_net, inv.contextual() ? g.input(ctx_f) : NodeId{},
                    nullptr);

      // |t - yhat| via relu(r) + relu(-r)
      NodeId resid = g.add(t_n, g.affine(yhat, -1.0, 0.0));
      NodeId abs_resid =
          g.add(g.relu(resid), g.relu(g.affine(resid, -1.0, 0.0)));
      NodeId over1 = g.relu(g.affine(abs_resid, 1.0, -cfg.eps1));
      NodeId pen1 = g.mul(over1, over1);
      NodeId logp = g.affine(g.sum(g.mul(z_n, z_n)), -0.5, logp_const);
      NodeId short2 = g.relu(g.affine(logp, -1.0, eps2));
      NodeId pen2 = g.mul(short2, short2);
      NodeId obj = g.add(g.add(yhat, g.affine(pen1, -cfg.mu1, 0.0)),
                         g.affine(pen2, -cfg.mu2, 0.0));
      g.backward(obj);
      if (cfg.record_trace) trace.push_back(g.value(obj)[0]);

      t += cfg.step_size * g.grad(t_n)[0];
      const Tensor& dzs = g.grad(z_n);
      for (std::size_t i = 0; i < dz; ++i) z[i] += cfg.step_size * dzs[i];
    }
    if (cfg.record_trace) traces.push_back(std::move(trace));

    // Exact post-hoc evaluation from the returned latents. Categorical
    // residuals are re-evaluated on the hard argmax sequence.
    RestartOutcome o;
    o.y_raw = fy.decode(t);
    o.z = z;
    o.noise_seed = noise_seed;
    InvSample s = inv.decode(z, o.y_raw, context, noise_seed);
    o.x = s.x;
    const double pred = fwd.predict(o.x, context);
    o.summary.y_init = y0_raw;
    o.summary.objective = pred;
    o.summary.residual = std::abs(t - fy.encode(pred));
    o.summary.log_prior = log_prior_of(z);
    o.summary.feasible =
        o.summary.residual <= cfg.eps1 && o.summary.log_prior >= eps2;
    outcomes.push_back(std::move(o));
  }

  // Best feasible by forward prediction; ties by lower residual, then lower
  // restart index. With no feasible restart, the minimum residual wins.
  std::size_t best = 0;
  bool any_feasible = false;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& s = outcomes[i].summary;
    if (s.feasible && !any_feasible) {
      best = i;
      any_feasible = true;
      continue;
    }
    if (any_feasible) {
      if (!s.feasible) continue;
      const auto& b = outcomes[best].summary;
      if (s.objective > b.objective ||
          (s.objective == b.objective && s.residual < b.residual))
        best = i;
    } else if (s.residual < outcomes[best].summary.residual) {
      best = i;
    }
  }

  InferenceResult res;
  res.x_star = outcomes[best].x;
  res.y_tilde = outcomes[best].y_raw;
  res.z_star = outcomes[best].z;
  res.noise_seed = outcomes[best].noise_seed;
  res.forward_prediction = outcomes[best].summary.objective;
  res.residual = outcomes[best].summary.residual;
  res.log_prior = outcomes[best].summary.log_prior;
  res.feasible = outcomes[best].summary.feasible;
  res.best_restart = best;
  res.restarts.reserve(outcomes.size());
  for (const auto& o : outcomes) res.restarts.push_back(o.summary);
  res.objective_trace = std::move(traces);
  return res;
}

std::string InferenceResult::to_json() const {
  json j;
  j["x_star"] = x_star;
  j["y_tilde"] = y_tilde;
  j["z_star"] = z_star;
  j["noise_seed"] = noise_seed;
  j["forward_prediction"] = forward_prediction;
  j["residual"] = residual;
  j["log_prior"] = log_prior;
  j["feasible"] = feasible;
  j["best_restart"] = best_restart;
  j["restarts"] = json::array();
  for (const auto& r : restarts)
    j["restarts"].push_back(json{{"y_init", r.y_init},
                                 {"objective", r.objective},
                                 {"residual", r.residual},
                                 {"log_prior", r.log_prior},
                                 {"feasible", r.feasible}});
  return j.dump(2);
}

std::vector<InvSample> naive_best_y(const Dataset& data, const InverseMap& inv,
                                    std::size_t n, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("naive_best_y: empty dataset");
  const Record& best = data[data.argmax_y()];
  return inv.sample(best.y, best.context, n, rng);
}

}  // namespace minopt
