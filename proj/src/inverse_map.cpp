#include "minopt/inverse_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace minopt {

using nlohmann::json;

GanConfig GanConfig::make_default(const InputSpace& space) {
  GanConfig cfg;
  cfg.d_z = space.is_continuous() ? 32 : 16;
  return cfg;
}

// ---------------------------------------------------------------------------
// InverseMap
// ---------------------------------------------------------------------------

InverseMap::InverseMap(InputSpace space, bool contextual,
                       std::size_t context_dim, GanConfig cfg, Rng& init_rng)
    : enc_(std::move(space)),
      contextual_(contextual),
      context_dim_(contextual ? context_dim : 0),
      cfg_(std::move(cfg)) {
  MlpConfig mc;
  mc.in = input_dim();
  mc.out = enc_.dim();
  mc.hidden = cfg_.hidden;
  mc.act = Activation::kLeakyRelu;
  mc.leaky_slope = cfg_.leaky_slope;
  net_ = Mlp::init(mc, init_rng);
  ctx_std_ = VectorStandardizer::identity(context_dim_);
}

NodeId InverseMap::build(Graph& g, NodeId gen_input, const Tensor* gumbel,
                         std::vector<NodeId>* param_nodes) const {
  NodeId out = net_.build(g, gen_input, param_nodes);
  if (space().is_continuous()) return g.tanh(out);
  // Per-position Gumbel-softmax over the alphabet.
  if (gumbel == nullptr)
    throw std::logic_error("categorical generator needs gumbel noise");
  const std::size_t batch = g.value(gen_input).extent(0);
  const std::size_t len = space().length(), a = space().alphabet();
  NodeId logits = g.reshape(out, Shape{batch * len, a});
  NodeId relaxed = gumbel_softmax(g, logits, *gumbel, cfg_.gumbel_tau);
  return g.reshape(relaxed, Shape{batch, len * a});
}

namespace {

void relax_row(std::span<const double> logits, std::span<const double> noise,
               double tau, std::size_t len, std::size_t a, double* out) {
  for (std::size_t p = 0; p < len; ++p) {
    double mx = -1e300;
    for (std::size_t c = 0; c < a; ++c) {
      out[p * a + c] = (logits[p * a + c] + noise[p * a + c]) / tau;
      mx = std::max(mx, out[p * a + c]);
    }
    double z = 0;
    for (std::size_t c = 0; c < a; ++c)
      z += (out[p * a + c] = std::exp(out[p * a + c] - mx));
    for (std::size_t c = 0; c < a; ++c) out[p * a + c] /= z;
  }
}

}  // namespace

std::vector<InvSample> InverseMap::sample(double y_raw,
                                          std::span<const double> context,
                                          std::size_t n, Rng& rng) const {
  if (contextual_ && context.size() != context_dim_)
    throw std::invalid_argument("inverse map: bad context");
  if (!std::isfinite(y_raw))
    throw std::invalid_argument("inverse map: y not finite");
  std::vector<InvSample> out;
  if (n == 0) return out;

  const std::size_t in_dim = input_dim();
  std::vector<double> input(n * in_dim);
  std::vector<double> ctx_enc(context_dim_);
  if (contextual_) ctx_std_.encode(context, ctx_enc.data());
  const double ys = y_std_.encode(y_raw);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = input.data() + i * in_dim;
    for (std::size_t j = 0; j < cfg_.d_z; ++j) row[j] = rng.normal();
    row[cfg_.d_z] = ys;
    for (std::size_t j = 0; j < context_dim_; ++j)
      row[cfg_.d_z + 1 + j] = ctx_enc[j];
  }
  std::vector<double> raw(n * enc_.dim());
  net_.apply(input.data(), raw.data(), n);

  out.resize(n);
  if (space().is_continuous()) {
    const std::size_t d = enc_.dim();
    std::vector<double> u(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        u[j] = std::tanh(raw[i * d + j]);
      out[i].x = enc_.decode_continuous(u);
    }
  } else {
    const std::size_t len = space().length(), a = space().alphabet();
    std::vector<double> noise(len * a);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : noise) v = -std::log(-std::log(rng.uniform()));
      out[i].relaxed.resize(len * a);
      relax_row({raw.data() + i * len * a, len * a}, noise, cfg_.gumbel_tau,
                len, a, out[i].relaxed.data());
      out[i].x = enc_.hard_indices(out[i].relaxed);
    }
  }
  return out;
}

InvSample InverseMap::decode(std::span<const double> z, double y_raw,
                             std::span<const double> context,
                             std::uint64_t noise_seed) const {
  if (z.size() != cfg_.d_z)
    throw std::invalid_argument("inverse map: bad z dimension");
  std::vector<double> input(input_dim());
  std::copy(z.begin(), z.end(), input.begin());
  input[cfg_.d_z] = y_std_.encode(y_raw);
  if (contextual_) ctx_std_.encode(context, input.data() + cfg_.d_z + 1);

  std::vector<double> raw(enc_.dim());
  net_.apply(input.data(), raw.data(), 1);

  InvSample s;
  if (space().is_continuous()) {
    for (double& v : raw) v = std::tanh(v);
    s.x = enc_.decode_continuous(raw);
  } else {
    const std::size_t len = space().length(), a = space().alphabet();
    Rng noise_rng(noise_seed);
    std::vector<double> noise(len * a);
    for (double& v : noise) v = -std::log(-std::log(noise_rng.uniform()));
    s.relaxed.resize(len * a);
    relax_row(raw, noise, cfg_.gumbel_tau, len, a, s.relaxed.data());
    s.x = enc_.hard_indices(s.relaxed);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Discriminator
// ---------------------------------------------------------------------------

Discriminator::Discriminator(std::size_t x_dim, std::size_t context_dim,
                             const GanConfig& cfg, Rng& init_rng) {
  MlpConfig mc;
  mc.in = x_dim + 1 + context_dim;
  mc.out = 1;
  mc.hidden = cfg.hidden;
  mc.act = Activation::kLeakyRelu;
  mc.leaky_slope = cfg.leaky_slope;
  net_ = Mlp::init(mc, init_rng);
}

NodeId Discriminator::build(Graph& g, NodeId disc_input,
                            std::vector<NodeId>* param_nodes) const {
  return net_.build(g, disc_input, param_nodes);
}

double Discriminator::output(std::span<const double> x_enc, double y_std,
                             std::span<const double> ctx_std) const {
  std::vector<double> in;
  in.reserve(x_enc.size() + 1 + ctx_std.size());
  in.insert(in.end(), x_enc.begin(), x_enc.end());
  in.push_back(y_std);
  in.insert(in.end(), ctx_std.begin(), ctx_std.end());
  double logit = 0;
  net_.apply(in.data(), &logit, 1);
  return logit >= 0 ? 1.0 / (1.0 + std::exp(-logit))
                    : std::exp(logit) / (1.0 + std::exp(logit));
}

// ---------------------------------------------------------------------------
// Weighted sampling
// ---------------------------------------------------------------------------

std::vector<std::size_t> weighted_minibatch(std::span<const double> weights,
                                            std::size_t batch, Rng& rng) {
  if (weights.empty())
    throw std::invalid_argument("weighted_minibatch: no records");
  std::vector<double> cum(weights.size());
  double total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0)
      throw std::invalid_argument("weighted_minibatch: negative weight");
    total += weights[i];
    cum[i] = total;
  }
  if (total <= 0)
    throw std::invalid_argument("weighted_minibatch: all weights zero");
  std::vector<std::size_t> idx(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    idx[b] = std::min<std::size_t>(it - cum.begin(), weights.size() - 1);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

GanTrainer::GanTrainer(const Dataset& reference, const GanConfig& cfg)
    : cfg_(cfg), rng_(derive_seed(cfg.seed, "gan-train")) {
  if (reference.empty())
    throw std::invalid_argument("gan: training dataset is empty");
  Rng init(derive_seed(cfg.seed, "gan-init"));
  gen_ = InverseMap(reference.space(), reference.contextual(),
                    reference.context_dim(), cfg_, init);
  disc_ = Discriminator(gen_.encoder().dim(), gen_.context_dim(), cfg_, init);

  const auto ys = reference.y_values();
  gen_.y_standardizer() = Standardizer::fit(ys);
  if (reference.contextual()) {
    std::vector<std::vector<double>> rows;
    rows.reserve(reference.size());
    for (const Record& r : reference.records()) rows.push_back(r.context);
    gen_.ctx_standardizer() =
        VectorStandardizer::fit(rows, reference.context_dim());
  }
  gen_.set_y_stats(reference.y_max(), quantile(ys, 0.90));

  g_opt_ = Adam({cfg_.lr_g, 0.5, 0.999, 1e-8}, gen_.net().params());
  d_opt_ = Adam({cfg_.lr_d, 0.5, 0.999, 1e-8}, disc_.net().params());
}

void GanTrainer::run_steps(const Dataset& data,
                           std::span<const double> weights,
                           std::size_t n_steps) {
  if (data.empty()) throw std::invalid_argument("gan: empty training data");
  if (weights.size() != data.size())
    throw std::invalid_argument("gan: weights do not align with records");

  const EncodedRecords enc = encode_records(
      data, gen_.encoder(), gen_.y_standardizer(), gen_.ctx_standardizer());
  const auto ys = data.y_values();
  gen_.set_y_stats(data.y_max(), quantile(ys, 0.90));

  std::vector<double> cum(weights.size());
  double total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0)
      throw std::invalid_argument("gan: negative sampling weight");
    total += weights[i];
    cum[i] = total;
  }
  if (total <= 0) throw std::invalid_argument("gan: all weights zero");

  const std::size_t B = cfg_.batch;
  const std::size_t dx = enc.x_dim, dc = enc.ctx_dim, dz = cfg_.d_z;
  const bool categorical = !gen_.space().is_continuous();
  const std::size_t len = categorical ? gen_.space().length() : 0;
  const std::size_t alpha = categorical ? gen_.space().alphabet() : 0;

  auto draw_batch = [&](Tensor& x, Tensor& y, Tensor& ctx) {
    for (std::size_t b = 0; b < B; ++b) {
      const double u = rng_.uniform() * total;
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      const auto i = std::min<std::size_t>(it - cum.begin(), enc.n - 1);
      std::copy_n(enc.x.data() + i * dx, dx, x.data() + b * dx);
      y[b] = enc.y[i];
      if (dc) std::copy_n(enc.ctx.data() + i * dc, dc, ctx.data() + b * dc);
    }
  };
  auto fill_normal = [&](Tensor& t, double stddev) {
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = stddev == 0.0 ? 0.0 : stddev * rng_.normal();
  };
  auto gen_input = [&](Graph& g, const Tensor& z, const Tensor& y,
                       const Tensor& ctx) {
    NodeId in = g.concat(g.input(z), g.input(y));
    if (dc) in = g.concat(in, g.input(ctx));
    return in;
  };
  auto disc_input = [&](Graph& g, NodeId x, NodeId y, const Tensor& ctx) {
    NodeId in = g.concat(x, y);
    if (dc) in = g.concat(in, g.input(ctx));
    return in;
  };

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double sigma =
        cfg_.instance_noise * (1.0 - double(step) / double(n_steps));
    try {
      double d_loss = 0;
      for (std::size_t ds = 0; ds < cfg_.d_steps; ++ds) {
        Tensor x_real(Shape{B, dx}), y(Shape{B, 1}), ctx(Shape{B, std::max<std::size_t>(dc, 1)});
        draw_batch(x_real, y, ctx);
        Tensor z(Shape{B, dz});
        fill_normal(z, 1.0);
        Tensor gnoise;
        if (categorical) gnoise = gumbel_noise(Shape{B * len, alpha}, rng_);
        Tensor noise_r(Shape{B, dx}), noise_f(Shape{B, dx});
        fill_normal(noise_r, sigma);
        fill_normal(noise_f, sigma);

        Graph g;
        NodeId y_n = g.input(y);
        NodeId fake =
            gen_.build(g, gen_input(g, z, y, ctx), categorical ? &gnoise : nullptr,
                       nullptr);
        NodeId real_in =
            disc_input(g, g.add(g.input(x_real), g.input(noise_r)), y_n, ctx);
        NodeId fake_in = disc_input(g, g.add(fake, g.input(noise_f)), y_n, ctx);
        std::vector<NodeId> dp_real, dp_fake;
        NodeId l_real = disc_.build(g, real_in, &dp_real);
        NodeId l_fake = disc_.build(g, fake_in, &dp_fake);
        NodeId loss = g.add(g.mean(g.softplus(g.affine(l_real, -1.0, 0.0))),
                            g.mean(g.softplus(l_fake)));
        g.backward(loss);
        d_loss = g.value(loss)[0];

        std::vector<Tensor> grads;
        grads.reserve(dp_real.size());
        std::vector<const Tensor*> grad_ptr;
        for (std::size_t i = 0; i < dp_real.size(); ++i) {
          Tensor gsum = g.grad(dp_real[i]);
          const Tensor& g2 = g.grad(dp_fake[i]);
          for (std::size_t j = 0; j < gsum.size(); ++j) gsum[j] += g2[j];
          grads.push_back(std::move(gsum));
        }
        for (const Tensor& t : grads) grad_ptr.push_back(&t);
        d_opt_.step(disc_.net().params(), grad_ptr);
      }

      // Generator step (non-saturating loss).
      Tensor x_unused(Shape{B, dx}), y(Shape{B, 1}), ctx(Shape{B, std::max<std::size_t>(dc, 1)});
      draw_batch(x_unused, y, ctx);
      Tensor z(Shape{B, dz});
      fill_normal(z, 1.0);
      Tensor gnoise;
      if (categorical) gnoise = gumbel_noise(Shape{B * len, alpha}, rng_);
      Tensor noise_f(Shape{B, dx});
      fill_normal(noise_f, sigma);

      Graph g;
      NodeId y_n = g.input(y);
      std::vector<NodeId> gp;
      NodeId fake = gen_.build(g, gen_input(g, z, y, ctx),
                               categorical ? &gnoise : nullptr, &gp);
      NodeId fake_in = disc_input(g, g.add(fake, g.input(noise_f)), y_n, ctx);
      NodeId logit = disc_.build(g, fake_in, nullptr);
      NodeId loss = g.mean(g.softplus(g.affine(logit, -1.0, 0.0)));
      g.backward(loss);

      std::vector<const Tensor*> grad_ptr;
      grad_ptr.reserve(gp.size());
      for (NodeId p : gp) grad_ptr.push_back(&g.grad(p));
      g_opt_.step(gen_.net().params(), grad_ptr);

      trace_.emplace_back(d_loss, g.value(loss)[0]);
    } catch (const NonFiniteError& e) {
      throw std::runtime_error("gan training aborted at step " +
                               std::to_string(global_step_) + ": " + e.what());
    }
    ++global_step_;
  }
}

GanTrainResult train_inverse_map(const Dataset& data,
                                 std::span<const double> weights,
                                 const GanConfig& cfg) {
  GanTrainer trainer(data, cfg);
  trainer.run_steps(data, weights, cfg.steps);
  GanTrainResult out;
  out.inverse_map = trainer.model();
  out.discriminator = trainer.discriminator();
  out.loss_trace = trainer.loss_trace();
  return out;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

json space_to_json(const InputSpace& s) {
  json j;
  if (s.is_continuous()) {
    j["kind"] = "continuous";
    j["lower"] = s.lower();
    j["upper"] = s.upper();
  } else {
    j["kind"] = "categorical";
    j["length"] = s.length();
    j["alphabet"] = s.alphabet();
  }
  return j;
}

InputSpace space_from_json(const json& j) {
  if (j.at("kind") == "continuous")
    return InputSpace::continuous(j.at("lower").get<std::vector<double>>(),
                                  j.at("upper").get<std::vector<double>>());
  return InputSpace::categorical(j.at("length").get<std::size_t>(),
                                 j.at("alphabet").get<std::size_t>());
}

json gan_config_to_json(const GanConfig& c) {
  return json{{"d_z", c.d_z},
              {"hidden", c.hidden},
              {"lr_g", c.lr_g},
              {"lr_d", c.lr_d},
              {"batch", c.batch},
              {"steps", c.steps},
              {"d_steps", c.d_steps},
              {"gumbel_tau", c.gumbel_tau},
              {"instance_noise", c.instance_noise},
              {"leaky_slope", c.leaky_slope},
              {"seed", c.seed}};
}

GanConfig gan_config_from_json(const json& j) {
  GanConfig c;
  c.d_z = j.at("d_z").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.lr_g = j.at("lr_g").get<double>();
  c.lr_d = j.at("lr_d").get<double>();
  c.batch = j.at("batch").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.d_steps = j.at("d_steps").get<std::size_t>();
  c.gumbel_tau = j.at("gumbel_tau").get<double>();
  c.instance_noise = j.at("instance_noise").get<double>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_inverse_map(const InverseMap& inv, const std::filesystem::path& dir,
                      const std::string& stem) {
  NamedTensors t;
  inv.net().append_named(t, "gen");
  save_checkpoint(dir / (stem + ".ckpt"), t);

  json side;
  side["space"] = space_to_json(inv.space());
  side["contextual"] = inv.contextual();
  side["context_dim"] = inv.context_dim();
  side["head"] = inv.space().is_continuous() ? "continuous" : "categorical";
  side["config"] = gan_config_to_json(inv.config());
  side["y_std"] = {{"mean", inv.y_standardizer().mean},
                   {"stddev", inv.y_standardizer().stddev}};
  side["ctx_std"] = {{"mean", inv.ctx_standardizer().mean},
                     {"stddev", inv.ctx_standardizer().stddev}};
  side["y_max"] = inv.y_max();
  side["y_p90"] = inv.y_p90();
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  out << side.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write inverse map sidecar");
}

InverseMap load_inverse_map(const std::filesystem::path& dir,
                            const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in)
    throw std::runtime_error("cannot open " + (dir / (stem + ".json")).string());
  json side = json::parse(in);

  InverseMap inv;
  inv.enc_ = XEncoder(space_from_json(side.at("space")));
  inv.contextual_ = side.at("contextual").get<bool>();
  inv.context_dim_ = side.at("context_dim").get<std::size_t>();
  inv.cfg_ = gan_config_from_json(side.at("config"));
  inv.y_std_.mean = side.at("y_std").at("mean").get<double>();
  inv.y_std_.stddev = side.at("y_std").at("stddev").get<double>();
  inv.ctx_std_.mean = side.at("ctx_std").at("mean").get<std::vector<double>>();
  inv.ctx_std_.stddev =
      side.at("ctx_std").at("stddev").get<std::vector<double>>();
  inv.y_max_ = side.at("y_max").get<double>();
  inv.y_p90_ = side.at("y_p90").get<double>();

  MlpConfig mc;
  mc.in = inv.input_dim();
  mc.out = inv.enc_.dim();
  mc.hidden = inv.cfg_.hidden;
  mc.act = Activation::kLeakyRelu;
  mc.leaky_slope = inv.cfg_.leaky_slope;
  const NamedTensors t = load_checkpoint(dir / (stem + ".ckpt"));
  inv.net_ = Mlp::from_named(t, "gen", mc);
  return inv;
}

}  // namespace minopt
