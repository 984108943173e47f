#include "minopt/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "minopt/checkpoint.hpp"
#include "minopt/optim.hpp"

namespace minopt {

using nlohmann::json;

ForwardModel::ForwardModel(InputSpace space, bool contextual,
                           std::size_t context_dim, ForwardConfig cfg,
                           Rng& init_rng)
    : enc_(std::move(space)),
      contextual_(contextual),
      context_dim_(contextual ? context_dim : 0),
      cfg_(std::move(cfg)) {
  MlpConfig mc;
  mc.in = enc_.dim() + context_dim_;
  mc.out = 1;
  mc.hidden = cfg_.hidden;
  mc.act = Activation::kRelu;
  net_ = Mlp::init(mc, init_rng);
  ctx_std_ = VectorStandardizer::identity(context_dim_);
}

double ForwardModel::predict(std::span<const double> x,
                             std::span<const double> context) const {
  if (!enc_.space().contains(x))
    throw std::invalid_argument("forward model: x outside the input space");
  if (contextual_ && context.size() != context_dim_)
    throw std::invalid_argument("forward model: bad context");
  std::vector<double> in(enc_.dim() + context_dim_);
  enc_.encode(x, in.data());
  if (contextual_) ctx_std_.encode(context, in.data() + enc_.dim());
  double out = 0;
  net_.apply(in.data(), &out, 1);
  const double y = y_std_.decode(out);
  if (!std::isfinite(y)) throw NonFiniteError("forward model prediction");
  return y;
}

std::vector<double> ForwardModel::predict_batch(
    std::span<const std::vector<double>> xs,
    std::span<const double> context) const {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict(xs[i], context);
  return out;
}

NodeId ForwardModel::build(Graph& g, NodeId x_enc, NodeId ctx_enc,
                           std::vector<NodeId>* param_nodes) const {
  NodeId in = x_enc;
  if (context_dim_) in = g.concat(in, ctx_enc);
  return net_.build(g, in, param_nodes);
}

std::vector<double> ForwardModel::gradient(std::span<const double> x,
                                           std::span<const double> context) const {
  if (!enc_.space().is_continuous())
    throw std::logic_error("forward model gradient: continuous spaces only");
  Graph g;
  Tensor u(Shape{1, enc_.dim()});
  enc_.encode(x, u.data());
  NodeId u_n = g.param(std::move(u));
  NodeId ctx_n{};
  if (context_dim_) {
    Tensor c(Shape{1, context_dim_});
    ctx_std_.encode(context, c.data());
    ctx_n = g.input(std::move(c));
  }
  NodeId y = build(g, u_n, ctx_n, nullptr);
  g.backward(y);
  const Tensor& du = g.grad(u_n);
  std::vector<double> grad(enc_.dim());
  // d y_raw / d x_i = stddev(y) * d y_std/d u_i / half_i
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = y_std_.stddev * du[i] / enc_.half(i);
  return grad;
}

ForwardTrainResult train_forward(const Dataset& data, const ForwardConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train_forward: empty dataset");

  Rng init(derive_seed(cfg.seed, "fwd-init"));
  ForwardModel model(data.space(), data.contextual(), data.context_dim(), cfg,
                     init);
  const auto ys = data.y_values();
  model.y_standardizer() = Standardizer::fit(ys);
  if (data.contextual()) {
    std::vector<std::vector<double>> rows;
    rows.reserve(data.size());
    for (const Record& r : data.records()) rows.push_back(r.context);
    model.ctx_standardizer() =
        VectorStandardizer::fit(rows, data.context_dim());
  }

  const EncodedRecords enc = encode_records(
      data, model.encoder(), model.y_standardizer(), model.ctx_standardizer());

  // Seeded shuffle, last val_fraction held out.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, "fwd-split"));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[shuffle_rng.index(i)]);
  auto n_val = static_cast<std::size_t>(double(data.size()) * cfg.val_fraction);
  if (n_val == data.size()) n_val = data.size() - 1;
  const std::size_t n_train = data.size() - n_val;

  Adam opt({cfg.lr, 0.9, 0.999, 1e-8}, model.net().params());
  Rng rng(derive_seed(cfg.seed, "fwd-train"));
  const std::size_t B = std::min(cfg.batch, n_train);
  const std::size_t in_dim = enc.x_dim + enc.ctx_dim;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Tensor xin(Shape{B, in_dim}), target(Shape{B, 1});
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t i = order[rng.index(n_train)];
      std::copy_n(enc.x.data() + i * enc.x_dim, enc.x_dim,
                  xin.data() + b * in_dim);
      if (enc.ctx_dim)
        std::copy_n(enc.ctx.data() + i * enc.ctx_dim, enc.ctx_dim,
                    xin.data() + b * in_dim + enc.x_dim);
      target[b] = enc.y[i];
    }
    Graph g;
    std::vector<NodeId> params;
    NodeId pred = model.net().build(g, g.input(std::move(xin)), &params);
    NodeId err = g.add(pred, g.affine(g.input(std::move(target)), -1.0, 0.0));
    NodeId loss = g.mean(g.mul(err, err));
    g.backward(loss);
    std::vector<const Tensor*> grads;
    grads.reserve(params.size());
    for (NodeId p : params) grads.push_back(&g.grad(p));
    opt.step(model.net().params(), grads);
  }

  // Validation MSE in raw y units.
  double mse = 0;
  if (n_val > 0) {
    for (std::size_t v = 0; v < n_val; ++v) {
      const std::size_t i = order[n_train + v];
      std::vector<double> in(in_dim);
      std::copy_n(enc.x.data() + i * enc.x_dim, enc.x_dim, in.data());
      if (enc.ctx_dim)
        std::copy_n(enc.ctx.data() + i * enc.ctx_dim, enc.ctx_dim,
                    in.data() + enc.x_dim);
      double out = 0;
      model.net().apply(in.data(), &out, 1);
      const double err = model.y_standardizer().decode(out) - data[i].y;
      mse += err * err;
    }
    mse /= double(n_val);
  }
  return {std::move(model), mse};
}

std::vector<double> naive_forward_optimize_one(const ForwardModel& model,
                                               std::span<const double> start,
                                               std::size_t steps,
                                               double step_size) {
  if (!model.space().is_continuous())
    throw std::logic_error("naive_forward_optimize: continuous spaces only");
  if (model.contextual())
    throw std::logic_error("naive_forward_optimize: non-contextual only");
  const XEncoder& enc = model.encoder();
  std::vector<double> u = enc.encode(start);

  auto predict_u = [&](const std::vector<double>& uu) {
    double out = 0;
    model.net().apply(uu.data(), &out, 1);
    return out;
  };

  std::vector<double> best_u = u;
  double best_pred = predict_u(u);
  for (std::size_t s = 0; s < steps; ++s) {
    Graph g;
    Tensor ut(Shape{1, u.size()}, u);
    NodeId u_n = g.param(std::move(ut));
    NodeId y = model.build(g, u_n, NodeId{}, nullptr);
    g.backward(y);
    const Tensor& du = g.grad(u_n);
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = std::clamp(u[i] + step_size * du[i], -1.0, 1.0);
    const double pred = predict_u(u);
    if (pred > best_pred) {
      best_pred = pred;
      best_u = u;
    }
  }
  return enc.decode_continuous(best_u);
}

std::vector<std::vector<double>> naive_forward_optimize(
    const ForwardModel& model, std::span<const std::vector<double>> starts,
    std::size_t steps, double step_size) {
  std::vector<std::vector<double>> out;
  out.reserve(starts.size());
  for (const auto& s : starts)
    out.push_back(naive_forward_optimize_one(model, s, steps, step_size));
  return out;
}

void save_forward_model(const ForwardModel& m, const std::filesystem::path& dir,
                        const std::string& stem) {
  NamedTensors t;
  m.net().append_named(t, "fwd");
  save_checkpoint(dir / (stem + ".ckpt"), t);

  json side;
  if (m.space().is_continuous()) {
    side["space"] = {{"kind", "continuous"},
                     {"lower", m.space().lower()},
                     {"upper", m.space().upper()}};
  } else {
    side["space"] = {{"kind", "categorical"},
                     {"length", m.space().length()},
                     {"alphabet", m.space().alphabet()}};
  }
  side["contextual"] = m.contextual();
  side["context_dim"] = m.context_dim();
  side["config"] = {{"hidden", m.config().hidden},
                    {"lr", m.config().lr},
                    {"batch", m.config().batch},
                    {"steps", m.config().steps},
                    {"val_fraction", m.config().val_fraction},
                    {"seed", m.config().seed}};
  side["y_std"] = {{"mean", m.y_standardizer().mean},
                   {"stddev", m.y_standardizer().stddev}};
  side["ctx_std"] = {{"mean", m.ctx_standardizer().mean},
                     {"stddev", m.ctx_standardizer().stddev}};
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  out << side.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write forward model sidecar");
}

ForwardModel load_forward_model(const std::filesystem::path& dir,
                                const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in)
    throw std::runtime_error("cannot open " + (dir / (stem + ".json")).string());
  json side = json::parse(in);

  ForwardModel m;
  const json& sp = side.at("space");
  m.enc_ = XEncoder(
      sp.at("kind") == "continuous"
          ? InputSpace::continuous(sp.at("lower").get<std::vector<double>>(),
                                   sp.at("upper").get<std::vector<double>>())
          : InputSpace::categorical(sp.at("length").get<std::size_t>(),
                                    sp.at("alphabet").get<std::size_t>()));
  m.contextual_ = side.at("contextual").get<bool>();
  m.context_dim_ = side.at("context_dim").get<std::size_t>();
  const json& c = side.at("config");
  m.cfg_.hidden = c.at("hidden").get<std::vector<std::size_t>>();
  m.cfg_.lr = c.at("lr").get<double>();
  m.cfg_.batch = c.at("batch").get<std::size_t>();
  m.cfg_.steps = c.at("steps").get<std::size_t>();
  m.cfg_.val_fraction = c.at("val_fraction").get<double>();
  m.cfg_.seed = c.at("seed").get<std::uint64_t>();
  m.y_std_.mean = side.at("y_std").at("mean").get<double>();
  m.y_std_.stddev = side.at("y_std").at("stddev").get<double>();
  m.ctx_std_.mean = side.at("ctx_std").at("mean").get<std::vector<double>>();
  m.ctx_std_.stddev = side.at("ctx_std").at("stddev").get<std::vector<double>>();

  MlpConfig mc;
  mc.in = m.enc_.dim() + m.context_dim_;
  mc.out = 1;
  mc.hidden = m.cfg_.hidden;
  mc.act = Activation::kRelu;
  const NamedTensors t = load_checkpoint(dir / (stem + ".ckpt"));
  m.net_ = Mlp::from_named(t, "fwd", mc);
  return m;
}

}  // namespace minopt
