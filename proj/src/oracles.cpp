#include "minopt/oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace minopt {

double Oracle::evaluate(std::span<const double> x) const {
  if (contextual) throw std::logic_error(name + ": context required");
  if (!space.contains(x))
    throw std::out_of_range(name + ": input outside the oracle domain");
  return eval_fn(x);
}

double Oracle::evaluate(std::span<const double> context,
                        std::span<const double> x) const {
  if (!contextual) return evaluate(x);
  if (context.size() != context_dim)
    throw std::invalid_argument(name + ": bad context dimension");
  if (!space.contains(x))
    throw std::out_of_range(name + ": input outside the oracle domain");
  return eval_ctx_fn(context, x);
}

double branin_raw(std::span<const double> x) {
  constexpr double pi = std::numbers::pi;
  const double a = 1.0, b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, r = 6.0,
               s = 10.0, t = 1.0 / (8.0 * pi);
  const double x1 = x[0], x2 = x[1];
  const double u = x2 - b * x1 * x1 + c * x1 - r;
  return a * u * u + s * (1.0 - t) * std::cos(x1) + s;
}

Oracle make_branin() {
  Oracle o;
  o.name = "branin";
  o.space = InputSpace::continuous({-5.0, 0.0}, {10.0, 15.0});
  o.sign = -1.0;  // minimization benchmark
  o.eval_fn = [](std::span<const double> x) { return -branin_raw(x); };
  const std::vector<double> x_star = {std::numbers::pi, 2.275};
  o.known_optimum = Optimum{-branin_raw(x_star), x_star};
  return o;
}

double hartmann6_raw(std::span<const double> x) {
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][6] = {
      {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
      {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
      {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
      {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
  static constexpr double P[4][6] = {
      {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double f = 0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0;
    for (int j = 0; j < 6; ++j) {
      const double d = x[j] - P[i][j];
      inner += A[i][j] * d * d;
    }
    f -= alpha[i] * std::exp(-inner);
  }
  return f;
}

Oracle make_hartmann6() {
  Oracle o;
  o.name = "hartmann6";
  o.space = InputSpace::continuous(std::vector<double>(6, 0.0),
                                   std::vector<double>(6, 1.0));
  o.sign = -1.0;
  o.eval_fn = [](std::span<const double> x) { return -hartmann6_raw(x); };
  const std::vector<double> x_star = {0.20169,  0.150011, 0.476874,
                                      0.275332, 0.311652, 0.6573};
  o.known_optimum = Optimum{-hartmann6_raw(x_star), x_star};
  return o;
}

Oracle make_quad1d() {
  Oracle o;
  o.name = "quad1d";
  o.space = InputSpace::continuous({-1.0}, {1.0});
  o.eval_fn = [](std::span<const double> x) { return -x[0] * x[0]; };
  o.known_optimum = Optimum{0.0, {0.0}};
  return o;
}

// ---------------------------------------------------------------------------
// Manifold task
// ---------------------------------------------------------------------------

namespace {

struct ManifoldNet {
  std::size_t k, d_out, hidden;
  std::vector<double> w1, b1, w2, b2;  // [hidden,k], [hidden], [d_out,hidden], [d_out]

  std::vector<double> apply(std::span<const double> u) const {
    std::vector<double> h(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      double s = b1[i];
      for (std::size_t j = 0; j < k; ++j) s += w1[i * k + j] * u[j];
      h[i] = std::tanh(s);
    }
    std::vector<double> out(d_out);
    for (std::size_t i = 0; i < d_out; ++i) {
      double s = b2[i];
      for (std::size_t j = 0; j < hidden; ++j) s += w2[i * hidden + j] * h[j];
      out[i] = s;
    }
    return out;
  }

  // d psi / d u, needed by the multistart projection. Returns [d_out, k].
  std::vector<double> jacobian(std::span<const double> u) const {
    std::vector<double> h(hidden), dh(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      double s = b1[i];
      for (std::size_t j = 0; j < k; ++j) s += w1[i * k + j] * u[j];
      h[i] = std::tanh(s);
      dh[i] = 1.0 - h[i] * h[i];
    }
    std::vector<double> jac(d_out * k, 0.0);
    for (std::size_t i = 0; i < d_out; ++i)
      for (std::size_t m = 0; m < hidden; ++m) {
        const double w = w2[i * hidden + m] * dh[m];
        for (std::size_t j = 0; j < k; ++j)
          jac[i * k + j] += w * w1[m * k + j];
      }
    return jac;
  }
};

constexpr double kLatentRange = 1.5;

}  // namespace

ManifoldTask make_manifold_task(std::uint64_t seed, std::size_t k,
                                std::size_t D) {
  if (k < 1 || k > 4 || D < 16)
    throw std::invalid_argument("manifold task: need 1<=k<=4 and D>=16");
  Rng rng(derive_seed(seed, "manifold"));

  auto net = std::make_shared<ManifoldNet>();
  net->k = k;
  net->d_out = D - k;
  net->hidden = 32;
  net->w1.resize(net->hidden * k);
  net->b1.resize(net->hidden);
  net->w2.resize(net->d_out * net->hidden);
  net->b2.resize(net->d_out);
  for (double& v : net->w1) v = rng.normal();
  for (double& v : net->b1) v = 0.3 * rng.normal();
  for (double& v : net->w2) v = 1.5 * rng.normal() / std::sqrt(double(net->hidden));
  for (double& v : net->b2) v = 0.2 * rng.normal();

  auto u_star = std::make_shared<std::vector<double>>(k);
  for (double& v : *u_star) v = rng.uniform(-0.75, 0.75);

  const double penalty = 4.0;
  const double ambient_noise = 0.05;

  auto embed = [net](std::span<const double> u) {
    std::vector<double> x(u.begin(), u.end());
    auto tail = net->apply(u);
    x.insert(x.end(), tail.begin(), tail.end());
    return x;
  };

  // Ambient bounds: latent block generously around the data range, psi block
  // from a seeded probe of the surface plus margin.
  std::vector<double> lo(D), hi(D);
  for (std::size_t i = 0; i < k; ++i) {
    lo[i] = -kLatentRange - 0.5;
    hi[i] = kLatentRange + 0.5;
  }
  {
    std::vector<double> mn(net->d_out, 1e300), mx(net->d_out, -1e300);
    Rng probe(derive_seed(seed, "manifold-probe"));
    std::vector<double> u(k);
    for (int s = 0; s < 4096; ++s) {
      for (double& v : u) v = probe.uniform(-kLatentRange - 0.5, kLatentRange + 0.5);
      auto tail = net->apply(u);
      for (std::size_t i = 0; i < net->d_out; ++i) {
        mn[i] = std::min(mn[i], tail[i]);
        mx[i] = std::max(mx[i], tail[i]);
      }
    }
    for (std::size_t i = 0; i < net->d_out; ++i) {
      lo[k + i] = mn[i] - 1.0;
      hi[k + i] = mx[i] + 1.0;
    }
  }

  auto vertical_distance = [net, k](std::span<const double> x) {
    auto tail = net->apply(x.subspan(0, k));
    double s = 0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
      const double d = x[k + i] - tail[i];
      s += d * d;
    }
    return std::sqrt(s);
  };

  ManifoldTask task;
  task.latent_dim = k;
  task.ambient_dim = D;
  task.ambient_noise = ambient_noise;
  task.penalty = penalty;
  task.latent_opt = *u_star;
  task.embed = embed;
  task.manifold_distance = vertical_distance;

  // Multistart descent on ||phi(u) - x||^2; independent of the closed form.
  task.manifold_distance_multistart = [net, k, seed](std::span<const double> x) {
    auto objective = [&](const std::vector<double>& u, std::vector<double>* grad) {
      auto tail = net->apply(u);
      double obj = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const double d = u[i] - x[i];
        obj += d * d;
      }
      std::vector<double> resid(net->d_out);
      for (std::size_t i = 0; i < net->d_out; ++i) {
        resid[i] = tail[i] - x[k + i];
        obj += resid[i] * resid[i];
      }
      if (grad) {
        auto jac = net->jacobian(u);
        for (std::size_t j = 0; j < k; ++j) {
          double g = 2.0 * (u[j] - x[j]);
          for (std::size_t i = 0; i < net->d_out; ++i)
            g += 2.0 * resid[i] * jac[i * k + j];
          (*grad)[j] = g;
        }
      }
      return obj;
    };

    Rng starts(derive_seed(seed, "manifold-multistart"));
    double best = 1e300;
    std::vector<double> u(k), grad(k), trial(k);
    for (int s0 = 0; s0 < 256; ++s0) {
      for (double& v : u)
        v = starts.uniform(-kLatentRange - 0.5, kLatentRange + 0.5);
      double cur = objective(u, &grad);
      double step = 0.05;
      for (int it = 0; it < 80; ++it) {
        // Backtracking: shrink until the move is a descent step.
        bool moved = false;
        for (int bt = 0; bt < 12; ++bt) {
          for (std::size_t j = 0; j < k; ++j) trial[j] = u[j] - step * grad[j];
          const double next = objective(trial, nullptr);
          if (next < cur) {
            u = trial;
            cur = objective(u, &grad);
            step *= 1.5;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      best = std::min(best, cur);
    }
    return std::sqrt(std::max(best, 0.0));
  };

  Oracle o;
  o.name = "manifold:k" + std::to_string(k) + "d" + std::to_string(D) +
           ":seed" + std::to_string(seed);
  o.space = InputSpace::continuous(lo, hi);
  o.eval_fn = [net, k, u_star, penalty, vertical_distance](
                  std::span<const double> x) {
    double g = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double d = x[i] - (*u_star)[i];
      g -= d * d;
    }
    return g - penalty * vertical_distance(x);
  };
  o.known_optimum = Optimum{0.0, embed(*u_star)};
  o.sample_near_manifold_fn = [net, embed, lo, hi, k, D,
                               ambient_noise](Rng& r) {
    std::vector<double> u(k);
    for (double& v : u) v = r.uniform(-kLatentRange, kLatentRange);
    auto x = embed(u);
    for (std::size_t i = 0; i < D; ++i) {
      x[i] += ambient_noise * r.normal();
      x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
    return x;
  };
  task.oracle = std::move(o);
  return task;
}

// ---------------------------------------------------------------------------
// Sequence task
// ---------------------------------------------------------------------------

SequenceTask make_sequence_task(std::uint64_t seed, std::size_t length,
                                std::size_t alphabet) {
  if (length < 1 || alphabet < 2)
    throw std::invalid_argument("sequence task: bad length/alphabet");
  if (double(length) * std::log2(double(alphabet)) > 24.0 + 1e-9)
    throw std::invalid_argument(
        "sequence task: L*log2(A) must be <= 24 for exhaustive enumeration");

  Rng rng(derive_seed(seed, "sequence"));
  auto pwm = std::make_shared<std::vector<double>>(length * alphabet);
  for (double& v : *pwm) v = rng.normal();
  auto inter = std::make_shared<std::vector<double>>(alphabet * alphabet);
  for (double& v : *inter) v = 1.5 * rng.normal();
  const std::size_t pos_i = rng.index(length);
  std::size_t pos_j = rng.index(length - 1);
  if (pos_j >= pos_i) ++pos_j;  // distinct positions

  const std::size_t A = alphabet, L = length;
  auto score = [pwm, inter, pos_i, pos_j, A, L](std::span<const double> s) {
    double v = 0;
    for (std::size_t p = 0; p < L; ++p)
      v += (*pwm)[p * A + static_cast<std::size_t>(s[p])];
    v += (*inter)[static_cast<std::size_t>(s[pos_i]) * A +
                  static_cast<std::size_t>(s[pos_j])];
    return v;
  };

  // Exhaustive enumeration: optimum and the full sorted score table.
  std::size_t total = 1;
  for (std::size_t p = 0; p < L; ++p) total *= A;
  auto all_scores = std::make_shared<std::vector<double>>();
  all_scores->reserve(total);
  std::vector<double> seq(L, 0.0), best_seq(L, 0.0);
  double best = -1e300;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t p = 0; p < L; ++p) {
      seq[p] = double(c % A);
      c /= A;
    }
    const double v = score(seq);
    all_scores->push_back(v);
    if (v > best) {
      best = v;
      best_seq = seq;
    }
  }
  std::sort(all_scores->begin(), all_scores->end());

  SequenceTask task;
  task.length = L;
  task.alphabet = A;
  task.best_sequence = best_seq;
  task.best_score = best;
  task.pwm = *pwm;
  task.interaction = *inter;
  task.pos_i = pos_i;
  task.pos_j = pos_j;
  task.score_of = score;
  task.fraction_better = [all_scores](double v) {
    const auto it = std::upper_bound(all_scores->begin(), all_scores->end(), v);
    return double(all_scores->end() - it) / double(all_scores->size());
  };

  Oracle o;
  o.name = "seq:L" + std::to_string(L) + "A" + std::to_string(A) + ":seed" +
           std::to_string(seed);
  o.space = InputSpace::categorical(L, A);
  o.eval_fn = score;
  o.known_optimum = Optimum{best, best_seq};
  task.oracle = std::move(o);
  return task;
}

// ---------------------------------------------------------------------------
// Contextual bandit task
// ---------------------------------------------------------------------------

BanditTask make_bandit_task(std::uint64_t seed, std::size_t context_dim,
                            std::size_t arms) {
  if (arms < 2 || arms > 16 || context_dim < 1 || context_dim > 8)
    throw std::invalid_argument("bandit task: need 2<=arms<=16, 1<=cdim<=8");
  Rng rng(derive_seed(seed, "bandit"));

  auto means = std::make_shared<std::vector<double>>(arms * context_dim);
  for (double& v : *means) v = 2.0 * rng.normal();
  auto w = std::make_shared<std::vector<double>>(arms * context_dim);
  for (double& v : *w) v = rng.normal();
  auto b = std::make_shared<std::vector<double>>(arms);
  for (double& v : *b) v = 0.1 * rng.normal();

  const std::size_t A = arms, C = context_dim;
  auto correct = [w, b, A, C](std::span<const double> c) {
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t a = 0; a < A; ++a) {
      double v = (*b)[a];
      for (std::size_t j = 0; j < C; ++j) v += (*w)[a * C + j] * c[j];
      if (v > best_v) {
        best_v = v;
        best = a;
      }
    }
    return best;
  };

  Oracle o;
  o.name = "bandit:c" + std::to_string(C) + "a" + std::to_string(A) + ":seed" +
           std::to_string(seed);
  o.space = InputSpace::categorical(1, A);
  o.contextual = true;
  o.context_dim = C;
  o.eval_ctx_fn = [correct](std::span<const double> c,
                            std::span<const double> x) {
    return static_cast<std::size_t>(x[0]) == correct(c) ? 1.0 : 0.0;
  };
  o.sample_context_fn = [means, A, C](Rng& r) {
    const std::size_t g = r.index(A);
    std::vector<double> c(C);
    for (std::size_t j = 0; j < C; ++j)
      c[j] = (*means)[g * C + j] + 0.6 * r.normal();
    return c;
  };
  o.correct_arm_fn = correct;

  BanditTask task;
  task.arms = A;
  task.context_dim = C;
  task.oracle = std::move(o);
  return task;
}

std::size_t BanditTask::correct_arm(std::span<const double> context) const {
  return oracle.correct_arm_fn(context);
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

// Parses "<prefix><num>" pairs like "k2d32" or "L8A4" or "c2a10".
bool parse_two(const std::string& s, char p1, char p2, std::size_t& v1,
               std::size_t& v2) {
  if (s.empty() || (s[0] != p1 && std::tolower(s[0]) != std::tolower(p1)))
    return false;
  std::size_t i = 1, start = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == start || i >= s.size()) return false;
  v1 = std::stoull(s.substr(start, i - start));
  if (std::tolower(s[i]) != std::tolower(p2)) return false;
  start = ++i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == start || i != s.size()) return false;
  v2 = std::stoull(s.substr(start));
  return true;
}

std::uint64_t parse_seed(const std::string& s) {
  if (s.rfind("seed", 0) != 0)
    throw std::invalid_argument("oracle name: expected 'seed<N>', got " + s);
  return std::stoull(s.substr(4));
}

}  // namespace

Oracle make_oracle(const std::string& name) {
  if (name == "branin") return make_branin();
  if (name == "hartmann6") return make_hartmann6();
  if (name == "quad1d") return make_quad1d();

  const auto c1 = name.find(':');
  const auto c2 = name.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 != std::string::npos && c2 != std::string::npos) {
    const std::string kind = name.substr(0, c1);
    const std::string params = name.substr(c1 + 1, c2 - c1 - 1);
    const std::uint64_t seed = parse_seed(name.substr(c2 + 1));
    std::size_t a = 0, b = 0;
    if (kind == "manifold" && parse_two(params, 'k', 'd', a, b))
      return make_manifold_task(seed, a, b).oracle;
    if (kind == "seq" && parse_two(params, 'L', 'A', a, b))
      return make_sequence_task(seed, a, b).oracle;
    if (kind == "bandit" && parse_two(params, 'c', 'a', a, b))
      return make_bandit_task(seed, a, b).oracle;
  }
  throw std::invalid_argument("unknown oracle: " + name);
}

}  // namespace minopt
