#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include "minopt/inverse_map.hpp"
#include "minopt/reweight.hpp"

using namespace minopt;

namespace {

Dataset quad_dataset(std::size_t n, std::uint64_t seed) {
  // x in [-1,1], y = -x^2
  Dataset ds(InputSpace::continuous({-1.0}, {1.0}), false, 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-1, 1);
    ds.add(Record{{}, {x}, -x * x});
  }
  return ds;
}

GanConfig test_gan_config(std::uint64_t seed) {
  GanConfig cfg;
  cfg.d_z = 8;
  cfg.hidden = {64, 64};
  cfg.batch = 64;
  cfg.steps = 6000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("weighted minibatch: degenerate, uniform, and 2:1 weights") {
  Rng rng(1);
  // One positive weight fills the batch.
  std::vector<double> w1 = {0.0, 3.0, 0.0};
  for (std::size_t i : weighted_minibatch(w1, 32, rng)) CHECK(i == 1);

  // All-zero and negative weights are errors.
  std::vector<double> w0 = {0.0, 0.0};
  CHECK_THROWS(weighted_minibatch(w0, 4, rng));
  std::vector<double> wneg = {1.0, -0.5};
  CHECK_THROWS(weighted_minibatch(wneg, 4, rng));

  // Uniform weights: frequencies within 3 standard errors of 1/10.
  std::vector<double> wu(10, 1.0);
  Rng r2(77);
  std::map<std::size_t, double> freq;
  const int n = 100000;
  for (std::size_t i : weighted_minibatch(wu, n, r2)) freq[i] += 1.0 / n;
  const double se_u = std::sqrt(0.1 * 0.9 / n);
  for (const auto& [i, f] : freq) CHECK(std::abs(f - 0.1) <= 3 * se_u);

  // Weights {2,1}: frequencies about {2/3, 1/3}.
  std::vector<double> w21 = {2.0, 1.0};
  Rng r3(99);
  double f0 = 0;
  const int n2 = 30000;
  for (std::size_t i : weighted_minibatch(w21, n2, r3))
    if (i == 0) f0 += 1.0 / n2;
  const double se = std::sqrt((2.0 / 3) * (1.0 / 3) / n2);
  CHECK(std::abs(f0 - 2.0 / 3) <= 3 * se);
}

TEST_CASE("identity weights reduce to the uniform sampler, draw for draw") {
  std::vector<double> ones(100, 1.0);
  Rng a(4242), b(4242);
  const auto idx = weighted_minibatch(ones, 64, a);
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(idx[i] == b.index(100));
}

TEST_CASE("frozen 0.5 discriminator gives the generator zero gradient") {
  const Dataset ds = quad_dataset(100, 3);
  GanConfig cfg = test_gan_config(5);
  Rng init(1);
  InverseMap gen(ds.space(), false, 0, cfg, init);
  Discriminator disc(gen.encoder().dim(), 0, cfg, init);
  for (Tensor* p : disc.net().params())
    for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] = 0.0;

  Graph g;
  Rng rng(9);
  Tensor z({4, cfg.d_z});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Tensor y({4, 1});
  std::vector<NodeId> gp;
  NodeId fake = gen.build(g, g.concat(g.input(z), g.input(y)), nullptr, &gp);
  NodeId logit = disc.build(g, g.concat(fake, g.input(y)), nullptr);
  // Zero weights make the logit 0, i.e. Disc == 0.5 for every input.
  CHECK(g.value(logit)[0] == 0.0);
  g.backward(g.mean(g.softplus(g.affine(logit, -1.0, 0.0))));
  for (NodeId p : gp)
    for (std::size_t i = 0; i < g.grad(p).size(); ++i)
      CHECK(g.grad(p)[i] == 0.0);
}

TEST_CASE("sampling contract: determinism, bounds, n=0, bad y") {
  const Dataset ds = quad_dataset(400, 7);
  GanConfig cfg = test_gan_config(11);
  cfg.steps = 120;  // contract only, no quality needed
  std::vector<double> ones(ds.size(), 1.0);
  const auto res = train_inverse_map(ds, ones, cfg);

  Rng s0(2);
  CHECK(res.inverse_map.sample(-0.3, {}, 0, s0).empty());

  Rng s1(33), s2(33);
  const auto a = res.inverse_map.sample(-0.3, {}, 5, s1);
  const auto b = res.inverse_map.sample(-0.3, {}, 5, s2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);

  Rng s3(5);
  for (const auto& s : res.inverse_map.sample(-0.1, {}, 200, s3)) {
    CHECK(s.x[0] >= -1.0);
    CHECK(s.x[0] <= 1.0);
  }
  CHECK_THROWS(res.inverse_map.sample(
      std::numeric_limits<double>::infinity(), {}, 1, s3));
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Dataset ds = quad_dataset(300, 13);
  GanConfig cfg = test_gan_config(17);
  cfg.steps = 80;
  std::vector<double> ones(ds.size(), 1.0);
  const auto r1 = train_inverse_map(ds, ones, cfg);
  const auto r2 = train_inverse_map(ds, ones, cfg);
  REQUIRE(r1.loss_trace.size() == r2.loss_trace.size());
  for (std::size_t i = 0; i < r1.loss_trace.size(); ++i) {
    CHECK(r1.loss_trace[i].first == r2.loss_trace[i].first);
    CHECK(r1.loss_trace[i].second == r2.loss_trace[i].second);
  }
  const auto p1 = r1.inverse_map.net().params();
  const auto p2 = r2.inverse_map.net().params();
  for (std::size_t i = 0; i < p1.size(); ++i)
    for (std::size_t j = 0; j < p1[i]->size(); ++j)
      CHECK((*p1[i])[j] == (*p2[i])[j]);
}

TEST_CASE("inverse map recovers both branches of y = -x^2") {
  const Dataset ds = quad_dataset(2000, 19);
  std::vector<double> ones(ds.size(), 1.0);
  const auto res = train_inverse_map(ds, ones, test_gan_config(23));

  // No NaN anywhere in the trace.
  for (const auto& [dl, gl] : res.loss_trace) {
    CHECK(std::isfinite(dl));
    CHECK(std::isfinite(gl));
  }

  // Samples at y = -0.25 concentrate near |x| = 0.5.
  Rng rng(29);
  const auto samples = res.inverse_map.sample(-0.25, {}, 500, rng);
  double err = 0;
  for (const auto& s : samples) err += std::abs(std::abs(s.x[0]) - 0.5);
  err /= double(samples.size());
  CHECK(err < 0.1);
}

TEST_CASE("conditioning matters: sign of y picks the x half-plane") {
  // y < 0 lives at x < 0, y > 0 at x > 0.
  Dataset ds(InputSpace::continuous({-1.0}, {1.0}), false, 0);
  Rng rng(31);
  for (int i = 0; i < 1500; ++i) {
    const double u = rng.uniform(0.05, 1.0);
    if (i % 2 == 0)
      ds.add(Record{{}, {-u}, -u});
    else
      ds.add(Record{{}, {u}, u});
  }
  std::vector<double> ones(ds.size(), 1.0);
  const auto res = train_inverse_map(ds, ones, test_gan_config(37));

  Rng s(41);
  const auto samples = res.inverse_map.sample(1.0, {}, 200, s);
  double positive = 0;
  for (const auto& smp : samples)
    if (smp.x[0] > 0) positive += 1;
  CHECK(positive / 200.0 >= 0.9);
}

TEST_CASE("categorical head recovers the unique maximizer") {
  // Score = -hamming distance to (2,2,2); enumeration confirms the unique
  // maximizer before the GAN ever sees the data.
  const std::vector<double> target = {2, 2, 2};
  auto score = [&](const std::vector<double>& s) {
    double d = 0;
    for (int i = 0; i < 3; ++i) d += s[i] == target[i] ? 0.0 : 1.0;
    return -d;
  };
  int maximizers = 0;
  std::vector<double> seq(3);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        seq = {double(a), double(b), double(c)};
        if (score(seq) >= 0.0) ++maximizers;
      }
  REQUIRE(maximizers == 1);

  Dataset ds(InputSpace::categorical(3, 4), false, 0);
  Rng rng(43);
  for (int i = 0; i < 1500; ++i) {
    std::vector<double> s = {double(rng.index(4)), double(rng.index(4)),
                             double(rng.index(4))};
    const double y = score(s);
    ds.add(Record{{}, std::move(s), y});
  }
  const auto scheme = make_reweighting(ds.y_values(), {8, 0.003, 0.0, false});
  GanConfig cfg = test_gan_config(47);
  const auto res = train_inverse_map(ds, scheme.record_weight, cfg);

  Rng s2(53);
  const auto samples = res.inverse_map.sample(0.0, {}, 100, s2);
  int hits = 0;
  for (const auto& smp : samples) {
    REQUIRE(smp.relaxed.size() == 12);
    for (int p = 0; p < 3; ++p) {
      double row = 0;
      for (int a = 0; a < 4; ++a) row += smp.relaxed[p * 4 + a];
      CHECK(row == doctest::Approx(1.0));
    }
    if (smp.x == target) ++hits;
  }
  CHECK(hits >= 80);
}

TEST_CASE("inverse map checkpoints round-trip bit-exactly") {
  const Dataset ds = quad_dataset(300, 61);
  GanConfig cfg = test_gan_config(67);
  cfg.steps = 60;
  std::vector<double> ones(ds.size(), 1.0);
  const auto res = train_inverse_map(ds, ones, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "minopt_inv_ckpt";
  std::filesystem::create_directories(dir);
  save_inverse_map(res.inverse_map, dir);
  const InverseMap back = load_inverse_map(dir);

  Rng s1(71), s2(71);
  const auto a = res.inverse_map.sample(-0.2, {}, 8, s1);
  const auto b = back.sample(-0.2, {}, 8, s2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);
  CHECK(back.y_max() == res.inverse_map.y_max());
  std::filesystem::remove_all(dir);
}
