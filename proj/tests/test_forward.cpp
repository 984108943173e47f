#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "minopt/datagen.hpp"
#include "minopt/forward_model.hpp"
#include "minopt/oracles.hpp"

using namespace minopt;

namespace {

Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
  // y = 3x + 1 on [0, 1]
  Dataset ds(InputSpace::continuous({0.0}, {1.0}), false, 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    ds.add(Record{{}, {x}, 3.0 * x + 1.0});
  }
  return ds;
}

ForwardConfig small_config(std::uint64_t seed) {
  ForwardConfig cfg;
  cfg.hidden = {64, 64};
  cfg.steps = 2500;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("linear target is realizable: validation MSE < 1e-3") {
  const Dataset ds = linear_dataset(500, 11);
  const auto res = train_forward(ds, small_config(1));
  CHECK(res.val_mse < 1e-3);

  for (double x : {0.123, 0.5, 0.871}) {
    CHECK(res.model.predict(std::vector<double>{x}) ==
          doctest::Approx(3.0 * x + 1.0).epsilon(0.05));
  }
}

TEST_CASE("constant target collapses to the constant") {
  Dataset ds(InputSpace::continuous({0.0}, {1.0}), false, 0);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) ds.add(Record{{}, {rng.uniform()}, 7.5});
  ForwardConfig cfg = small_config(2);
  cfg.steps = 500;
  const auto res = train_forward(ds, cfg);
  CHECK(res.val_mse < 1e-6);
  CHECK(res.model.predict(std::vector<double>{0.3}) ==
        doctest::Approx(7.5).epsilon(1e-3));
}

TEST_CASE("branin fit explains more variance than the mean (R^2 > 0)") {
  const Oracle oracle = make_branin();
  Rng rng(21);
  const Dataset ds =
      generate_static_dataset(oracle, 2000, SamplingPolicy::kUniform, rng);
  ForwardConfig cfg = small_config(3);
  cfg.steps = 4000;
  const auto res = train_forward(ds, cfg);

  double mean = 0;
  for (const Record& r : ds.records()) mean += r.y;
  mean /= double(ds.size());
  double var = 0;
  for (const Record& r : ds.records()) var += (r.y - mean) * (r.y - mean);
  var /= double(ds.size());
  CHECK(res.val_mse < var);
}

TEST_CASE("prediction is deterministic and batch equals pointwise") {
  const Dataset ds = linear_dataset(300, 7);
  ForwardConfig cfg = small_config(4);
  cfg.steps = 300;
  const auto res = train_forward(ds, cfg);
  const std::vector<double> x = {0.42};
  CHECK(res.model.predict(x) == res.model.predict(x));

  std::vector<std::vector<double>> xs = {{0.1}, {0.42}, {0.9}};
  const auto batch = res.model.predict_batch(xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(batch[i] == res.model.predict(xs[i]));

  CHECK_THROWS(res.model.predict(std::vector<double>{2.0}));  // out of space
}

TEST_CASE("prediction gradient matches finite differences") {
  const Oracle oracle = make_branin();
  Rng rng(31);
  const Dataset ds =
      generate_static_dataset(oracle, 500, SamplingPolicy::kUniform, rng);
  ForwardConfig cfg = small_config(5);
  cfg.steps = 800;
  const auto res = train_forward(ds, cfg);

  const std::vector<double> x = {2.0, 7.0};
  const auto grad = res.model.gradient(x);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (res.model.predict(xp) - res.model.predict(xm)) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    CHECK(std::abs(grad[i] - fd) / scale < 1e-4);
  }
}

TEST_CASE("ascent converges to the model's own optimum on a 1-D bowl") {
  // Train on a concave quadratic with an interior optimum, then compare the
  // optimizer against a fine grid argmax of the model itself (the grid is
  // the oracle here).
  Dataset ds(InputSpace::continuous({-1.0}, {1.0}), false, 0);
  Rng rng(17);
  for (int i = 0; i < 800; ++i) {
    const double x = rng.uniform(-1, 1);
    ds.add(Record{{}, {x}, -(x - 0.3) * (x - 0.3)});
  }
  ForwardConfig cfg = small_config(6);
  cfg.steps = 3000;
  const auto res = train_forward(ds, cfg);

  double grid_best_x = -1, grid_best = -1e300;
  for (int i = 0; i <= 20000; ++i) {
    const double x = -1.0 + 2.0 * double(i) / 20000.0;
    const double p = res.model.predict(std::vector<double>{x});
    if (p > grid_best) {
      grid_best = p;
      grid_best_x = x;
    }
  }
  const auto opt = naive_forward_optimize_one(
      res.model, std::vector<double>{-0.8}, 400, 0.05);
  CHECK(std::abs(opt[0] - grid_best_x) < 1e-3);
}

TEST_CASE("increasing model terminates at the upper bound; never leaves the box") {
  const Dataset ds = linear_dataset(500, 23);  // y = 3x + 1, increasing
  ForwardConfig cfg = small_config(7);
  const auto res = train_forward(ds, cfg);
  const auto opt =
      naive_forward_optimize_one(res.model, std::vector<double>{0.1}, 300, 0.1);
  CHECK(opt[0] == doctest::Approx(1.0));

  Rng rng(3);
  std::vector<std::vector<double>> starts;
  for (int i = 0; i < 8; ++i) starts.push_back({rng.uniform()});
  for (const auto& x : naive_forward_optimize(res.model, starts, 100, 0.2)) {
    CHECK(x[0] >= 0.0);
    CHECK(x[0] <= 1.0);
  }
}

TEST_CASE("categorical spaces are rejected by the ascent baseline") {
  const SequenceTask task = make_sequence_task(2, 3, 4);
  Rng rng(9);
  const Dataset ds =
      generate_static_dataset(task.oracle, 200, SamplingPolicy::kUniform, rng);
  ForwardConfig cfg = small_config(8);
  cfg.steps = 100;
  const auto res = train_forward(ds, cfg);
  CHECK_THROWS_AS(naive_forward_optimize_one(res.model,
                                             std::vector<double>{0, 0, 0}, 10,
                                             0.1),
                  std::logic_error);
}

TEST_CASE("affine rescaling of y preserves the argmax over candidates") {
  Rng rng(41);
  Dataset raw(InputSpace::continuous({-1.0}, {1.0}), false, 0);
  Dataset scaled(InputSpace::continuous({-1.0}, {1.0}), false, 0);
  for (int i = 0; i < 600; ++i) {
    const double x = rng.uniform(-1, 1);
    const double y = std::sin(3.0 * x);
    raw.add(Record{{}, {x}, y});
    scaled.add(Record{{}, {x}, 40.0 * y - 7.0});
  }
  const auto m1 = train_forward(raw, small_config(8));
  const auto m2 = train_forward(scaled, small_config(8));

  std::vector<std::vector<double>> candidates;
  for (int i = 0; i <= 60; ++i) candidates.push_back({-1.0 + 2.0 * i / 60.0});
  const auto p1 = m1.model.predict_batch(candidates);
  const auto p2 = m2.model.predict_batch(candidates);
  const auto a1 = std::max_element(p1.begin(), p1.end()) - p1.begin();
  const auto a2 = std::max_element(p2.begin(), p2.end()) - p2.begin();
  CHECK(a1 == a2);
}

TEST_CASE("forward model checkpoints round-trip") {
  const Dataset ds = linear_dataset(300, 29);
  ForwardConfig cfg = small_config(9);
  cfg.steps = 200;
  const auto res = train_forward(ds, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "minopt_fwd_ckpt";
  std::filesystem::create_directories(dir);
  save_forward_model(res.model, dir);
  const ForwardModel back = load_forward_model(dir);
  for (double x : {0.0, 0.25, 0.5, 0.99}) {
    CHECK(back.predict(std::vector<double>{x}) ==
          res.model.predict(std::vector<double>{x}));
  }
  std::filesystem::remove_all(dir);
}
