#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "minopt/datagen.hpp"
#include "minopt/dataset.hpp"
#include "minopt/oracles.hpp"
#include "minopt/rng.hpp"

using namespace minopt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("input space validation") {
  CHECK_THROWS(InputSpace::continuous({1.0}, {1.0}));  // lower must be < upper
  CHECK_THROWS(InputSpace::categorical(0, 4));
  CHECK_THROWS(InputSpace::categorical(3, 1));

  const InputSpace box = InputSpace::continuous({-1, 0}, {1, 2});
  CHECK(box.contains(std::vector<double>{0.0, 1.0}));
  CHECK(!box.contains(std::vector<double>{2.0, 1.0}));
  CHECK(!box.contains(std::vector<double>{0.0}));

  const InputSpace cat = InputSpace::categorical(3, 4);
  CHECK(cat.contains(std::vector<double>{0, 3, 2}));
  CHECK(!cat.contains(std::vector<double>{0, 4, 2}));
  CHECK(!cat.contains(std::vector<double>{0, 1.5, 2}));
}

TEST_CASE("records validate at insertion") {
  Dataset ds(InputSpace::continuous({0.0}, {1.0}), false, 0);
  CHECK_THROWS(ds.add(Record{{}, {2.0}, 0.0}));      // out of bounds
  CHECK_THROWS(ds.add(Record{{1.0}, {0.5}, 0.0}));   // unexpected context
  CHECK_THROWS(ds.add(Record{{}, {0.5}, std::nan("")}));
  ds.add(Record{{}, {0.5}, 1.0});
  CHECK(ds.size() == 1);
}

TEST_CASE("save/load round-trips records field by field") {
  Rng rng(7);
  const Oracle oracle = make_quad1d();
  Dataset ds = generate_static_dataset(oracle, 57, SamplingPolicy::kUniform, rng);
  const auto path = tmp_file("minopt_ds_roundtrip.jsonl");
  ds.save(path);
  const Dataset back = Dataset::load(path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.space() == ds.space());
  CHECK(back.contextual() == ds.contextual());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].x == ds[i].x);
    CHECK(back[i].y == ds[i].y);
    CHECK(back[i].context == ds[i].context);
  }
  fs::remove(path);
}

TEST_CASE("categorical and contextual round-trips") {
  const BanditTask task = make_bandit_task(3, 2, 5);
  Rng rng(11);
  Dataset ds =
      generate_static_dataset(task.oracle, 40, SamplingPolicy::kLogging49, rng);
  const auto path = tmp_file("minopt_ds_ctx.jsonl");
  ds.save(path);
  const Dataset back = Dataset::load(path);
  REQUIRE(back.size() == 40);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].x == ds[i].x);
    CHECK(back[i].y == ds[i].y);
    CHECK(back[i].context == ds[i].context);
  }
  fs::remove(path);
}

TEST_CASE("truncated file is an error, not a partial dataset") {
  Rng rng(7);
  Dataset ds = generate_static_dataset(make_quad1d(), 20,
                                       SamplingPolicy::kUniform, rng);
  const auto path = tmp_file("minopt_ds_trunc.jsonl");
  ds.save(path);

  // Drop the last two lines (whole records, so only the count gives it away).
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (std::size_t i = 0; i + 2 < lines.size(); ++i) out << lines[i] << "\n";
  out.close();
  CHECK_THROWS(Dataset::load(path));

  // A mid-record cut fails too.
  ds.save(path);
  fs::resize_file(path, fs::file_size(path) - 5);
  CHECK_THROWS(Dataset::load(path));
  fs::remove(path);
}

TEST_CASE("empty-record file with a valid header loads as empty") {
  Dataset ds(InputSpace::continuous({0.0}, {1.0}), false, 0);
  const auto path = tmp_file("minopt_ds_empty.jsonl");
  ds.save(path);
  const Dataset back = Dataset::load(path);
  CHECK(back.empty());
  fs::remove(path);
}

TEST_CASE("generation requires n >= 1") {
  Rng rng(1);
  CHECK_THROWS(generate_static_dataset(make_quad1d(), 0,
                                       SamplingPolicy::kUniform, rng));
}

TEST_CASE("generation is a pure function of the seed") {
  const Oracle oracle = make_branin();
  Rng a(123), b(123);
  const Dataset d1 =
      generate_static_dataset(oracle, 50, SamplingPolicy::kUniform, a);
  const Dataset d2 =
      generate_static_dataset(oracle, 50, SamplingPolicy::kUniform, b);
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1[i].x == d2[i].x);
    CHECK(d1[i].y == d2[i].y);
  }
}

TEST_CASE("uniform sampling on the Branin box stays in bounds, above the minimum") {
  const Oracle oracle = make_branin();
  Rng rng(99);
  const Dataset ds =
      generate_static_dataset(oracle, 1000, SamplingPolicy::kUniform, rng);
  double best_raw = 1e300;
  for (const Record& r : ds.records()) {
    CHECK(oracle.space.contains(r.x));
    best_raw = std::min(best_raw, oracle.raw(r.y));
  }
  // The three global minimizers are isolated points; random draws miss them.
  CHECK(best_raw > 0.398);
}

TEST_CASE("49% logging policy hits its correct-arm rate") {
  const BanditTask task = make_bandit_task(5, 2, 10);
  Rng rng(2024);
  const Dataset ds = generate_static_dataset(task.oracle, 10000,
                                             SamplingPolicy::kLogging49, rng);
  double correct = 0;
  for (const Record& r : ds.records()) correct += r.y;
  const double rate = correct / double(ds.size());
  CHECK(rate >= 0.47);
  CHECK(rate <= 0.51);
}

TEST_CASE("17-significant-digit formatting survives the round trip") {
  for (double v : {1.0 / 3.0, 0.1, -2.718281828459045e-11, 1e17 + 1,
                   5.551115123125783e-17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("quantile interpolates linearly") {
  std::vector<double> ys;
  for (int i = 0; i <= 100; ++i) ys.push_back(double(i));
  CHECK(quantile(ys, 0.9) == doctest::Approx(90.0));
  CHECK(quantile(ys, 0.0) == doctest::Approx(0.0));
  CHECK(quantile(ys, 1.0) == doctest::Approx(100.0));
}
