#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minopt/dataset.hpp"
#include "minopt/rng.hpp"

namespace minopt {

struct Optimum {
  double value = 0.0;           // framework (maximize) convention
  std::vector<double> x;
};

/// Ground-truth score function for experiments. Evaluation is pure and
/// deterministic; oracles are immutable and safe to share across threads.
/// The framework always maximizes: minimization benchmarks carry sign = -1
/// and report raw = sign * score in logs.
struct Oracle {
  std::string name;
  InputSpace space = InputSpace::continuous({0.0}, {1.0});
  bool contextual = false;
  std::size_t context_dim = 0;
  double sign = 1.0;

  std::function<double(std::span<const double>)> eval_fn;
  std::function<double(std::span<const double>, std::span<const double>)>
      eval_ctx_fn;  // (context, x)
  std::optional<Optimum> known_optimum;

  std::function<std::vector<double>(Rng&)> sample_context_fn;
  std::function<std::vector<double>(Rng&)> sample_near_manifold_fn;
  std::function<std::size_t(std::span<const double>)> correct_arm_fn;

  double evaluate(std::span<const double> x) const;
  double evaluate(std::span<const double> context,
                  std::span<const double> x) const;
  double raw(double score) const { return sign * score; }
};

/// Branin-Hoo on [-5,10]x[0,15], negated so the framework maximizes.
/// Global minimum 0.397887 at (pi, 2.275), (-pi, 12.275), (9.42478, 2.475).
Oracle make_branin();
double branin_raw(std::span<const double> x);

/// 6-D Hartmann on [0,1]^6, negated. Global minimum -3.32237.
Oracle make_hartmann6();
double hartmann6_raw(std::span<const double> x);

/// 1-D smoke task: y = -x^2 on [-1,1].
Oracle make_quad1d();

/// Synthetic task whose valid inputs lie on a k-dimensional surface embedded
/// in R^D as the graph of a frozen random tanh network: the first k ambient
/// coordinates are the latent point, the rest are psi(latent). The score is
/// a latent quadratic bowl minus a penalty on the distance from the surface.
struct ManifoldTask {
  Oracle oracle;
  std::size_t latent_dim = 0;
  std::size_t ambient_dim = 0;
  double ambient_noise = 0.0;
  double penalty = 0.0;
  std::vector<double> latent_opt;

  std::function<std::vector<double>(std::span<const double>)> embed;
  /// Exact by construction: || x[k:] - psi(x[:k]) ||.
  std::function<double(std::span<const double>)> manifold_distance;
  /// Independent check: multistart latent descent on || phi(u) - x ||
  /// (256 starts, fixed budget). Approximate but tight; used by tests to
  /// validate the exact form.
  std::function<double(std::span<const double>)> manifold_distance_multistart;
};

ManifoldTask make_manifold_task(std::uint64_t seed, std::size_t latent_dim,
                                std::size_t ambient_dim);

/// Fixed-length categorical sequences scored by a position-weight matrix
/// plus one seeded pairwise interaction, so the optimum is not factorized.
/// The optimum is found by exhaustive enumeration at construction, which the
/// precondition L*log2(A) <= 24 keeps feasible.
struct SequenceTask {
  Oracle oracle;
  std::size_t length = 0;
  std::size_t alphabet = 0;
  std::vector<double> best_sequence;
  double best_score = 0.0;

  // Scoring tables, exposed so tests can verify relabeling symmetry.
  std::vector<double> pwm;          // [length][alphabet]
  std::vector<double> interaction;  // [alphabet][alphabet]
  std::size_t pos_i = 0, pos_j = 0;

  std::function<double(std::span<const double>)> score_of;
  /// Fraction of all sequences scoring strictly higher than `score`.
  std::function<double(double)> fraction_better;
};

SequenceTask make_sequence_task(std::uint64_t seed, std::size_t length,
                                std::size_t alphabet);

/// Contextual bandit: contexts from a seeded Gaussian mixture, the correct
/// arm a fixed seeded linear rule of the context, score 1/0. Because the
/// correct arm is a deterministic function of the context, the Bayes-optimal
/// rate is exactly 1.
struct BanditTask {
  Oracle oracle;
  std::size_t arms = 0;
  std::size_t context_dim = 0;

  std::size_t correct_arm(std::span<const double> context) const;
  double bayes_rate() const { return 1.0; }
};

BanditTask make_bandit_task(std::uint64_t seed, std::size_t context_dim,
                            std::size_t arms);

/// Registry addressable by name: "branin", "hartmann6", "quad1d",
/// "manifold:k2d32:seed7", "seq:L8A4:seed3", "bandit:c2a10:seed1".
Oracle make_oracle(const std::string& name);

}  // namespace minopt
