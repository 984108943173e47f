#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "minopt/dataset.hpp"

namespace minopt {

/// Equal-width score bins over [min y, max y]; the top edge is right-closed
/// so the maximum score lands in the highest bin.
struct Binning {
  std::vector<double> edges;   // B+1 ascending
  std::vector<std::size_t> counts;

  std::size_t bins() const { return counts.size(); }
  std::size_t bin_of(double y) const;
  std::vector<double> centers() const;
};

Binning bin_scores(std::span<const double> ys, std::size_t n_bins);

/// Normalized bin distribution  p(b) ~ (d_b / (d_b + lambda)) *
/// exp(-|center_b - y_star| / tau)  with d_b the empirical bin density.
/// Empty bins get exactly zero mass. The exponent is negated relative to the
/// count-saturation factor so that bins near the best observed score are
/// upweighted.
std::vector<double> compute_bin_weights(std::span<const std::size_t> counts,
                                        std::span<const double> centers,
                                        double y_star, double lambda,
                                        double tau);

/// tau = max(y_max - y_90th_percentile, 1e-6).
double adaptive_tau(std::span<const double> ys);

struct ReweightingScheme {
  Binning binning;
  double lambda = 0.0;
  double tau = 0.0;
  double y_star = 0.0;
  std::vector<double> bin_prob;       // p(b)
  std::vector<double> record_weight;  // w_i = p(bin(y_i)) / p_data(bin(y_i))

  std::string to_json() const;
};

struct ReweightConfig {
  std::size_t bins = 20;
  double lambda = 0.003;
  /// <= 0 selects the adaptive rule.
  double tau = 0.0;
  /// Identity reweighting (w_i = 1 for all records); used by the
  /// no-reweighting ablation.
  bool identity = false;
};

ReweightingScheme make_reweighting(std::span<const double> ys,
                                   const ReweightConfig& cfg);

/// Importance weights for an existing scheme applied to scores drawn from
/// the same dataset. Weights are bin-constant and self-normalized:
/// sum_i w_i / n == 1.
std::vector<double> importance_weights(const ReweightingScheme& scheme,
                                       std::span<const double> ys);

/// Exponentiated Renyi divergence of order 2 over a shared bin support:
/// d2(p||q) = sum_b q_b (p_b/q_b)^2. Requires q_b > 0 wherever p_b > 0.
double renyi_d2(std::span<const double> p, std::span<const double> q);

double total_variation(std::span<const double> p, std::span<const double> q);

/// The three unweighted terms of the gradient-error bound: a variance term
/// E_{y~p}[1/N_y], a divergence term d2(p||p_data)/n, and a squared total
/// variation bias term against the optimal distribution.
struct BoundReport {
  double variance_term = 0.0;
  double divergence_term = 0.0;
  double bias_term = 0.0;

  std::string to_json() const;
};

BoundReport bound_terms(std::span<const double> p,
                        std::span<const double> p_star,
                        std::span<const double> p_data,
                        std::span<const std::size_t> counts,
                        std::size_t dataset_size);

}  // namespace minopt
