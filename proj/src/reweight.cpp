#include "minopt/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minopt {

std::size_t Binning::bin_of(double y) const {
  const double lo = edges.front(), hi = edges.back();
  const std::size_t b = bins();
  if (y < lo || y > hi) throw std::out_of_range("score outside all bins");
  if (hi == lo) return 0;
  auto idx = static_cast<std::size_t>((y - lo) / (hi - lo) * double(b));
  return std::min(idx, b - 1);
}

std::vector<double> Binning::centers() const {
  std::vector<double> c(bins());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = 0.5 * (edges[i] + edges[i + 1]);
  return c;
}

Binning bin_scores(std::span<const double> ys, std::size_t n_bins) {
  if (n_bins < 1) throw std::invalid_argument("bin_scores: need B >= 1");
  if (ys.empty()) throw std::invalid_argument("bin_scores: empty dataset");
  const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
  Binning binning;
  binning.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    binning.edges[i] = *lo_it + (*hi_it - *lo_it) * double(i) / double(n_bins);
  binning.edges.back() = *hi_it;  // exact top edge
  binning.counts.assign(n_bins, 0);
  for (double y : ys) ++binning.counts[binning.bin_of(y)];
  return binning;
}

std::vector<double> compute_bin_weights(std::span<const std::size_t> counts,
                                        std::span<const double> centers,
                                        double y_star, double lambda,
                                        double tau) {
  if (!(lambda > 0) || !(tau > 0))
    throw std::invalid_argument("compute_bin_weights: lambda, tau must be > 0");
  if (counts.size() != centers.size())
    throw std::invalid_argument("compute_bin_weights: size mismatch");
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0)
    throw std::invalid_argument("compute_bin_weights: all counts zero");

  std::vector<double> p(counts.size());
  double z = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double density = double(counts[b]) / double(total);
    const double saturation = density / (density + lambda);
    p[b] = saturation * std::exp(-std::abs(centers[b] - y_star) / tau);
    z += p[b];
  }
  for (double& v : p) v /= z;
  return p;
}

double adaptive_tau(std::span<const double> ys) {
  if (ys.empty()) throw std::invalid_argument("adaptive_tau: empty dataset");
  std::vector<double> sorted(ys.begin(), ys.end());
  const double y_max = *std::max_element(sorted.begin(), sorted.end());
  const double y_p90 = quantile(std::move(sorted), 0.90);
  return std::max(y_max - y_p90, 1e-6);
}

std::string ReweightingScheme::to_json() const {
  std::string out = "{\"lambda\":" + format_double(lambda) +
                    ",\"tau\":" + format_double(tau) +
                    ",\"y_star\":" + format_double(y_star) + ",\"edges\":[";
  for (std::size_t i = 0; i < binning.edges.size(); ++i)
    out += (i ? "," : "") + format_double(binning.edges[i]);
  out += "],\"counts\":[";
  for (std::size_t i = 0; i < binning.counts.size(); ++i)
    out += (i ? "," : "") + std::to_string(binning.counts[i]);
  out += "],\"bin_prob\":[";
  for (std::size_t i = 0; i < bin_prob.size(); ++i)
    out += (i ? "," : "") + format_double(bin_prob[i]);
  return out + "]}";
}

ReweightingScheme make_reweighting(std::span<const double> ys,
                                   const ReweightConfig& cfg) {
  ReweightingScheme s;
  s.binning = bin_scores(ys, cfg.bins);
  s.lambda = cfg.lambda;
  s.y_star = *std::max_element(ys.begin(), ys.end());
  s.tau = cfg.tau > 0 ? cfg.tau : adaptive_tau(ys);
  if (cfg.identity) {
    // p(b) = p_data(b): every record weight collapses to exactly 1.
    s.bin_prob.resize(s.binning.bins());
    for (std::size_t b = 0; b < s.bin_prob.size(); ++b)
      s.bin_prob[b] = double(s.binning.counts[b]) / double(ys.size());
  } else {
    s.bin_prob = compute_bin_weights(s.binning.counts, s.binning.centers(),
                                     s.y_star, s.lambda, s.tau);
  }
  s.record_weight = importance_weights(s, ys);
  return s;
}

std::vector<double> importance_weights(const ReweightingScheme& scheme,
                                       std::span<const double> ys) {
  std::vector<double> w(ys.size());
  const double n = double(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const std::size_t b = scheme.binning.bin_of(ys[i]);
    const double p_data = double(scheme.binning.counts[b]) / n;
    w[i] = scheme.bin_prob[b] / p_data;
  }
  return w;
}

double renyi_d2(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("renyi_d2: size mismatch");
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0)
      throw std::domain_error("renyi_d2: p positive where q is zero");
    d += p[i] * p[i] / q[i];
  }
  return d;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

std::string BoundReport::to_json() const {
  return "{\"variance_term\":" + format_double(variance_term) +
         ",\"divergence_term\":" + format_double(divergence_term) +
         ",\"bias_term\":" + format_double(bias_term) + "}";
}

BoundReport bound_terms(std::span<const double> p,
                        std::span<const double> p_star,
                        std::span<const double> p_data,
                        std::span<const std::size_t> counts,
                        std::size_t dataset_size) {
  if (p.size() != p_star.size() || p.size() != p_data.size() ||
      p.size() != counts.size())
    throw std::invalid_argument("bound_terms: size mismatch");
  BoundReport r;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (p[b] == 0.0) continue;
    if (counts[b] == 0)
      throw std::domain_error("bound_terms: p positive on an empty bin");
    r.variance_term += p[b] / double(counts[b]);
  }
  r.divergence_term = renyi_d2(p, p_data) / double(dataset_size);
  const double tv = total_variation(p_star, p);
  r.bias_term = tv * tv;
  return r;
}

}  // namespace minopt
