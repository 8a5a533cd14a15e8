#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "convex_order/measures.hpp"

namespace convex_order {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct TpeConfig {
  double gamma = 0.25;
  int n_candidates = 24;
  int max_evals = 100;
  std::vector<Bounds> bounds;
  /// Model densities over log(x); every bound must then be positive.
  bool log_scale = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Trial {
  Eigen::VectorXd x;
  /// +inf when the objective returned a non-finite value.
  double loss = 0.0;
};

class TrialHistory {
 public:
  void add(Eigen::VectorXd x, double loss);

  std::size_t size() const noexcept { return trials_.size(); }
  bool empty() const noexcept { return trials_.empty(); }
  const Trial& operator[](std::size_t i) const { return trials_[i]; }
  const std::vector<Trial>& trials() const noexcept { return trials_; }
  /// Trial indices ordered by loss, ties by insertion order.
  const std::vector<std::size_t>& by_loss() const noexcept { return by_loss_; }
  std::size_t finite_count() const noexcept { return finite_; }
  const Trial& best() const;
  /// Running minimum of the loss after each evaluation.
  std::vector<double> best_so_far() const;

 private:
  std::vector<Trial> trials_;
  std::vector<std::size_t> by_loss_;
  std::size_t finite_ = 0;
};

/// Mixture of Gaussians truncated to [lo, hi]: one kernel per observation
/// (Scott bandwidth, clamped to [range / min(100, n + 1), range]) plus a
/// broad prior kernel centred on the interval with the weight of one
/// observation. The sample-size floor keeps a collapsed good set from
/// freezing the search.
class TruncatedKde {
 public:
  TruncatedKde(const std::vector<double>& samples, Bounds bounds);

  double density(double x) const;
  double log_density(double x) const;
  double sample(Rng& rng) const;
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  Bounds bounds_;
  std::vector<double> centres_;
  std::vector<double> widths_;
  std::vector<double> mass_;  // mixture weight / truncation normalizer
  std::vector<double> weights_;
  double bandwidth_ = 0.0;
};

/// Per-coordinate good/bad densities; coordinates are modelled independently.
struct DensityPair {
  std::vector<TruncatedKde> good;
  std::vector<TruncatedKde> bad;

  /// log of prod_k bad_k(x_k) / good_k(x_k); lower is more promising.
  double log_ratio(const Eigen::VectorXd& x) const;
};

/// (gamma + ratio (1 - gamma))^-1 with ratio = bad / good density.
double ei_score(double ratio, double gamma);
double ei_score(const Eigen::VectorXd& candidate, const DensityPair& densities, double gamma);

/// Next point to evaluate. Draws from the prior while the history holds
/// fewer than 2 / gamma finite losses or the split leaves a side empty.
/// Otherwise splits at y* (good: loss < y*), fits the densities, samples
/// n_candidates from the good density and returns the EI maximizer, ties
/// resolved by the lowest candidate index.
Eigen::VectorXd suggest(const TrialHistory& history, const TpeConfig& cfg, Rng& rng);

struct TpeResult {
  Eigen::VectorXd best_x;
  double best_loss = 0.0;
  TrialHistory history;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Exactly cfg.max_evals evaluations, sequential, reproducible given cfg.seed.
TpeResult minimize(const Objective& objective, const TpeConfig& cfg);

/// Uniform draws from the box (in log space when cfg.log_scale); baseline.
TpeResult random_search(const Objective& objective, const TpeConfig& cfg);

}  // namespace convex_order
