#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "convex_order/measures.hpp"

namespace convex_order {

enum class SearchMethod { kIndirectHistogram, kIndirectSamples, kDirect };
enum class Decision { kOrdered, kNotOrdered };

std::string_view to_string(SearchMethod m) noexcept;
std::string_view to_string(Decision d) noexcept;

struct OrderSearchConfig {
  SearchMethod method = SearchMethod::kIndirectSamples;
  int grid_partitions = 21;
  int max_evals = 100;
  double alpha_lo = 1e-3;
  double alpha_hi = 100.0;
  /// Atoms per candidate for the direct method.
  int direct_atoms = 100;
  std::uint64_t seed = 0;
  double tolerance = 0.05;
  /// Search log(alpha) rather than alpha.
  bool log_scale = true;
  /// Draw rho's weights from Dirichlet(alpha) instead of using its mean.
  bool stochastic_weights = false;
  double gamma = 0.15;
  int n_candidates = 24;

  void validate() const;
};

struct ConvexOrderReport {
  double v_estimate = 0.0;
  DiscreteMeasure witness_rho{PointMatrix::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  Eigen::VectorXd witness_alpha;
  Decision decision = Decision::kOrdered;
  double tolerance = 0.0;
  int evals_used = 0;
  /// Gap per trial, in evaluation order.
  std::vector<double> trial_gaps;
  std::vector<double> best_so_far;
};

/// C(nu, rho) - C(mu, rho). Throws kSupportViolation if rho leaves the
/// closed unit ball (slack 1e-9).
double gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DiscreteMeasure& rho);

/// Evaluates gaps for many rho sharing one support. Cost matrices and the
/// monotone seed orders are built once.
class GapEvaluator {
 public:
  GapEvaluator(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const PointMatrix& support);

  /// Gap for rho = sum_i w_i delta_{support_i}; w must lie on the simplex.
  double operator()(const Eigen::VectorXd& w) const;

 private:
  struct Side {
    Eigen::VectorXd weights;
    Eigen::MatrixXd neg_inner;  // support x atoms
    std::vector<Eigen::Index> order;
  };
  double correlation(const Side& side, const Eigen::VectorXd& w) const;

  Side mu_, nu_;
  std::vector<Eigen::Index> support_order_;
};

/// Indirect Dirichlet search: rho(alpha) lives on the ball grid with
/// weights alpha / sum(alpha) (or a Dirichlet draw when
/// cfg.stochastic_weights). The reported v never exceeds 0, since
/// rho = delta_0 always attains a zero gap.
ConvexOrderReport estimate_v_indirect(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg);

/// Direct randomized Dirichlet search over the (d+1)-dimensional alpha box.
ConvexOrderReport estimate_v_direct(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg);

/// Dispatches on cfg.method.
ConvexOrderReport estimate_v(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg);

/// not_ordered iff v < -eps.
Decision decide(double v_estimate, double eps);

/// 0.5 / sqrt(n); equals 0.05 at n = 100.
double default_tolerance(Eigen::Index n_samples);

struct BruteForceResult {
  double v = 0.0;
  DiscreteMeasure rho{PointMatrix::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  long evaluations = 0;
};

/// Minimum gap over every k-subset of grid nodes and every weight vector on
/// the step-mesh of the simplex. Throws kBudgetExceeded past 1e7 evaluations.
BruteForceResult brute_force_v(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const BallGrid& grid, int k,
                               double weight_step);

}  // namespace convex_order
