#pragma once

#include <vector>

#include <Eigen/Dense>

#include "convex_order/measures.hpp"

namespace convex_order {

enum class CostMode { kSquaredEuclidean, kNegInnerProduct };

struct CostMatrix {
  Eigen::MatrixXd entries;
  CostMode mode = CostMode::kSquaredEuclidean;

  Eigen::Index rows() const noexcept { return entries.rows(); }
  Eigen::Index cols() const noexcept { return entries.cols(); }
};

struct TransportPlan {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
};

struct TransportResult {
  double value = 0.0;
  TransportPlan plan;
  double duality_gap = 0.0;
};

struct SinkhornConfig {
  double reg = 1e-1;
  int max_iters = 100000;
  /// Target L1 violation of the marginals before rounding.
  double tolerance = 1e-9;
};

struct SinkhornResult {
  double value = 0.0;
  TransportPlan plan;
  bool converged = false;
  bool log_domain = false;
  int iterations = 0;
  /// L1 marginal violation of the last iterate, before rounding.
  double marginal_error = 0.0;
};

/// ||x_i - y_j||^2 or -<x_i, y_j>.
CostMatrix cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b, CostMode mode);

/// Exact optimal transport. Atoms are fed to the simplex sorted by their first
/// coordinate, so in 1D the initial basis is the monotone coupling.
TransportResult emd(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost);

double w2_squared(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// sup over couplings of E<x, y>.
double correlation_cost(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// Entropic OT. Switches to log-domain updates when reg < 1e-2 * median
/// positive cost. The returned plan is rounded onto the exact marginals and
/// `value` is its transport cost <M, P>.
/// Throws kNumericalUnderflow if the scaling iterates stop being finite.
SinkhornResult sinkhorn(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost,
                        const SinkhornConfig& cfg);

struct Projection {
  /// Target atoms with positive column mass, one per row.
  PointMatrix anchors;
  /// Conditional mean of the source given each anchor.
  PointMatrix means;
  std::vector<Eigen::Index> anchor_index;
  /// Target atoms skipped because their column carried no mass.
  std::vector<Eigen::Index> skipped;
};

/// x(y_j) = sum_i x_i P_ij / sum_i P_ij, where rows of the plan index
/// `source` and columns index `target`.
Projection barycentric_projection(const TransportPlan& plan, const PointMatrix& source, const PointMatrix& target);

struct Barycenter {
  DiscreteMeasure measure;
  double objective = 0.0;
};

/// Minimizes W2^2(a, r) + W2^2(r, b) over weights r on a 1D grid. The two
/// chained plans collapse into one transport problem from a to b with cost
/// c_ij = min_k (|x_i - k|^2 + |k - y_j|^2); r_k is the mass routed via k.
Barycenter barycenter_1d(const DiscreteMeasure& a, const DiscreteMeasure& b, const BallGrid& grid);

}  // namespace convex_order
