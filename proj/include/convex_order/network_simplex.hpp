#pragma once

#include <span>

#include <Eigen/Dense>

namespace convex_order {

/// Exact solution of a balanced transportation problem
///   min <C, P>  s.t.  P 1 = a,  P^T 1 = b,  P >= 0.
struct TransportSolution {
  Eigen::MatrixXd plan;
  double value = 0.0;
  Eigen::VectorXd row_potential;
  Eigen::VectorXd col_potential;
  /// primal - (feasible dual) after shifting potentials to remove any
  /// reduced-cost violation; zero in exact arithmetic at an optimum.
  double duality_gap = 0.0;
  int iterations = 0;
};

/// Network simplex on the bipartite transportation graph.
///
/// The basis is a spanning tree over the m + n row/column nodes, seeded by
/// the north-west corner rule along `row_order` / `col_order` (identity when
/// empty). When both orders sort one-dimensional atoms the seed is already
/// the monotone coupling, which is optimal for submodular costs.
///
/// Pricing uses block search; after a run of degenerate pivots it switches
/// to Bland's rule until progress resumes, which rules out cycling.
/// Throws Error(kNumericalFailure) if the final duality gap exceeds
/// 1e-7 * max(1, max|C|).
TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost,
                                  std::span<const Eigen::Index> row_order = {},
                                  std::span<const Eigen::Index> col_order = {});

}  // namespace convex_order
