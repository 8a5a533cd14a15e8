#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "convex_order/measures.hpp"
#include "convex_order/transport.hpp"

namespace convex_order {

/// Gradient estimates at scattered anchors.
struct GradientField {
  PointMatrix anchors;
  PointMatrix values;
  /// Target atoms dropped because their plan column carried no mass.
  std::vector<Eigen::Index> skipped;

  int dim() const noexcept { return static_cast<int>(anchors.cols()); }
  Eigen::Index size() const noexcept { return anchors.rows(); }
};

/// kAnchoredAtMin: f = 0 at the smallest 1D anchor. kZeroMean: cell values sum to zero.
enum class Normalization { kAnchoredAtMin, kZeroMean };

struct ScalarField {
  PointMatrix anchors;
  Eigen::VectorXd values;
  Normalization normalization = Normalization::kAnchoredAtMin;
};

/// Conditional mean of rho given each nu atom. Rows of the plan index rho,
/// columns index nu. Coincident nu atoms are pooled, so anchors are distinct.
GradientField gradient_from_plan(const DiscreteMeasure& nu, const DiscreteMeasure& rho, const TransportPlan& plan);

/// Trapezoid integral of the piecewise-linear interpolant from the smallest
/// anchor; anchors come back sorted.
ScalarField integrate_1d(const GradientField& field);

/// Local linear regression with tricube weights over the ceil(span * n)
/// nearest anchors. Throws kSpanTooSmall when that window holds fewer than
/// three points.
GradientField lowess_smooth(const GradientField& field, double span);

using VectorField2 = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

/// Inverse-distance weighting (power 2) over the k nearest anchors.
VectorField2 idw_field(const GradientField& field, int k = 4);

/// Cell-centred discretisation of the Neumann problem lap f = div g in
/// Omega, df/dn = n.g on its boundary. Omega is the union of grid cells
/// whose centre lies in the convex hull of the anchors.
struct PoissonProblem {
  double h = 0.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // lower-left corner of cell (0, 0)
  int nx = 0;
  int ny = 0;
  /// Unknown index per cell (ix + nx * iy), -1 outside Omega.
  std::vector<int> active;
  PointMatrix centres;
  /// Rasterised g at the active centres.
  PointMatrix g;
  /// div g per active cell, after the compatibility correction.
  Eigen::VectorXd source;
  /// Sum over the cell's boundary faces of n.g at the face midpoint.
  Eigen::VectorXd boundary_flux;
  /// |int div g - oint n.g| before and after the uniform correction.
  double residual_before = 0.0;
  double residual_after = 0.0;
  /// Magnitude the residuals are compared against.
  double scale = 0.0;
  PointMatrix hull;

  Eigen::Index size() const noexcept { return centres.rows(); }
  Eigen::Vector2d centre(int ix, int iy) const noexcept {
    return origin + h * Eigen::Vector2d(ix + 0.5, iy + 0.5);
  }
  int cell(int ix, int iy) const noexcept {
    return ix < 0 || iy < 0 || ix >= nx || iy >= ny ? -1 : active[static_cast<std::size_t>(ix + nx * iy)];
  }
};

/// Counter-clockwise hull without collinear points.
PointMatrix convex_hull(const PointMatrix& points);
bool inside_hull(const PointMatrix& hull, const Eigen::Vector2d& p, double slack = 1e-12);

/// Requires >= 8 anchors, not all collinear.
PoissonProblem assemble_poisson(const GradientField& field, double h);
/// Same discretisation for an arbitrary field on the hull of `domain_points`.
PoissonProblem assemble_poisson(const VectorField2& g, const PointMatrix& domain_points, double h);

/// Five-point system plus one multiplier row pinning sum f = 0. Values are at
/// the active cell centres.
ScalarField solve_poisson_neumann(const PoissonProblem& problem);

struct PotentialValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
  /// Outside the anchors' hull; value comes from linear continuation.
  bool extrapolated = false;
};

/// Evaluates f and grad f anywhere.
class Potential {
 public:
  using Eval = std::function<PotentialValue(const Eigen::VectorXd&)>;

  Potential(int dim, Eval eval) : dim_(dim), eval_(std::move(eval)) {}

  /// Exact f and grad f supplied by the caller.
  static Potential analytic(int dim, std::function<double(const Eigen::VectorXd&)> f,
                            std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad);
  /// Piecewise-linear gradient, f its exact integral from the smallest
  /// anchor (so it agrees with integrate_1d at anchors); linear continuation
  /// past the end anchors.
  static Potential piecewise_1d(const GradientField& gradient);
  /// Bilinear f and g over cell centres. Where a neighbouring cell lies
  /// outside Omega, continues linearly from the nearest active centre.
  static Potential grid_2d(const PoissonProblem& problem, const ScalarField& solution);

  int dim() const noexcept { return dim_; }
  PotentialValue operator()(const Eigen::VectorXd& x) const { return eval_(x); }

 private:
  int dim_;
  Eval eval_;
};

struct RecoverConfig {
  double span = 0.3;
  bool smooth = true;
  /// 2D grid spacing; 0 picks max extent / 32.
  double h = 0.0;
};

struct Recovery {
  GradientField gradient;
  /// f at the nu anchors.
  ScalarField potential;
  Potential evaluator{1, {}};
  /// 1D: false when there were too few anchors to smooth.
  bool smoothed = false;
  std::optional<PoissonProblem> problem;
  /// 2D: f at the cell centres.
  std::optional<ScalarField> grid_values;
};

/// 1D: smooth, integrate. 2D: assemble, solve, sample back at the nu anchors.
Recovery recover_f(const DiscreteMeasure& nu, const DiscreteMeasure& rho, const TransportPlan& plan,
                   const RecoverConfig& cfg = {});

}  // namespace convex_order
