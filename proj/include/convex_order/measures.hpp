#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace convex_order {

/// Atoms stored one per row so that a single point is a contiguous span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64) so independent
/// sub-streams can be derived deterministically from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Finitely supported probability measure: weighted atoms in R^d.
///
/// Construction validates that weights are nonnegative and sum to one
/// within 1e-9; the object is immutable afterwards.
class DiscreteMeasure {
 public:
  static constexpr double kWeightTolerance = 1e-9;

  DiscreteMeasure(PointMatrix points, Eigen::VectorXd weights);

  /// Equal weights on every row of `points`.
  static DiscreteMeasure uniform(PointMatrix points);
  /// Clips tiny negative masses and divides by the total; use for raw masses.
  static DiscreteMeasure normalized(PointMatrix points, Eigen::VectorXd masses);
  static DiscreteMeasure dirac(std::span<const double> point);
  /// One-dimensional measure from atom locations and weights.
  static DiscreteMeasure on_line(std::span<const double> locations, std::span<const double> weights);

  int dim() const noexcept { return static_cast<int>(points_.cols()); }
  Eigen::Index size() const noexcept { return points_.rows(); }
  const PointMatrix& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  std::span<const double> point(Eigen::Index i) const noexcept {
    return {points_.row(i).data(), static_cast<std::size_t>(points_.cols())};
  }
  double weight(Eigen::Index i) const noexcept { return weights_[i]; }

 private:
  PointMatrix points_;
  Eigen::VectorXd weights_;
};

/// Axis-uniform lattice on [-1, 1]^dim restricted to the closed unit ball.
struct BallGrid {
  int dim = 0;
  int partitions_per_axis = 0;
  PointMatrix nodes;

  Eigen::Index size() const noexcept { return nodes.rows(); }
};

struct DirichletParams {
  Eigen::VectorXd alpha;

  explicit DirichletParams(Eigen::VectorXd a);
};

BallGrid make_ball_grid(int dim, int p);

/// Draws from Dirichlet(alpha). Gamma variates are generated in log space
/// so that very small concentrations never underflow to an all-zero vector.
Eigen::VectorXd sample_dirichlet(const DirichletParams& params, std::uint64_t seed);
Eigen::VectorXd sample_dirichlet(const DirichletParams& params, Rng& rng);

/// rho = sum_i w_i delta_{k_i} over the grid nodes.
DiscreteMeasure measure_on_grid(const BallGrid& grid, const Eigen::VectorXd& weights);

/// Uniformly weighted cloud of t atoms in the unit ball built from
/// sign-randomized (d+1)-dimensional Dirichlet draws with the last
/// coordinate dropped. Atoms outside the ball are rejected and redrawn.
DiscreteMeasure direct_dirichlet_measure(const Eigen::VectorXd& alpha, int t, std::uint64_t seed);

struct Moments {
  Eigen::VectorXd mean;
  double second_moment = 0.0;
};

Moments moments(const DiscreteMeasure& m);

/// Translates the measure so that its mean is zero.
DiscreteMeasure centered(const DiscreteMeasure& m);

/// Pushes the measure forward under x -> (x - shift) / scale.
DiscreteMeasure affine_map(const DiscreteMeasure& m, double shift, double scale);

}  // namespace convex_order
