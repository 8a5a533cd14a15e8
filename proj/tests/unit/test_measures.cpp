#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>

#include "convex_order/error.hpp"
#include "convex_order/measures.hpp"
#include "oracles.hpp"

using namespace convex_order;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(BallGrid, OneDimensionalEndpoints) {
  const BallGrid g = make_ball_grid(1, 3);
  ASSERT_EQ(g.size(), 3);
  EXPECT_DOUBLE_EQ(g.nodes(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(g.nodes(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.nodes(2, 0), 1.0);
}

TEST(BallGrid, CornersExcluded) {
  const BallGrid g = make_ball_grid(2, 3);
  EXPECT_EQ(g.size(), 5);
}

TEST(BallGrid, CountMatchesLatticeScan) {
  for (int dim = 1; dim <= 3; ++dim)
    for (int p : {2, 5, 21}) EXPECT_EQ(make_ball_grid(dim, p).size(), oracle::lattice_ball_count(dim, p)) << dim << " " << p;
}

TEST(BallGrid, NodesInsideBallAndDistinct) {
  const BallGrid g = make_ball_grid(3, 9);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    EXPECT_LE(g.nodes.row(i).norm(), 1.0 + 1e-12);
    for (Eigen::Index j = 0; j < i; ++j) EXPECT_GT((g.nodes.row(i) - g.nodes.row(j)).norm(), 0.0);
  }
}

TEST(BallGrid, RejectsBadArguments) {
  EXPECT_EQ(code_of([] { make_ball_grid(4, 3); }), ErrorCode::kInvalidDimension);
  EXPECT_EQ(code_of([] { make_ball_grid(0, 3); }), ErrorCode::kInvalidDimension);
  EXPECT_EQ(code_of([] { make_ball_grid(2, 1); }), ErrorCode::kInvalidArgument);
}

TEST(Dirichlet, OnSimplexAndReproducible) {
  const DirichletParams p(Eigen::VectorXd::Ones(7));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd x = sample_dirichlet(p, seed);
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_EQ(x, sample_dirichlet(p, seed));
  }
}

TEST(Dirichlet, MeansMatchAlphaOverSum) {
  Rng rng(11);
  const DirichletParams two(Eigen::Vector2d(5.0, 5.0));
  const DirichletParams three(Eigen::Vector3d(2.0, 1.0, 1.0));
  Eigen::Vector2d s2 = Eigen::Vector2d::Zero();
  Eigen::Vector3d s3 = Eigen::Vector3d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    s2 += sample_dirichlet(two, rng);
    s3 += sample_dirichlet(three, rng);
  }
  EXPECT_NEAR(s2[0] / n, 0.5, 0.01);
  EXPECT_NEAR(s3[0] / n, 0.5, 0.01);
  EXPECT_NEAR(s3[1] / n, 0.25, 0.01);
  EXPECT_NEAR(s3[2] / n, 0.25, 0.01);
}

TEST(Dirichlet, TinyConcentrationsStayFinite) {
  const DirichletParams p(Eigen::VectorXd::Constant(5, 1e-3));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Eigen::VectorXd x = sample_dirichlet(p, seed);
    ASSERT_TRUE(x.allFinite());
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
  }
}

TEST(Dirichlet, RejectsNonpositiveAlpha) {
  EXPECT_EQ(code_of([] { DirichletParams(Eigen::Vector2d(1.0, 0.0)); }), ErrorCode::kNonpositiveAlpha);
  EXPECT_EQ(code_of([] { DirichletParams(Eigen::Vector2d(-1.0, 1.0)); }), ErrorCode::kNonpositiveAlpha);
}

TEST(MeasureOnGrid, SingleNodeAndTwoPoint) {
  BallGrid one;
  one.dim = 1;
  one.nodes = PointMatrix::Zero(1, 1);
  const DiscreteMeasure d = measure_on_grid(one, Eigen::VectorXd::Ones(1));
  EXPECT_EQ(d.size(), 1);
  EXPECT_EQ(d.weight(0), 1.0);

  const DiscreteMeasure m = measure_on_grid(make_ball_grid(1, 3), Eigen::Vector3d(0.5, 0.0, 0.5));
  const Moments mo = moments(m);
  EXPECT_DOUBLE_EQ(mo.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(mo.second_moment, 1.0);
}

TEST(MeasureOnGrid, SecondMomentBySummation) {
  std::mt19937_64 rng(3);
  const BallGrid g = make_ball_grid(2, 11);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd w = oracle::random_simplex(static_cast<int>(g.size()), rng);
    double expect = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) expect += w[i] * (g.nodes(i, 0) * g.nodes(i, 0) + g.nodes(i, 1) * g.nodes(i, 1));
    EXPECT_NEAR(moments(measure_on_grid(g, w)).second_moment, expect, 1e-12);
  }
}

TEST(MeasureOnGrid, RejectsBadWeights) {
  const BallGrid g = make_ball_grid(1, 3);
  EXPECT_EQ(code_of([&] { measure_on_grid(g, Eigen::Vector2d(0.5, 0.5)); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { measure_on_grid(g, Eigen::Vector3d(0.5, 0.5, 0.5)); }), ErrorCode::kNonNormalizedWeights);
  EXPECT_EQ(code_of([&] { measure_on_grid(g, Eigen::Vector3d(1.5, -0.5, 0.0)); }), ErrorCode::kNonNormalizedWeights);
}

TEST(DirectDirichlet, OneDimensionalSymmetric) {
  const DiscreteMeasure m = direct_dirichlet_measure(Eigen::Vector2d(1.0, 1.0), 1000, 5);
  EXPECT_EQ(m.size(), 1000);
  EXPECT_LE(m.points().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_NEAR(moments(m).mean[0], 0.0, 0.05);
}

TEST(DirectDirichlet, AtomsInBall) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DiscreteMeasure m = direct_dirichlet_measure(Eigen::Vector3d(0.3, 2.0, 0.7), 200, seed);
    EXPECT_LE(m.points().rowwise().norm().maxCoeff(), 1.0);
  }
}

TEST(DirectDirichlet, MagnitudeMatchesBetaMarginal) {
  // |D_1| is the first Dirichlet coordinate, i.e. Beta(10, 0.1).
  const DiscreteMeasure m = direct_dirichlet_measure(Eigen::Vector2d(10.0, 0.1), 10000, 17);
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < m.size(); ++i) mags.push_back(std::abs(m.points()(i, 0)));
  const boost::math::beta_distribution<double> beta(10.0, 0.1);
  const double ks = oracle::kolmogorov_distance(mags, [&](double x) { return boost::math::cdf(beta, std::min(x, 1.0)); });
  EXPECT_LE(ks, 0.03);
}

TEST(Moments, Basics) {
  const double zero[] = {0.0};
  const Moments d = moments(DiscreteMeasure::dirac(zero));
  EXPECT_EQ(d.mean[0], 0.0);
  EXPECT_EQ(d.second_moment, 0.0);

  std::mt19937_64 rng(1);
  const Moments g = moments(DiscreteMeasure::uniform(oracle::gaussian_points(10000, 1, 1.0, rng)));
  EXPECT_NEAR(g.second_moment, 1.0, 0.1);
}

TEST(DiscreteMeasure, ValidatesInvariants) {
  PointMatrix p(2, 1);
  p << 0.0, 1.0;
  EXPECT_EQ(code_of([&] { DiscreteMeasure(p, Eigen::Vector2d(0.6, 0.6)); }), ErrorCode::kNonNormalizedWeights);
  EXPECT_EQ(code_of([&] { DiscreteMeasure(p, Eigen::Vector3d(0.2, 0.4, 0.4)); }), ErrorCode::kLengthMismatch);
  const DiscreteMeasure m(p, Eigen::Vector2d(0.25, 0.75));
  EXPECT_NEAR(m.weights().sum(), 1.0, 1e-12);
}

TEST(DiscreteMeasure, CenteredHasZeroMean) {
  std::mt19937_64 rng(8);
  const DiscreteMeasure c = centered(DiscreteMeasure::uniform(oracle::gaussian_points(50, 2, 1.0, rng)));
  EXPECT_LE(moments(c).mean.norm(), 1e-12);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
