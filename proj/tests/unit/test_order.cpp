#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "convex_order/error.hpp"
#include "convex_order/order.hpp"
#include "convex_order/scenarios.hpp"
#include "convex_order/transport.hpp"
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

DiscreteMeasure symmetric_pair() {
  const double x[] = {-1.0, 1.0}, w[] = {0.5, 0.5};
  return DiscreteMeasure::on_line(x, w);
}

DiscreteMeasure delta0(int dim) { return DiscreteMeasure::dirac(std::vector<double>(static_cast<std::size_t>(dim), 0.0)); }

// Uniform rho on n points of the unit ball.
DiscreteMeasure random_rho(int n, int d, std::mt19937_64& rng) {
  PointMatrix p = oracle::uniform_points(n, d, -1.0, 1.0, rng);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double r = p.row(i).norm();
    if (r > 1.0) p.row(i) /= r;
  }
  return DiscreteMeasure::uniform(p);
}

void expect_consistent(const ConvexOrderReport& r, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  EXPECT_NEAR(gap(mu, nu, r.witness_rho), r.v_estimate, 1e-6);
  EXPECT_LE(r.v_estimate, 0.0);
  EXPECT_EQ(r.decision, decide(r.v_estimate, r.tolerance));
  EXPECT_EQ(r.trial_gaps.size(), static_cast<std::size_t>(r.evals_used));
  EXPECT_TRUE(std::is_sorted(r.best_so_far.rbegin(), r.best_so_far.rend()));
}

}  // namespace

TEST(Gap, DiracAtOriginIsExactlyZero) {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 3; ++d) {
    const auto mu = DiscreteMeasure::uniform(oracle::gaussian_points(30, d, 2.0, rng));
    const auto nu = DiscreteMeasure::uniform(oracle::gaussian_points(25, d, 0.5, rng));
    EXPECT_EQ(gap(mu, nu, delta0(d)), 0.0);
  }
}

TEST(Gap, TwoPointClosedForm) {
  for (double s : {-0.5, 0.0, 0.5}) {
    const MeasurePair p = two_point(s);
    EXPECT_NEAR(gap(p.mu, p.nu, symmetric_pair()), -s, 1e-12) << s;
  }
}

TEST(Gap, MatchesPermutationOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4, d = 1 + trial % 3;
    const PointMatrix x = oracle::gaussian_points(n, d, 1.0, rng);
    const PointMatrix y = oracle::gaussian_points(n, d, 1.5, rng);
    const DiscreteMeasure rho = random_rho(n, d, rng);
    const double expected =
        oracle::permutation_correlation(y, rho.points()) - oracle::permutation_correlation(x, rho.points());
    EXPECT_NEAR(gap(DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y), rho), expected, 1e-9);
  }
}

TEST(Gap, SameMeasureBothSides) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3;
    const auto mu = DiscreteMeasure::uniform(oracle::gaussian_points(20, d, 1.0, rng));
    EXPECT_NEAR(gap(mu, mu, random_rho(7, d, rng)), 0.0, 1e-9);
  }
}

TEST(Gap, SupportViolation) {
  const MeasurePair p = two_point(0.5);
  const double x[] = {-1.0, 1.01}, w[] = {0.5, 0.5};
  EXPECT_EQ(code_of([&] { gap(p.mu, p.nu, DiscreteMeasure::on_line(x, w)); }), ErrorCode::kSupportViolation);
  const double edge[] = {-1.0, 1.0 + 5e-10};
  EXPECT_NO_THROW(gap(p.mu, p.nu, DiscreteMeasure::on_line(edge, w)));
}

TEST(Gap, EvaluatorAgreesWithGap) {
  std::mt19937_64 rng(8);
  const auto mu = DiscreteMeasure::uniform(oracle::gaussian_points(40, 2, 0.7, rng));
  const auto nu = DiscreteMeasure::uniform(oracle::gaussian_points(40, 2, 1.0, rng));
  const BallGrid grid = make_ball_grid(2, 7);
  const GapEvaluator eval(mu, nu, grid.nodes);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd w = oracle::random_simplex(static_cast<int>(grid.size()), rng);
    EXPECT_NEAR(eval(w), gap(mu, nu, DiscreteMeasure(grid.nodes, w)), 1e-9);
  }
}

TEST(Decide, Examples) {
  EXPECT_EQ(decide(-0.5, 0.05), Decision::kNotOrdered);
  EXPECT_EQ(decide(-0.01, 0.05), Decision::kOrdered);
  EXPECT_EQ(decide(0.0, 0.05), Decision::kOrdered);
  EXPECT_EQ(decide(-0.05, 0.05), Decision::kOrdered);
  EXPECT_EQ(code_of([] { decide(-0.1, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(Decide, DefaultTolerance) {
  EXPECT_DOUBLE_EQ(default_tolerance(100), 0.05);
  EXPECT_DOUBLE_EQ(default_tolerance(400), 0.025);
}

TEST(BruteForce, TwoPointViolated) {
  const MeasurePair p = two_point(0.5);
  const BruteForceResult r = brute_force_v(p.mu, p.nu, make_ball_grid(1, 3), 2, 0.1);
  EXPECT_NEAR(r.v, -0.5, 1e-12);
  ASSERT_EQ(r.rho.size(), 2);
  std::vector<double> atoms;
  for (Eigen::Index i = 0; i < r.rho.size(); ++i) {
    if (r.rho.weight(i) > 0.0) {
      atoms.push_back(r.rho.points()(i, 0));
      EXPECT_NEAR(r.rho.weight(i), 0.5, 1e-12);
    }
  }
  std::sort(atoms.begin(), atoms.end());
  EXPECT_EQ(atoms, (std::vector<double>{-1.0, 1.0}));
}

TEST(BruteForce, OrderedCasesReturnZero) {
  for (double s : {-0.5, -0.25, 0.0}) {
    const MeasurePair p = two_point(s);
    EXPECT_NEAR(brute_force_v(p.mu, p.nu, make_ball_grid(1, 3), 2, 0.1).v, 0.0, 1e-12) << s;
  }
  const MeasurePair c = two_point(0.3);
  EXPECT_NEAR(brute_force_v(c.mu, c.mu, make_ball_grid(1, 5), 3, 0.25).v, 0.0, 1e-12);
}

TEST(BruteForce, MatchesMeshEnumeration) {
  // Full-support enumeration with an independent loop over compositions.
  const MeasurePair p = cross(-0.4);
  const BallGrid grid = make_ball_grid(2, 3);
  const int units = 4;
  double expected = 0.0;
  oracle::for_each_composition(units, static_cast<int>(grid.size()), [&](const std::vector<int>& c) {
    Eigen::VectorXd w(grid.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = c[static_cast<std::size_t>(i)] / double(units);
    expected = std::min(expected, gap(p.mu, p.nu, DiscreteMeasure(grid.nodes, w)));
  });
  EXPECT_NEAR(brute_force_v(p.mu, p.nu, grid, static_cast<int>(grid.size()), 1.0 / units).v, expected, 1e-12);
  EXPECT_LT(expected, -0.3);
}

TEST(BruteForce, Guards) {
  const MeasurePair p = two_point(0.5);
  EXPECT_EQ(code_of([&] { brute_force_v(p.mu, p.nu, make_ball_grid(2, 21), 6, 0.01); }), ErrorCode::kBudgetExceeded);
  EXPECT_EQ(code_of([&] { brute_force_v(p.mu, p.nu, make_ball_grid(1, 3), 2, 0.3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { brute_force_v(p.mu, p.nu, make_ball_grid(1, 3), 4, 0.5); }), ErrorCode::kInvalidArgument);
}

TEST(OrderConfig, Validation) {
  OrderSearchConfig c;
  EXPECT_NO_THROW(c.validate());
  c.grid_partitions = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.alpha_lo = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.alpha_hi = c.alpha_lo;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_evals = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(IndirectSearch, IdenticalMeasures) {
  const auto s = gaussian_samples(1, 1.0, 100, 4);
  OrderSearchConfig c;
  c.seed = 4;
  const ConvexOrderReport r = estimate_v(s.nu, s.nu, c);
  EXPECT_GE(r.v_estimate, -0.05);
  EXPECT_LE(r.v_estimate, 0.0);
  expect_consistent(r, s.nu, s.nu);
}

TEST(IndirectSearch, TwoPointViolation) {
  // Median over seeded runs; individual runs spread by roughly +-0.04.
  const MeasurePair p = two_point(0.5);
  std::vector<double> v;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    OrderSearchConfig c;
    c.seed = seed;
    const ConvexOrderReport r = estimate_v_indirect(p.mu, p.nu, c);
    expect_consistent(r, p.mu, p.nu);
    EXPECT_GE(r.v_estimate, -0.5 - 1e-6);
    v.push_back(r.v_estimate);
  }
  std::nth_element(v.begin(), v.begin() + 5, v.end());
  EXPECT_LE(v[5], -0.45);
}

TEST(IndirectSearch, GaussianViolation1d) {
  const auto s = gaussian_samples(1, 1.5, 100, 2);
  OrderSearchConfig c;
  c.seed = 2;
  const ConvexOrderReport r = estimate_v(s.mu, s.nu, c);
  EXPECT_LT(r.v_estimate, -0.05);
  EXPECT_EQ(r.decision, Decision::kNotOrdered);
  expect_consistent(r, s.mu, s.nu);
}

TEST(IndirectSearch, HistogramVariant) {
  const auto h = gaussian_histograms(1.5, 100, 100, 1);
  OrderSearchConfig c;
  c.method = SearchMethod::kIndirectHistogram;
  c.grid_partitions = 100;
  c.seed = 1;
  const ConvexOrderReport r = estimate_v(h.mu, h.nu, c);
  EXPECT_LT(r.v_estimate, -0.05);
  expect_consistent(r, h.mu, h.nu);
}

TEST(IndirectSearch, HistogramVariantRejectsMismatchedGrids) {
  const MeasurePair p = two_point(0.5);
  OrderSearchConfig c;
  c.method = SearchMethod::kIndirectHistogram;
  c.max_evals = 5;
  EXPECT_THROW(estimate_v(p.mu, p.nu, c), Error);
  const auto g = gaussian_samples(2, 1.0, 10, 0);
  EXPECT_THROW(estimate_v(g.mu, g.nu, c), Error);
}

TEST(IndirectSearch, StochasticWeightsStillConsistent) {
  const MeasurePair p = two_point(0.5);
  OrderSearchConfig c;
  c.stochastic_weights = true;
  c.max_evals = 40;
  const ConvexOrderReport r = estimate_v(p.mu, p.nu, c);
  expect_consistent(r, p.mu, p.nu);
  EXPECT_LT(r.v_estimate, -0.1);
}

TEST(IndirectSearch, Reproducible) {
  const auto s = gaussian_samples(2, 1.5, 60, 9);
  OrderSearchConfig c;
  c.seed = 17;
  c.max_evals = 30;
  const ConvexOrderReport a = estimate_v(s.mu, s.nu, c), b = estimate_v(s.mu, s.nu, c);
  EXPECT_EQ(a.v_estimate, b.v_estimate);
  EXPECT_EQ(a.trial_gaps, b.trial_gaps);
  EXPECT_EQ(a.witness_alpha, b.witness_alpha);
}

TEST(DirectSearch, IdenticalMeasures) {
  const auto s = gaussian_samples(2, 1.0, 100, 6);
  OrderSearchConfig c;
  c.method = SearchMethod::kDirect;
  c.seed = 6;
  const ConvexOrderReport r = estimate_v(s.nu, s.nu, c);
  EXPECT_GE(r.v_estimate, -0.1);
  EXPECT_LE(r.v_estimate, 0.0);
  expect_consistent(r, s.nu, s.nu);
}

TEST(DirectSearch, OrderedGaussian2d) {
  const auto s = gaussian_samples(2, 0.5, 100, 3);
  OrderSearchConfig c;
  c.method = SearchMethod::kDirect;
  c.seed = 3;
  const ConvexOrderReport r = estimate_v(s.mu, s.nu, c);
  EXPECT_GE(r.v_estimate, -0.05);
  EXPECT_EQ(r.decision, Decision::kOrdered);
}

TEST(DirectSearch, TwoPointViolation) {
  const MeasurePair p = two_point(0.5);
  OrderSearchConfig c;
  c.method = SearchMethod::kDirect;
  const ConvexOrderReport r = estimate_v(p.mu, p.nu, c);
  EXPECT_LE(r.v_estimate, -0.25);
  EXPECT_GE(r.v_estimate, -0.5 - 1e-6);
  expect_consistent(r, p.mu, p.nu);
}

TEST(DirectSearch, Reproducible) {
  const MeasurePair p = cross(0.5);
  OrderSearchConfig c;
  c.method = SearchMethod::kDirect;
  c.max_evals = 20;
  c.seed = 99;
  EXPECT_EQ(estimate_v(p.mu, p.nu, c).trial_gaps, estimate_v(p.mu, p.nu, c).trial_gaps);
}

TEST(Search, NeverBelowBruteForceOnTwoPoint) {
  // On {-1, 0, 1} the brute force value -0.5 is the true infimum.
  const MeasurePair p = two_point(0.5);
  const double floor = brute_force_v(p.mu, p.nu, make_ball_grid(1, 3), 3, 0.05).v;
  for (auto m : {SearchMethod::kIndirectSamples, SearchMethod::kDirect}) {
    OrderSearchConfig c;
    c.method = m;
    c.max_evals = 40;
    EXPECT_GE(estimate_v(p.mu, p.nu, c).v_estimate, floor - 1e-6);
  }
}

TEST(Search, CrossReconstruction) {
  // nu is the scaled copy, so s > 0 is ordered.
  for (double s : {-0.3, 0.5}) {
    const MeasurePair p = cross(s);
    OrderSearchConfig c;
    c.grid_partitions = 9;
    const ConvexOrderReport r = estimate_v(p.mu, p.nu, c);
    expect_consistent(r, p.mu, p.nu);
    EXPECT_EQ(r.decision, s < 0 ? Decision::kNotOrdered : Decision::kOrdered) << s;
  }
}
