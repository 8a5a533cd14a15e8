#include <gtest/gtest.h>

#include <algorithm>

#include "convex_order/error.hpp"
#include "convex_order/tpe.hpp"

using namespace convex_order;

namespace {

TpeConfig unit_box(int dims, int evals, std::uint64_t seed) {
  TpeConfig cfg;
  cfg.bounds.assign(static_cast<std::size_t>(dims), Bounds{0.0, 1.0});
  cfg.max_evals = evals;
  cfg.seed = seed;
  return cfg;
}

double quadratic(const Eigen::VectorXd& x) { return (x[0] - 0.3) * (x[0] - 0.3); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(EiScore, HandValues) {
  for (double g : {0.1, 0.25, 0.9}) EXPECT_DOUBLE_EQ(ei_score(1.0, g), 1.0);
  EXPECT_NEAR(ei_score(1e-12, 0.25), 4.0, 1e-9);
  EXPECT_NEAR(ei_score(3.0, 0.2), 1.0 / 2.6, 1e-12);
}

TEST(EiScore, StrictlyDecreasingInRatio) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0), gam(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const double g = gam(rng);
    EXPECT_GT(ei_score(a, g), ei_score(b, g));
  }
}

TEST(TruncatedKde, IntegratesToOneAndSamplesInBox) {
  const TruncatedKde k({0.05, 0.1, 0.5, 0.97}, {0.0, 1.0});
  double integral = 0.0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) integral += k.density((i + 0.5) / steps) / steps;
  EXPECT_NEAR(integral, 1.0, 1e-4);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = k.sample(rng);
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_GT(k.density(x), 0.0);
  }
}

TEST(Suggest, EmptyHistoryDrawsFromPrior) {
  TpeConfig cfg = unit_box(3, 10, 0);
  cfg.bounds[1] = {-5.0, -4.0};
  Rng a(9), b(9);
  const Eigen::VectorXd x = suggest(TrialHistory{}, cfg, a);
  EXPECT_EQ(x, suggest(TrialHistory{}, cfg, b));
  EXPECT_GE(x[1], -5.0);
  EXPECT_LE(x[1], -4.0);
}

TEST(Suggest, FollowsGoodCluster) {
  const TpeConfig cfg = unit_box(1, 100, 0);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    TrialHistory h;
    for (int i = 0; i < 10; ++i) h.add(Eigen::VectorXd::Constant(1, 0.2 + jitter(rng)), 0.0 + 0.001 * i);
    for (int i = 0; i < 30; ++i) h.add(Eigen::VectorXd::Constant(1, 0.8 + jitter(rng)), 1.0 + 0.001 * i);
    const double x = suggest(h, cfg, rng)[0];
    hits += (x >= 0.1 && x <= 0.4) ? 1 : 0;
  }
  EXPECT_GE(hits, 95);
}

TEST(Suggest, DeterministicGivenSeedAndHistory) {
  const TpeConfig cfg = unit_box(2, 100, 0);
  TrialHistory h;
  Rng fill(4);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = suggest(h, cfg, fill);
    h.add(x, x.squaredNorm());
  }
  Rng a(77), b(77);
  EXPECT_EQ(suggest(h, cfg, a), suggest(h, cfg, b));
}

TEST(Minimize, QuadraticReachesMinimum) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) ok += minimize(quadratic, unit_box(1, 100, seed)).best_loss <= 0.01;
  EXPECT_GE(ok, 9);
}

TEST(Minimize, ExactEvaluationCountAndInvariants) {
  int calls = 0;
  const TpeResult r = minimize([&](const Eigen::VectorXd& x) { ++calls; return quadratic(x) + x[1]; }, unit_box(2, 40, 5));
  EXPECT_EQ(calls, 40);
  EXPECT_EQ(r.history.size(), 40u);
  double m = std::numeric_limits<double>::infinity();
  for (const Trial& t : r.history.trials()) {
    EXPECT_GE(t.x.minCoeff(), 0.0);
    EXPECT_LE(t.x.maxCoeff(), 1.0);
    m = std::min(m, t.loss);
  }
  EXPECT_EQ(r.best_loss, m);
  const auto run = r.history.best_so_far();
  for (std::size_t i = 1; i < run.size(); ++i) EXPECT_LE(run[i], run[i - 1]);
}

TEST(Minimize, ConstantObjectiveAndSingleEval) {
  EXPECT_EQ(minimize([](const Eigen::VectorXd&) { return 2.5; }, unit_box(2, 30, 1)).best_loss, 2.5);
  const TpeResult one = minimize(quadratic, unit_box(1, 1, 8));
  EXPECT_EQ(one.history.size(), 1u);
}

TEST(Minimize, NonFiniteLossesRecordedAsInfinity) {
  const TpeResult r = minimize(
      [](const Eigen::VectorXd& x) { return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : x[0]; },
      unit_box(1, 40, 2));
  std::size_t inf = 0;
  for (const Trial& t : r.history.trials()) inf += std::isinf(t.loss) ? 1 : 0;
  EXPECT_GT(inf, 0u);
  EXPECT_EQ(r.history.finite_count() + inf, 40u);
  EXPECT_TRUE(std::isfinite(r.best_loss));
}

TEST(Minimize, ReproducibleGivenSeed) {
  const TpeResult a = minimize(quadratic, unit_box(1, 50, 3));
  const TpeResult b = minimize(quadratic, unit_box(1, 50, 3));
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].x, b.history[i].x);
}

TEST(Minimize, LogScaleStaysInBounds) {
  TpeConfig cfg = unit_box(3, 60, 4);
  cfg.bounds.assign(3, Bounds{0.01, 10.0});
  cfg.log_scale = true;
  const TpeResult r = minimize([](const Eigen::VectorXd& x) { return std::abs(std::log(x[0])) + x[1]; }, cfg);
  for (const Trial& t : r.history.trials()) {
    EXPECT_GE(t.x.minCoeff(), 0.01);
    EXPECT_LE(t.x.maxCoeff(), 10.0);
  }
  EXPECT_LT(r.best_loss, 0.5);
}

TEST(Minimize, MedianBeatsRandomSearch) {
  std::vector<double> tpe, rnd;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    tpe.push_back(minimize(quadratic, unit_box(1, 100, seed)).best_loss);
    rnd.push_back(random_search(quadratic, unit_box(1, 100, seed)).best_loss);
  }
  EXPECT_LE(median(tpe), median(rnd));
}

TEST(TpeConfig, Validation) {
  TpeConfig c = unit_box(1, 10, 0);
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = unit_box(1, 10, 0);
  c.bounds[0] = {1.0, 1.0};
  EXPECT_THROW(c.validate(), Error);
  c = unit_box(1, 10, 0);
  c.log_scale = true;
  EXPECT_THROW(c.validate(), Error);
}
