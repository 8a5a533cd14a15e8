#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "convex_order/error.hpp"
#include "convex_order/io.hpp"
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

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "convex_order_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Io, NumberRoundTrips) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(std::stod(io::number(x)), x);
  }
  EXPECT_EQ(io::number(0.5), "0.5");
  EXPECT_EQ(io::number(-3.0), "-3");
}

TEST(Io, SamplesRoundTrip) {
  std::mt19937_64 rng(32);
  const auto m = DiscreteMeasure::normalized(oracle::gaussian_points(25, 3, 1.0, rng),
                                             oracle::random_simplex(25, rng));
  const DiscreteMeasure back = io::parse_samples(io::samples_csv(m));
  EXPECT_EQ(back.points(), m.points());
  EXPECT_TRUE(back.weights().isApprox(m.weights(), 1e-15));
}

TEST(Io, SamplesWithoutWeightsAreUniform) {
  const DiscreteMeasure m = io::parse_samples("# two points\ndim=2\n1,2\n\n-1, 0.5\n");
  ASSERT_EQ(m.size(), 2);
  EXPECT_EQ(m.points()(1, 1), 0.5);
  EXPECT_EQ(m.weight(0), 0.5);
}

TEST(Io, SamplesRefusals) {
  EXPECT_EQ(code_of([] { io::parse_samples(""); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("1,2\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=0\n1\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=2\n1,2,3,4\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=1\n1,0.5\n2\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=1\n1,-0.5\n2,1.5\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=1\nx\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=1\nnan\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_samples("dim=1\n"); }), ErrorCode::kMalformedInput);
}

TEST(Io, Histogram) {
  const DiscreteMeasure m = io::parse_histogram("-1,2\n0,1\n1,1\n");
  EXPECT_EQ(m.dim(), 1);
  EXPECT_EQ(m.weight(0), 0.5);
  EXPECT_EQ(m.weight(2), 0.25);
  EXPECT_EQ(code_of([] { io::parse_histogram("1,2,3\n"); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::parse_histogram("1,0\n"); }), ErrorCode::kMalformedInput);
}

TEST(Io, CallSheet) {
  const CallSheet s = io::parse_call_sheet("maturity=T1\n90,10\n100,5\n110,0\n");
  EXPECT_EQ(s.maturity, "T1");
  EXPECT_EQ(s.strikes, (std::vector<double>{90, 100, 110}));
  EXPECT_EQ(s.prices, (std::vector<double>{10, 5, 0}));
  EXPECT_EQ(code_of([] { io::parse_call_sheet("90,10\n"); }), ErrorCode::kMalformedInput);
}

TEST(Io, PathRoundTrip) {
  const MarketPath p = simulate_market(3, 20, 0.05, 0.3, 1);
  const MarketPath back = io::parse_path(io::path_csv(p));
  EXPECT_EQ(back.times, p.times);
  EXPECT_EQ(back.weights, p.weights);
  EXPECT_NO_THROW(back.validate());
  EXPECT_EQ(code_of([] { io::parse_path("0,0.5,0.5\n1,1\n"); }), ErrorCode::kMalformedInput);
}

TEST(Io, FilesAndFormatDetection) {
  io::write_file(scratch("a.csv"), "dim=1\n0\n");
  io::write_file(scratch("h.csv"), "0,1\n");
  io::write_file(scratch("s.csv"), "maturity=T\n1,1\n");
  EXPECT_EQ(io::detect_format(scratch("a.csv")), io::InputFormat::kSamples);
  EXPECT_EQ(io::detect_format(scratch("h.csv")), io::InputFormat::kHistogram);
  EXPECT_EQ(io::detect_format(scratch("s.csv")), io::InputFormat::kCallSheet);
  EXPECT_EQ(io::read_measure(scratch("h.csv")).format, io::InputFormat::kHistogram);
  EXPECT_EQ(code_of([] { io::read_measure(scratch("s.csv")); }), ErrorCode::kMalformedInput);
  EXPECT_EQ(code_of([] { io::read_samples(scratch("missing.csv")); }), ErrorCode::kMalformedInput);
}

TEST(Io, ReportLayout) {
  io::Report r;
  r.add("decision", "ordered");
  r.add("v_estimate", -0.25);
  r.add("evals", 3);
  r.add("flag", true);
  r.add_block("trials", {{"trial", "gap"}, {{1, -0.5}, {2, 0.0}}});
  EXPECT_EQ(r.render(),
            "decision: ordered\nv_estimate: -0.25\nevals: 3\nflag: true\n\n[trials]\ntrial,gap\n1,-0.5\n2,0\n");
}
