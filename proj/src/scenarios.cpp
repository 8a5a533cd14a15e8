#include "convex_order/scenarios.hpp"

#include <algorithm>
#include <random>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

PointMatrix normal_points(int n, int dim, double sigma, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  PointMatrix p(n, dim);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) p(i, k) = sigma * g(rng);
  return p;
}

}  // namespace

MeasurePair gaussian_samples(int dim, double sigma, int n, std::uint64_t seed) {
  require(dim >= 1 && n >= 1 && sigma >= 0.0, ErrorCode::kInvalidArgument, "bad gaussian scenario parameters");
  Rng rng(seed);
  DiscreteMeasure mu = DiscreteMeasure::uniform(normal_points(n, dim, sigma, rng));
  DiscreteMeasure nu = DiscreteMeasure::uniform(normal_points(n, dim, 1.0, rng));
  return {centered(mu), centered(nu)};
}

MeasurePair gaussian_histograms(double sigma, int n, int bins, std::uint64_t seed) {
  require(bins >= 2, ErrorCode::kInvalidArgument, "need at least two bins");
  const MeasurePair s = gaussian_samples(1, sigma, n, seed);
  const double lo = std::min(s.mu.points().minCoeff(), s.nu.points().minCoeff());
  const double hi = std::max(s.mu.points().maxCoeff(), s.nu.points().maxCoeff());
  const double width = (hi - lo) / bins;
  PointMatrix centres(bins, 1);
  for (int b = 0; b < bins; ++b) centres(b, 0) = lo + (b + 0.5) * width;
  auto bin = [&](const DiscreteMeasure& m) {
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(bins);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const int b = std::clamp(static_cast<int>((m.points()(i, 0) - lo) / width), 0, bins - 1);
      mass[b] += m.weight(i);
    }
    return DiscreteMeasure::normalized(centres, mass);
  };
  return {bin(s.mu), bin(s.nu)};
}

MeasurePair two_point(double s) {
  const double a[] = {-1.0 - s, 1.0 + s}, b[] = {-1.0, 1.0}, w[] = {0.5, 0.5};
  return {DiscreteMeasure::on_line(a, w), DiscreteMeasure::on_line(b, w)};
}

MeasurePair cross(double s) {
  PointMatrix p(4, 2);
  p << -1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
  return {DiscreteMeasure::uniform(p), DiscreteMeasure::uniform(p * (1.0 + s))};
}

}  // namespace convex_order
