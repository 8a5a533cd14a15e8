#include "convex_order/measures.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "convex_order/error.hpp"

namespace convex_order {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DiscreteMeasure::DiscreteMeasure(PointMatrix points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  require(points_.rows() > 0, ErrorCode::kInvalidArgument, "measure needs at least one atom");
  require(points_.cols() > 0, ErrorCode::kInvalidDimension, "measure dimension must be positive");
  require(weights_.size() == points_.rows(), ErrorCode::kLengthMismatch,
          "weights (" + std::to_string(weights_.size()) + ") vs atoms (" + std::to_string(points_.rows()) + ")");
  require(points_.allFinite(), ErrorCode::kInvalidArgument, "atom coordinates must be finite");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    require(std::isfinite(weights_[i]) && weights_[i] >= 0.0, ErrorCode::kNonNormalizedWeights,
            "weight " + std::to_string(i) + " is negative or non-finite");
  }
  const double total = weights_.sum();
  require(std::abs(total - 1.0) <= kWeightTolerance, ErrorCode::kNonNormalizedWeights,
          "weights sum to " + std::to_string(total));
}

DiscreteMeasure DiscreteMeasure::uniform(PointMatrix points) {
  const auto n = points.rows();
  require(n > 0, ErrorCode::kInvalidArgument, "measure needs at least one atom");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return DiscreteMeasure(std::move(points), std::move(w));
}

DiscreteMeasure DiscreteMeasure::normalized(PointMatrix points, Eigen::VectorXd masses) {
  for (Eigen::Index i = 0; i < masses.size(); ++i) {
    require(std::isfinite(masses[i]), ErrorCode::kNonNormalizedWeights, "non-finite mass");
    if (masses[i] < 0.0) masses[i] = 0.0;
  }
  const double total = masses.sum();
  require(total > 0.0, ErrorCode::kNonNormalizedWeights, "total mass is zero");
  masses /= total;
  return DiscreteMeasure(std::move(points), std::move(masses));
}

DiscreteMeasure DiscreteMeasure::dirac(std::span<const double> point) {
  PointMatrix p(1, static_cast<Eigen::Index>(point.size()));
  for (std::size_t k = 0; k < point.size(); ++k) p(0, static_cast<Eigen::Index>(k)) = point[k];
  return DiscreteMeasure(std::move(p), Eigen::VectorXd::Ones(1));
}

DiscreteMeasure DiscreteMeasure::on_line(std::span<const double> locations, std::span<const double> weights) {
  require(locations.size() == weights.size(), ErrorCode::kLengthMismatch, "locations vs weights");
  const auto n = static_cast<Eigen::Index>(locations.size());
  PointMatrix p(n, 1);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, 0) = locations[static_cast<std::size_t>(i)];
    w[i] = weights[static_cast<std::size_t>(i)];
  }
  return DiscreteMeasure(std::move(p), std::move(w));
}

DirichletParams::DirichletParams(Eigen::VectorXd a) : alpha(std::move(a)) {
  require(alpha.size() > 0, ErrorCode::kInvalidArgument, "empty alpha");
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    require(std::isfinite(alpha[i]) && alpha[i] > 0.0, ErrorCode::kNonpositiveAlpha,
            "alpha[" + std::to_string(i) + "] = " + std::to_string(alpha[i]));
  }
}

BallGrid make_ball_grid(int dim, int p) {
  require(dim >= 1 && dim <= 3, ErrorCode::kInvalidDimension,
          "ball grids support dim in {1,2,3}, got " + std::to_string(dim));
  require(p >= 2, ErrorCode::kInvalidArgument, "grid needs p >= 2 partitions per axis");

  const auto np = static_cast<std::size_t>(p);
  const auto nd = static_cast<std::size_t>(dim);
  std::vector<double> axis(np);
  for (std::size_t i = 0; i < np; ++i) axis[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(p - 1);

  // Odometer over the p^dim lattice, last axis fastest.
  std::vector<double> coords;
  std::vector<std::size_t> idx(nd, 0);
  Eigen::Index count = 0;
  while (true) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < nd; ++k) norm2 += axis[idx[k]] * axis[idx[k]];
    if (norm2 <= 1.0 + 1e-12) {
      for (std::size_t k = 0; k < nd; ++k) coords.push_back(axis[idx[k]]);
      ++count;
    }
    std::size_t k = nd;
    while (k > 0 && ++idx[k - 1] == np) idx[--k] = 0;
    if (k == 0) break;
  }

  BallGrid grid;
  grid.dim = dim;
  grid.partitions_per_axis = p;
  grid.nodes = Eigen::Map<PointMatrix>(coords.data(), count, dim);
  return grid;
}

namespace {

// log of a Gamma(shape, 1) variate. For shape < 1 uses G(a) = G(a+1) U^{1/a}.
double log_gamma_variate(double shape, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    double g = gamma(rng);
    while (g <= 0.0) g = gamma(rng);
    return std::log(g);
  }
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  double g = gamma(rng);
  while (g <= 0.0) g = gamma(rng);
  const double u = 1.0 - unif(rng);  // (0, 1]
  return std::log(g) + std::log(u) / shape;
}

}  // namespace

Eigen::VectorXd sample_dirichlet(const DirichletParams& params, Rng& rng) {
  const auto g = params.alpha.size();
  Eigen::VectorXd logs(g);
  for (Eigen::Index i = 0; i < g; ++i) logs[i] = log_gamma_variate(params.alpha[i], rng);
  const double top = logs.maxCoeff();
  Eigen::VectorXd x = (logs.array() - top).exp().matrix();
  x /= x.sum();
  return x;
}

Eigen::VectorXd sample_dirichlet(const DirichletParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return sample_dirichlet(params, rng);
}

DiscreteMeasure measure_on_grid(const BallGrid& grid, const Eigen::VectorXd& weights) {
  require(weights.size() == grid.size(), ErrorCode::kLengthMismatch,
          "weights (" + std::to_string(weights.size()) + ") vs grid nodes (" + std::to_string(grid.size()) + ")");
  return DiscreteMeasure(grid.nodes, weights);
}

DiscreteMeasure direct_dirichlet_measure(const Eigen::VectorXd& alpha, int t, std::uint64_t seed) {
  const DirichletParams params(alpha);
  require(t >= 1, ErrorCode::kInvalidArgument, "target size t must be >= 1");
  const auto d = alpha.size() - 1;
  require(d >= 1, ErrorCode::kInvalidDimension, "alpha must have length d+1 with d >= 1");

  constexpr std::size_t kWindow = 10000;
  constexpr double kMinAcceptance = 1e-3;

  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  PointMatrix atoms(t, d);
  std::deque<bool> window;
  std::size_t accepted_in_window = 0;
  int accepted = 0;
  while (accepted < t) {
    const Eigen::VectorXd draw = sample_dirichlet(params, rng);
    double norm2 = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double v = coin(rng) ? -draw[k] : draw[k];
      atoms(accepted, k) = v;
      norm2 += v * v;
    }
    const bool ok = norm2 <= 1.0;
    window.push_back(ok);
    accepted_in_window += ok ? 1 : 0;
    if (window.size() > kWindow) {
      accepted_in_window -= window.front() ? 1 : 0;
      window.pop_front();
    }
    if (window.size() == kWindow && static_cast<double>(accepted_in_window) < kMinAcceptance * kWindow) {
      fail(ErrorCode::kRejectionStall, "acceptance rate fell below 1e-3");
    }
    if (ok) ++accepted;
  }
  return DiscreteMeasure::uniform(std::move(atoms));
}

Moments moments(const DiscreteMeasure& m) {
  Moments out;
  out.mean = m.points().transpose() * m.weights();
  out.second_moment = m.weights().dot(m.points().rowwise().squaredNorm());
  return out;
}

DiscreteMeasure centered(const DiscreteMeasure& m) {
  const Eigen::RowVectorXd mean = (m.points().transpose() * m.weights()).transpose();
  PointMatrix shifted = m.points().rowwise() - mean;
  return DiscreteMeasure(std::move(shifted), m.weights());
}

DiscreteMeasure affine_map(const DiscreteMeasure& m, double shift, double scale) {
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::kInvalidArgument, "affine scale must be positive");
  PointMatrix mapped = (m.points().array() - shift) / scale;
  return DiscreteMeasure(std::move(mapped), m.weights());
}

}  // namespace convex_order
