#include "convex_order/order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "convex_order/error.hpp"
#include "convex_order/network_simplex.hpp"
#include "convex_order/tpe.hpp"
#include "convex_order/transport.hpp"

namespace convex_order {

namespace {

constexpr double kSupportSlack = 1e-9;
constexpr long kBruteForceBudget = 10'000'000;

std::vector<Eigen::Index> first_coordinate_order(const PointMatrix& pts) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pts.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index l, Eigen::Index r) { return pts(l, 0) < pts(r, 0); });
  return idx;
}

void check_support(const PointMatrix& pts) {
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double r = pts.row(i).norm();
    require(r <= 1.0 + kSupportSlack, ErrorCode::kSupportViolation,
            "rho atom " + std::to_string(i) + " has norm " + std::to_string(r));
  }
}

DiscreteMeasure origin(int dim) { return DiscreteMeasure(PointMatrix::Zero(1, dim), Eigen::VectorXd::Ones(1)); }

// Keeps atoms with positive weight.
DiscreteMeasure compact(const PointMatrix& pts, const Eigen::VectorXd& w) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) keep.push_back(i);
  PointMatrix p(static_cast<Eigen::Index>(keep.size()), pts.cols());
  Eigen::VectorXd v(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    p.row(static_cast<Eigen::Index>(r)) = pts.row(keep[r]);
    v[static_cast<Eigen::Index>(r)] = w[keep[r]];
  }
  return DiscreteMeasure::normalized(std::move(p), std::move(v));
}

TpeConfig tpe_config(const OrderSearchConfig& cfg, Eigen::Index dims) {
  TpeConfig t;
  t.gamma = cfg.gamma;
  t.n_candidates = cfg.n_candidates;
  t.max_evals = cfg.max_evals;
  t.bounds.assign(static_cast<std::size_t>(dims), Bounds{cfg.alpha_lo, cfg.alpha_hi});
  t.log_scale = cfg.log_scale;
  t.seed = cfg.seed;
  return t;
}

// Fills the report from the best trial, substitutes delta_0 when every trial
// gap was positive, and cross-checks the value through the public gap().
ConvexOrderReport finish(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg,
                         const TpeResult& search, DiscreteMeasure best_rho, std::vector<double> trial_gaps) {
  ConvexOrderReport rep;
  rep.tolerance = cfg.tolerance;
  rep.evals_used = static_cast<int>(search.history.size());
  rep.trial_gaps = std::move(trial_gaps);
  rep.best_so_far = search.history.best_so_far();
  rep.witness_alpha = search.best_x;
  if (search.best_loss > 0.0 || !std::isfinite(search.best_loss)) {
    rep.witness_rho = origin(mu.dim());
    rep.v_estimate = 0.0;
  } else {
    rep.witness_rho = std::move(best_rho);
    rep.v_estimate = search.best_loss;
  }
  require(gap(mu, nu, origin(mu.dim())) == 0.0, ErrorCode::kNumericalFailure, "gap at delta_0 is not zero");
  const double recheck = gap(mu, nu, rep.witness_rho);
  require(std::abs(recheck - rep.v_estimate) <= 1e-6, ErrorCode::kNumericalFailure,
          "witness gap " + std::to_string(recheck) + " disagrees with search value " + std::to_string(rep.v_estimate));
  rep.decision = decide(rep.v_estimate, cfg.tolerance);
  return rep;
}

}  // namespace

std::string_view to_string(SearchMethod m) noexcept {
  switch (m) {
    case SearchMethod::kIndirectHistogram: return "indirect-hist";
    case SearchMethod::kIndirectSamples: return "indirect-samples";
    case SearchMethod::kDirect: return "direct";
  }
  return "unknown";
}

std::string_view to_string(Decision d) noexcept { return d == Decision::kOrdered ? "ordered" : "not_ordered"; }

void OrderSearchConfig::validate() const {
  require(grid_partitions >= 2, ErrorCode::kInvalidArgument, "grid_partitions must be >= 2");
  require(max_evals >= 1, ErrorCode::kInvalidArgument, "max_evals must be >= 1");
  require(alpha_lo > 0.0 && alpha_lo < alpha_hi, ErrorCode::kInvalidArgument, "alpha bounds need 0 < lo < hi");
  require(direct_atoms >= 1, ErrorCode::kInvalidArgument, "direct_atoms must be >= 1");
  require(tolerance > 0.0, ErrorCode::kInvalidArgument, "tolerance must be positive");
}

GapEvaluator::GapEvaluator(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const PointMatrix& support) {
  require(mu.dim() == nu.dim() && mu.dim() == support.cols(), ErrorCode::kDimensionMismatch,
          "mu, nu and rho support must share a dimension");
  check_support(support);
  support_order_ = first_coordinate_order(support);
  mu_ = {mu.weights(), -(support * mu.points().transpose()), first_coordinate_order(mu.points())};
  nu_ = {nu.weights(), -(support * nu.points().transpose()), first_coordinate_order(nu.points())};
}

double GapEvaluator::correlation(const Side& side, const Eigen::VectorXd& w) const {
  if (w.size() == 1 || side.weights.size() == 1) {
    return -(w.transpose() * side.neg_inner * side.weights)(0, 0);
  }
  return -solve_transport(w, side.weights, side.neg_inner, support_order_, side.order).value;
}

double GapEvaluator::operator()(const Eigen::VectorXd& w) const {
  require(w.size() == static_cast<Eigen::Index>(support_order_.size()), ErrorCode::kLengthMismatch,
          "rho weights do not match the support");
  return correlation(nu_, w) - correlation(mu_, w);
}

double gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DiscreteMeasure& rho) {
  require(mu.dim() == nu.dim() && nu.dim() == rho.dim(), ErrorCode::kDimensionMismatch, "measures differ in dimension");
  check_support(rho.points());
  return correlation_cost(nu, rho) - correlation_cost(mu, rho);
}

ConvexOrderReport estimate_v_indirect(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg) {
  cfg.validate();
  require(mu.dim() == nu.dim(), ErrorCode::kDimensionMismatch, "mu and nu differ in dimension");
  if (cfg.method == SearchMethod::kIndirectHistogram) {
    require(mu.dim() == 1, ErrorCode::kInvalidDimension, "histogram variant is one-dimensional");
    require(mu.size() == nu.size() && mu.points() == nu.points(), ErrorCode::kInvalidArgument,
            "histogram variant needs mu and nu on one shared grid");
  }
  const BallGrid grid = make_ball_grid(mu.dim(), cfg.grid_partitions);
  const GapEvaluator eval(mu, nu, grid.nodes);

  Rng weight_rng(derive_seed(cfg.seed, 1));
  Eigen::VectorXd best_w;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
  const auto objective = [&](const Eigen::VectorXd& alpha) {
    const Eigen::VectorXd w = cfg.stochastic_weights ? sample_dirichlet(DirichletParams(alpha), weight_rng)
                                                     : Eigen::VectorXd(alpha / alpha.sum());
    const double g = eval(w);
    gaps.push_back(g);
    if (g < best) {
      best = g;
      best_w = w;
    }
    return g;
  };
  const TpeResult search = minimize(objective, tpe_config(cfg, grid.size()));
  return finish(mu, nu, cfg, search, compact(grid.nodes, best_w), std::move(gaps));
}

ConvexOrderReport estimate_v_direct(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg) {
  cfg.validate();
  require(mu.dim() == nu.dim(), ErrorCode::kDimensionMismatch, "mu and nu differ in dimension");
  std::uint64_t trial = 0;
  std::optional<DiscreteMeasure> best_rho;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
  const auto objective = [&](const Eigen::VectorXd& alpha) {
    DiscreteMeasure rho = direct_dirichlet_measure(alpha, cfg.direct_atoms, derive_seed(cfg.seed, 1000 + trial++));
    const GapEvaluator eval(mu, nu, rho.points());
    const double g = eval(rho.weights());
    gaps.push_back(g);
    if (g < best) {
      best = g;
      best_rho = std::move(rho);
    }
    return g;
  };
  const TpeResult search = minimize(objective, tpe_config(cfg, mu.dim() + 1));
  return finish(mu, nu, cfg, search, best_rho ? *best_rho : origin(mu.dim()), std::move(gaps));
}

ConvexOrderReport estimate_v(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OrderSearchConfig& cfg) {
  return cfg.method == SearchMethod::kDirect ? estimate_v_direct(mu, nu, cfg) : estimate_v_indirect(mu, nu, cfg);
}

Decision decide(double v_estimate, double eps) {
  require(eps > 0.0, ErrorCode::kInvalidArgument, "tolerance must be positive");
  return v_estimate < -eps ? Decision::kNotOrdered : Decision::kOrdered;
}

double default_tolerance(Eigen::Index n_samples) {
  require(n_samples >= 1, ErrorCode::kInvalidArgument, "sample count must be positive");
  return 0.5 / std::sqrt(static_cast<double>(n_samples));
}

BruteForceResult brute_force_v(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const BallGrid& grid, int k,
                               double weight_step) {
  const auto g = grid.size();
  require(k >= 1 && k <= g, ErrorCode::kInvalidArgument, "support size must lie in [1, grid size]");
  require(weight_step > 0.0 && weight_step <= 1.0, ErrorCode::kInvalidArgument, "weight_step must lie in (0, 1]");
  const auto units = static_cast<int>(std::lround(1.0 / weight_step));
  require(std::abs(units * weight_step - 1.0) <= 1e-9, ErrorCode::kInvalidArgument, "1 / weight_step must be an integer");

  // C(g, k) * C(units + k - 1, k - 1), accumulated in floating point to avoid overflow.
  double subsets = 1.0, meshes = 1.0;
  for (int i = 0; i < k; ++i) subsets = subsets * static_cast<double>(g - i) / (i + 1);
  for (int i = 1; i < k; ++i) meshes = meshes * (units + i) / i;
  require(subsets * meshes <= static_cast<double>(kBruteForceBudget), ErrorCode::kBudgetExceeded,
          "enumeration needs " + std::to_string(subsets * meshes) + " evaluations");

  BruteForceResult out;
  out.v = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<int> comp(static_cast<std::size_t>(k), 0);
  PointMatrix support(k, grid.dim);
  Eigen::VectorXd w(k);
  Eigen::VectorXd best_w;
  PointMatrix best_support;

  for (;;) {
    for (int r = 0; r < k; ++r) support.row(r) = grid.nodes.row(pick[static_cast<std::size_t>(r)]);
    const GapEvaluator eval(mu, nu, support);
    // Odometer over compositions of `units` into k parts.
    auto visit = [&](auto&& self, int pos, int left) -> void {
      if (pos == k - 1) {
        comp[static_cast<std::size_t>(pos)] = left;
        for (int r = 0; r < k; ++r) w[r] = comp[static_cast<std::size_t>(r)] * weight_step;
        w /= w.sum();
        const double v = eval(w);
        ++out.evaluations;
        if (v < out.v) {
          out.v = v;
          best_w = w;
          best_support = support;
        }
        return;
      }
      for (int c = 0; c <= left; ++c) {
        comp[static_cast<std::size_t>(pos)] = c;
        self(self, pos + 1, left - c);
      }
    };
    visit(visit, 0, units);

    // Next k-subset in lexicographic order.
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == g - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  out.rho = compact(best_support, best_w);
  return out;
}

}  // namespace convex_order
