#include "convex_order/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "convex_order/error.hpp"
#include "convex_order/network_simplex.hpp"

namespace convex_order {

namespace {

std::vector<Eigen::Index> order_by_first_coordinate(const PointMatrix& pts) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pts.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index l, Eigen::Index r) { return pts(l, 0) < pts(r, 0); });
  return idx;
}

TransportPlan make_plan(Eigen::MatrixXd matrix, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return TransportPlan{std::move(matrix), a.weights(), b.weights()};
}

double median_abs_nonzero(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const double x = std::abs(m.data()[k]);
    if (x > 0.0) v.push_back(x);
  }
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Projects a nonnegative matrix onto the transport polytope of (a, b):
// shrink rows, shrink columns, then spread the residual as a rank-one term.
Eigen::MatrixXd round_to_marginals(Eigen::MatrixXd p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd rows = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (rows[i] > a[i]) p.row(i) *= a[i] / rows[i];
  }
  const Eigen::VectorXd cols = p.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    if (cols[j] > b[j]) p.col(j) *= b[j] / cols[j];
  }
  const Eigen::VectorXd err_r = (a - p.rowwise().sum()).cwiseMax(0.0);
  const Eigen::VectorXd err_c = (b - p.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_r.sum();
  if (mass > 0.0) p += err_r * err_c.transpose() / mass;
  return p;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

}  // namespace

CostMatrix cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b, CostMode mode) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch,
          "dims " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  CostMatrix out;
  out.mode = mode;
  if (mode == CostMode::kNegInnerProduct) {
    out.entries = -(a.points() * b.points().transpose());
  } else {
    // Direct differences: exact zeros for coincident atoms, no negative round-off.
    out.entries.resize(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        double s = 0.0;
        for (int k = 0; k < a.dim(); ++k) {
          const double d = a.points()(i, k) - b.points()(j, k);
          s += d * d;
        }
        out.entries(i, j) = s;
      }
  }
  return out;
}

TransportResult emd(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost) {
  require(cost.rows() == a.size() && cost.cols() == b.size(), ErrorCode::kLengthMismatch,
          "cost is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  TransportResult out;
  if (a.size() == 1 || b.size() == 1) {
    Eigen::MatrixXd p = a.weights() * b.weights().transpose();
    out.value = (p.array() * cost.entries.array()).sum();
    out.plan = make_plan(std::move(p), a, b);
    return out;
  }
  const auto rows = order_by_first_coordinate(a.points());
  const auto cols = order_by_first_coordinate(b.points());
  TransportSolution sol = solve_transport(a.weights(), b.weights(), cost.entries, rows, cols);
  out.value = sol.value;
  out.duality_gap = sol.duality_gap;
  out.plan = make_plan(std::move(sol.plan), a, b);
  return out;
}

double w2_squared(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return emd(a, b, cost_matrix(a, b, CostMode::kSquaredEuclidean)).value;
}

double correlation_cost(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return -emd(a, b, cost_matrix(a, b, CostMode::kNegInnerProduct)).value;
}

SinkhornResult sinkhorn(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost,
                        const SinkhornConfig& cfg) {
  require(cfg.reg > 0.0 && std::isfinite(cfg.reg), ErrorCode::kInvalidArgument, "reg must be positive");
  require(cfg.max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  require(cost.rows() == a.size() && cost.cols() == b.size(), ErrorCode::kLengthMismatch, "cost shape");

  // Zero-mass atoms carry no constraint; solve on the support and embed back.
  std::vector<Eigen::Index> ri, ci;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a.weight(i) > 0.0) ri.push_back(i);
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b.weight(j) > 0.0) ci.push_back(j);
  const auto m = static_cast<Eigen::Index>(ri.size());
  const auto n = static_cast<Eigen::Index>(ci.size());
  Eigen::MatrixXd c(m, n);
  Eigen::VectorXd wa(m), wb(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    wa[i] = a.weight(ri[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = cost.entries(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j < n; ++j) wb[j] = b.weight(ci[static_cast<std::size_t>(j)]);

  SinkhornResult out;
  out.log_domain = cfg.reg < 1e-2 * median_abs_nonzero(c);
  const double reg = cfg.reg;
  Eigen::MatrixXd p(m, n);
  double err = std::numeric_limits<double>::infinity();
  int it = 0;

  if (out.log_domain) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m), g = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd la = wa.array().log(), lb = wb.array().log();
    Eigen::VectorXd buf_r(n), buf_c(m);
    for (it = 1; it <= cfg.max_iters; ++it) {
      for (Eigen::Index i = 0; i < m; ++i) {
        buf_r = (g - c.row(i).transpose()) / reg;
        f[i] = reg * (la[i] - log_sum_exp(buf_r));
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        buf_c = (f - c.col(j)) / reg;
        g[j] = reg * (lb[j] - log_sum_exp(buf_c));
      }
      if (!f.allFinite() || !g.allFinite()) fail(ErrorCode::kNumericalUnderflow, "log-domain potentials diverged");
      if (it % 10 == 0 || it == cfg.max_iters) {
        p = ((c.colwise() - f).rowwise() - g.transpose()).array() / -reg;
        p = p.array().exp();
        err = (p.rowwise().sum() - wa).lpNorm<1>();
        if (err <= cfg.tolerance) break;
      }
    }
  } else {
    const Eigen::MatrixXd k = (-c.array() / reg).exp();
    Eigen::VectorXd u = Eigen::VectorXd::Ones(m), v = Eigen::VectorXd::Ones(n);
    for (it = 1; it <= cfg.max_iters; ++it) {
      u = wa.array() / (k * v).array();
      v = wb.array() / (k.transpose() * u).array();
      if (!u.allFinite() || !v.allFinite()) {
        fail(ErrorCode::kNumericalUnderflow, "scaling vectors overflowed; increase reg");
      }
      if (it % 10 == 0 || it == cfg.max_iters) {
        p = u.asDiagonal() * k * v.asDiagonal();
        err = (p.rowwise().sum() - wa).lpNorm<1>();
        if (err <= cfg.tolerance) break;
      }
    }
  }
  out.iterations = std::min(it, cfg.max_iters);
  out.marginal_error = err;
  out.converged = err <= cfg.tolerance;

  const Eigen::MatrixXd rounded = round_to_marginals(p, wa, wb);
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(a.size(), b.size());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) full(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]) = rounded(i, j);
  out.value = (full.array() * cost.entries.array()).sum();
  out.plan = make_plan(std::move(full), a, b);
  return out;
}

Projection barycentric_projection(const TransportPlan& plan, const PointMatrix& source, const PointMatrix& target) {
  require(plan.matrix.rows() == source.rows() && plan.matrix.cols() == target.rows(), ErrorCode::kLengthMismatch,
          "plan shape does not match source/target atoms");
  require(source.cols() == target.cols(), ErrorCode::kDimensionMismatch, "source and target dims differ");
  Projection out;
  const Eigen::VectorXd mass = plan.matrix.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < target.rows(); ++j) {
    if (mass[j] > 0.0) out.anchor_index.push_back(j);
    else out.skipped.push_back(j);
  }
  const auto k = static_cast<Eigen::Index>(out.anchor_index.size());
  out.anchors.resize(k, target.cols());
  out.means.resize(k, source.cols());
  for (Eigen::Index r = 0; r < k; ++r) {
    const Eigen::Index j = out.anchor_index[static_cast<std::size_t>(r)];
    out.anchors.row(r) = target.row(j);
    out.means.row(r) = (plan.matrix.col(j).transpose() * source) / mass[j];
  }
  return out;
}

Barycenter barycenter_1d(const DiscreteMeasure& a, const DiscreteMeasure& b, const BallGrid& grid) {
  require(a.dim() == 1 && b.dim() == 1 && grid.dim == 1, ErrorCode::kInvalidDimension,
          "barycenter_1d needs one-dimensional inputs");
  const Eigen::Index m = a.size(), n = b.size(), g = grid.size();
  Eigen::MatrixXd cost(m, n);
  Eigen::MatrixXi via(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index k = 0; k < g; ++k) {
        const double dx = a.points()(i, 0) - grid.nodes(k, 0);
        const double dy = grid.nodes(k, 0) - b.points()(j, 0);
        const double c = dx * dx + dy * dy;
        if (c < best) {
          best = c;
          arg = static_cast<int>(k);
        }
      }
      cost(i, j) = best;
      via(i, j) = arg;
    }
  }
  const auto rows = order_by_first_coordinate(a.points());
  const auto cols = order_by_first_coordinate(b.points());
  const TransportSolution sol = solve_transport(a.weights(), b.weights(), cost, rows, cols);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r[via(i, j)] += sol.plan(i, j);
  return Barycenter{DiscreteMeasure::normalized(grid.nodes, r), sol.value};
}

}  // namespace convex_order
