#include "convex_order/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

using Index = Eigen::Index;

class TransportSimplex {
 public:
  TransportSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost)
      : m_(a.size()), n_(b.size()), a_(a), b_(b), cost_(static_cast<std::size_t>(m_ * n_)) {
    for (Index i = 0; i < m_; ++i)
      for (Index j = 0; j < n_; ++j) cost_[static_cast<std::size_t>(i * n_ + j)] = cost(i, j);
    scale_ = 1.0;
    for (double c : cost_) scale_ = std::max(scale_, std::abs(c));
    tolerance_ = 1e-11 * scale_;
    const Index nodes = m_ + n_;
    potential_.assign(static_cast<std::size_t>(nodes), 0.0);
    parent_node_.assign(static_cast<std::size_t>(nodes), -1);
    parent_edge_.assign(static_cast<std::size_t>(nodes), -1);
    depth_.assign(static_cast<std::size_t>(nodes), 0);
    offsets_.assign(static_cast<std::size_t>(nodes + 1), 0);
    block_ = std::max<Index>(16, static_cast<Index>(std::sqrt(static_cast<double>(m_ * n_))));
  }

  void seed_north_west(std::span<const Index> row_order, std::span<const Index> col_order) {
    std::vector<Index> rows(static_cast<std::size_t>(m_)), cols(static_cast<std::size_t>(n_));
    if (row_order.empty()) std::iota(rows.begin(), rows.end(), Index{0});
    else rows.assign(row_order.begin(), row_order.end());
    if (col_order.empty()) std::iota(cols.begin(), cols.end(), Index{0});
    else cols.assign(col_order.begin(), col_order.end());
    require(static_cast<Index>(rows.size()) == m_ && static_cast<Index>(cols.size()) == n_,
            ErrorCode::kLengthMismatch, "seed order length does not match marginals");

    std::size_t p = 0, q = 0;
    double ra = a_[rows[0]], rb = b_[cols[0]];
    while (true) {
      const double x = std::min(ra, rb);
      add_edge(rows[p], cols[q], std::max(x, 0.0));
      ra -= x;
      rb -= x;
      const bool last_row = p + 1 == rows.size();
      const bool last_col = q + 1 == cols.size();
      if (last_row && last_col) break;
      if (last_row || (!last_col && rb < ra)) {
        rb = b_[cols[++q]];
      } else {
        ra = a_[rows[++p]];
      }
    }
  }

  TransportSolution run() {
    const Index max_iterations = std::max<Index>(200000, 20 * m_ * n_);
    Index degenerate_run = 0;
    int iterations = 0;
    while (true) {
      rebuild_tree();
      const bool bland = degenerate_run > m_ + n_;
      Index enter = bland ? price_bland() : price_block();
      if (enter < 0) break;
      const bool degenerate = pivot(enter);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      if (++iterations > max_iterations) {
        fail(ErrorCode::kNumericalFailure, "network simplex exceeded its iteration budget");
      }
    }
    return finish(iterations);
  }

 private:
  void add_edge(Index i, Index j, double x) {
    edge_row_.push_back(i);
    edge_col_.push_back(j);
    edge_flow_.push_back(x);
  }

  double c(Index i, Index j) const { return cost_[static_cast<std::size_t>(i * n_ + j)]; }

  // Rebuilds adjacency, parents, depths and node potentials of the basis tree.
  void rebuild_tree() {
    const Index nodes = m_ + n_;
    std::fill(offsets_.begin(), offsets_.end(), 0);
    for (std::size_t e = 0; e < edge_row_.size(); ++e) {
      ++offsets_[static_cast<std::size_t>(edge_row_[e] + 1)];
      ++offsets_[static_cast<std::size_t>(m_ + edge_col_[e] + 1)];
    }
    for (Index v = 0; v < nodes; ++v) offsets_[static_cast<std::size_t>(v + 1)] += offsets_[static_cast<std::size_t>(v)];
    adjacency_.resize(2 * edge_row_.size());
    std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < edge_row_.size(); ++e) {
      adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(edge_row_[e])]++)] = static_cast<Index>(e);
      adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(m_ + edge_col_[e])]++)] = static_cast<Index>(e);
    }

    std::fill(parent_node_.begin(), parent_node_.end(), -2);
    queue_.clear();
    queue_.push_back(0);
    parent_node_[0] = -1;
    parent_edge_[0] = -1;
    depth_[0] = 0;
    potential_[0] = 0.0;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const Index v = queue_[head];
      const auto vs = static_cast<std::size_t>(v);
      for (Index k = offsets_[vs]; k < offsets_[vs + 1]; ++k) {
        const Index e = adjacency_[static_cast<std::size_t>(k)];
        const auto es = static_cast<std::size_t>(e);
        const Index r = edge_row_[es], col_node = m_ + edge_col_[es];
        const Index w = (v == r) ? col_node : r;
        const auto ws = static_cast<std::size_t>(w);
        if (parent_node_[ws] != -2) continue;
        parent_node_[ws] = v;
        parent_edge_[ws] = e;
        depth_[ws] = depth_[vs] + 1;
        // u_r + v_c = c(r, c)
        potential_[ws] = c(r, edge_col_[es]) - potential_[vs];
        queue_.push_back(w);
      }
    }
    if (static_cast<Index>(queue_.size()) != nodes) {
      fail(ErrorCode::kNumericalFailure, "transport basis is not a spanning tree");
    }
  }

  double reduced(Index i, Index j) const {
    return c(i, j) - potential_[static_cast<std::size_t>(i)] - potential_[static_cast<std::size_t>(m_ + j)];
  }

  Index price_block() {
    const Index total = m_ * n_;
    Index best = -1;
    double best_value = -tolerance_;
    Index scanned = 0, in_block = 0;
    while (scanned < total) {
      const Index k = cursor_;
      cursor_ = (cursor_ + 1 == total) ? 0 : cursor_ + 1;
      const double r = reduced(k / n_, k % n_);
      if (r < best_value) {
        best_value = r;
        best = k;
      }
      ++scanned;
      if (++in_block == block_) {
        if (best >= 0) return best;
        in_block = 0;
      }
    }
    return best;
  }

  Index price_bland() const {
    for (Index k = 0; k < m_ * n_; ++k) {
      if (reduced(k / n_, k % n_) < -tolerance_) return k;
    }
    return -1;
  }

  // Returns true when the pivot moved zero mass.
  bool pivot(Index enter) {
    const Index i = enter / n_, j = enter % n_;
    Index x = i, y = m_ + j;
    up_x_.clear();
    up_y_.clear();
    while (depth_[static_cast<std::size_t>(x)] > depth_[static_cast<std::size_t>(y)]) {
      up_x_.push_back(parent_edge_[static_cast<std::size_t>(x)]);
      x = parent_node_[static_cast<std::size_t>(x)];
    }
    while (depth_[static_cast<std::size_t>(y)] > depth_[static_cast<std::size_t>(x)]) {
      up_y_.push_back(parent_edge_[static_cast<std::size_t>(y)]);
      y = parent_node_[static_cast<std::size_t>(y)];
    }
    while (x != y) {
      up_x_.push_back(parent_edge_[static_cast<std::size_t>(x)]);
      x = parent_node_[static_cast<std::size_t>(x)];
      up_y_.push_back(parent_edge_[static_cast<std::size_t>(y)]);
      y = parent_node_[static_cast<std::size_t>(y)];
    }
    // Tree path from row i to column j; its edges alternate -, +, -, ...
    path_.assign(up_x_.begin(), up_x_.end());
    path_.insert(path_.end(), up_y_.rbegin(), up_y_.rend());

    double theta = std::numeric_limits<double>::infinity();
    Index leaving = -1;
    Index leaving_key = std::numeric_limits<Index>::max();
    for (std::size_t s = 0; s < path_.size(); s += 2) {
      const auto e = static_cast<std::size_t>(path_[s]);
      const double flow = edge_flow_[e];
      const Index key = edge_row_[e] * n_ + edge_col_[e];
      if (flow < theta || (flow == theta && key < leaving_key)) {
        theta = flow;
        leaving = path_[s];
        leaving_key = key;
      }
    }
    for (std::size_t s = 0; s < path_.size(); ++s) {
      const auto e = static_cast<std::size_t>(path_[s]);
      if (s % 2 == 0) edge_flow_[e] = std::max(edge_flow_[e] - theta, 0.0);
      else edge_flow_[e] += theta;
    }
    const auto ls = static_cast<std::size_t>(leaving);
    edge_row_[ls] = i;
    edge_col_[ls] = j;
    edge_flow_[ls] = theta;
    return theta <= 1e-15;
  }

  TransportSolution finish(int iterations) {
    rebuild_tree();
    TransportSolution sol;
    sol.iterations = iterations;
    sol.plan = Eigen::MatrixXd::Zero(m_, n_);
    double primal = 0.0;
    for (std::size_t e = 0; e < edge_row_.size(); ++e) {
      sol.plan(edge_row_[e], edge_col_[e]) += edge_flow_[e];
      primal += edge_flow_[e] * c(edge_row_[e], edge_col_[e]);
    }
    sol.value = primal;
    sol.row_potential.resize(m_);
    sol.col_potential.resize(n_);
    for (Index i = 0; i < m_; ++i) sol.row_potential[i] = potential_[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n_; ++j) sol.col_potential[j] = potential_[static_cast<std::size_t>(m_ + j)];

    double violation = 0.0;
    for (Index i = 0; i < m_; ++i)
      for (Index j = 0; j < n_; ++j) violation = std::max(violation, -reduced(i, j));
    const double dual = a_.dot(sol.row_potential) + b_.dot(sol.col_potential) - violation * a_.sum();
    sol.duality_gap = std::abs(primal - dual);
    if (!(sol.duality_gap <= 1e-7 * scale_)) {
      fail(ErrorCode::kNumericalFailure, "duality gap " + std::to_string(sol.duality_gap) + " exceeds tolerance");
    }
    return sol;
  }

  Index m_, n_;
  const Eigen::VectorXd& a_;
  const Eigen::VectorXd& b_;
  std::vector<double> cost_;
  double scale_ = 1.0;
  double tolerance_ = 0.0;
  Index block_ = 16;
  Index cursor_ = 0;

  std::vector<Index> edge_row_, edge_col_;
  std::vector<double> edge_flow_;

  std::vector<Index> offsets_, adjacency_, queue_;
  std::vector<Index> parent_node_, parent_edge_, depth_;
  std::vector<double> potential_;
  std::vector<Index> up_x_, up_y_, path_;
};

}  // namespace

TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost,
                                  std::span<const Eigen::Index> row_order, std::span<const Eigen::Index> col_order) {
  require(a.size() > 0 && b.size() > 0, ErrorCode::kInvalidArgument, "empty marginal");
  require(cost.rows() == a.size() && cost.cols() == b.size(), ErrorCode::kLengthMismatch,
          "cost shape does not match marginals");
  require(cost.allFinite(), ErrorCode::kInvalidArgument, "cost matrix must be finite");
  require((a.array() >= 0.0).all() && (b.array() >= 0.0).all(), ErrorCode::kInfeasible, "negative marginal mass");
  require(std::abs(a.sum() - b.sum()) <= 1e-8, ErrorCode::kInfeasible, "marginals carry different total mass");

  TransportSimplex simplex(a, b, cost);
  simplex.seed_north_west(row_order, col_order);
  return simplex.run();
}

}  // namespace convex_order
