#include "convex_order/fgp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

constexpr double kSimplexTolerance = 1e-12;

Eigen::VectorXd row(const PointMatrix& m, std::size_t i) { return m.row(static_cast<Eigen::Index>(i)).transpose(); }

double generic_increment(const GeneratingFunction& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return g.value(a) - g.value(b) + g.gradient(a).dot(b - a);
}

}  // namespace

void MarketPath::validate() const {
  require(times.size() == static_cast<std::size_t>(weights.rows()), ErrorCode::kLengthMismatch,
          "times and weights differ in length");
  require(!times.empty() && weights.cols() >= 2, ErrorCode::kInvalidArgument, "path needs a time and d >= 2");
  require(total_cap.empty() || total_cap.size() == times.size(), ErrorCode::kLengthMismatch,
          "total capitalisation length");
  for (std::size_t t = 0; t < times.size(); ++t) {
    require(t == 0 || times[t] > times[t - 1], ErrorCode::kInvalidArgument, "times must increase");
    const auto r = weights.row(static_cast<Eigen::Index>(t));
    require(r.minCoeff() > 0.0, ErrorCode::kInvalidArgument, "weights must be positive");
    require(std::abs(r.sum() - 1.0) <= kSimplexTolerance, ErrorCode::kInvalidArgument, "weights must sum to one");
  }
}

GeneratingFunction entropy_g() {
  GeneratingFunction g;
  g.name = "entropy";
  g.value = [](const Eigen::VectorXd& x) { return -(x.array() * x.array().log()).sum(); };
  g.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x.array().log() - 1.0); };
  // sum_i a_i phi(b_i / a_i) with phi(t) = t log t - t + 1 >= 0.
  g.gamma_increment = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double u = (b[i] - a[i]) / a[i];
      s += a[i] * ((1.0 + u) * std::log1p(u) - u);
    }
    return s;
  };
  return g;
}

GeneratingFunction quadratic_g() {
  GeneratingFunction g;
  g.name = "quadratic";
  g.value = [](const Eigen::VectorXd& x) { return 1.0 - x.squaredNorm(); };
  g.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-2.0 * x); };
  g.gamma_increment = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (b - a).squaredNorm(); };
  return g;
}

GeneratingFunction constant_g(double c) {
  return affine_g(Eigen::VectorXd(), c);
}

GeneratingFunction affine_g(Eigen::VectorXd c, double b) {
  GeneratingFunction g;
  g.name = c.size() == 0 ? "constant" : "affine";
  g.value = [c, b](const Eigen::VectorXd& x) { return c.size() == 0 ? b : c.dot(x) + b; };
  g.gradient = [c](const Eigen::VectorXd& x) { return c.size() == 0 ? Eigen::VectorXd::Zero(x.size()).eval() : c; };
  g.gamma_increment = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  return g;
}

GeneratingFunction generating_function(const std::string& name) {
  if (name == "entropy") return entropy_g();
  if (name == "quadratic") return quadratic_g();
  if (name == "constant") return constant_g(1.0);
  if (name.rfind("constant:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double c = std::stod(name.substr(9), &used);
      if (used == name.size() - 9) return constant_g(c);
    } catch (const std::exception&) {
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown generating function '" + name + "'");
}

void check_gradient(const GeneratingFunction& g, int dim, std::uint64_t seed, double rel_tol) {
  require(g.value && g.gradient, ErrorCode::kInvalidArgument, "generating function needs value and gradient");
  Rng rng(seed);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = e(rng) + 0.05;
    x /= x.sum();
    const Eigen::VectorXd grad = g.gradient(x);
    for (int i = 0; i < dim; ++i) {
      const double step = 1e-6 * x[i];
      Eigen::VectorXd up = x, down = x;
      up[i] += step;
      down[i] -= step;
      const double fd = (g.value(up) - g.value(down)) / (2 * step);
      require(std::abs(fd - grad[i]) <= rel_tol * std::max(1.0, std::abs(fd)), ErrorCode::kInvalidArgument,
              "gradient of '" + g.name + "' disagrees with finite differences");
    }
  }
}

MarketPath simulate_market(int d, int steps, double dt, double vol, std::uint64_t seed) {
  require(d >= 2 && steps >= 1, ErrorCode::kInvalidArgument, "need d >= 2 and steps >= 1");
  require(dt > 0.0 && vol >= 0.0, ErrorCode::kInvalidArgument, "need dt > 0 and vol >= 0");
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  MarketPath path;
  path.weights.resize(steps + 1, d);
  Eigen::VectorXd log_cap = Eigen::VectorXd::Zero(d);
  const double drift = -0.5 * vol * vol * dt, scale = vol * std::sqrt(dt);
  for (int t = 0; t <= steps; ++t) {
    if (t > 0)
      for (int i = 0; i < d; ++i) log_cap[i] += drift + scale * z(rng);
    const double top = log_cap.maxCoeff();
    const Eigen::VectorXd rel = (log_cap.array() - top).exp();
    const double sum = rel.sum();
    path.weights.row(t) = (rel / sum).transpose();
    path.times.push_back(t * dt);
    path.total_cap.push_back(std::exp(top) * sum);
  }
  return path;
}

MarketPath zigzag_path(int d, int steps, double dt, double eta) {
  require(d >= 2 && steps >= 1 && dt > 0.0 && eta > 0.0, ErrorCode::kInvalidArgument, "bad zigzag parameters");
  // Each step moves two coordinates by 2 delta: |dpi|^2 = 8 delta^2 = 2 eta dt.
  const double delta = std::sqrt(eta * dt / 4.0);
  require(delta < 1.0 / d, ErrorCode::kInvalidArgument, "zigzag amplitude leaves the simplex");
  MarketPath path;
  path.weights = PointMatrix::Constant(steps + 1, d, 1.0 / d);
  for (int t = 0; t <= steps; ++t) {
    const double sign = t % 2 == 0 ? -1.0 : 1.0;
    path.weights(t, 0) += sign * delta;
    path.weights(t, 1) -= sign * delta;
    path.times.push_back(t * dt);
  }
  return path;
}

GammaSeries gamma_process(const GeneratingFunction& g, const MarketPath& path) {
  path.validate();
  GammaSeries s;
  s.times = path.times;
  s.gamma.assign(path.size(), 0.0);
  s.value_process.assign(path.size(), 0.0);
  Eigen::VectorXd prev = row(path.weights, 0);
  s.value_process[0] = g.value(prev);
  for (std::size_t t = 1; t < path.size(); ++t) {
    const Eigen::VectorXd cur = row(path.weights, t);
    const double inc = g.gamma_increment ? g.gamma_increment(prev, cur) : generic_increment(g, prev, cur);
    require(std::isfinite(inc), ErrorCode::kNumericalFailure, "gradient evaluation failed along the path");
    s.gamma[t] = s.gamma[t - 1] + inc;
    s.value_process[t] = g.value(cur) + s.gamma[t];
    prev = cur;
  }
  return s;
}

PointMatrix additive_strategy(const GeneratingFunction& g, const MarketPath& path, const GammaSeries& gamma) {
  require(gamma.gamma.size() == path.size(), ErrorCode::kLengthMismatch, "gamma series does not match the path");
  PointMatrix phi(static_cast<Eigen::Index>(path.size()), path.dim());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const Eigen::VectorXd pi = row(path.weights, t);
    const Eigen::VectorXd dg = g.gradient(pi);
    const double common = gamma.gamma[t] + g.value(pi) - pi.dot(dg);
    phi.row(static_cast<Eigen::Index>(t)) = (dg.array() + common).matrix().transpose();
  }
  return phi;
}

void ArbitrageTestConfig::validate() const {
  require(eta > 0.0 && c_bound > 0.0, ErrorCode::kInvalidArgument, "eta and c_bound must be positive");
  require(horizon > 0.0, ErrorCode::kInvalidArgument, "horizon must be positive");
}

RelativeArbitrageReport detect_relative_arbitrage(const GeneratingFunction& g1, const GeneratingFunction& g2,
                                                  const MarketPath& path, const ArbitrageTestConfig& cfg) {
  cfg.validate();
  const GammaSeries s1 = gamma_process(g1, path), s2 = gamma_process(g2, path);
  RelativeArbitrageReport r;
  bool negative = false, above = false;
  r.eta_ok = false;
  bool all_above = true;
  int checked = 0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const Eigen::VectorXd pi = row(path.weights, t);
    const double t_now = path.times[t], v1 = g1.value(pi), v2 = g2.value(pi);
    negative = negative || v1 < 0.0 || v2 < 0.0;
    above = above || v2 > cfg.c_bound;
    r.times.push_back(t_now);
    r.kappa.push_back(s1.gamma[t] - s2.gamma[t]);
    r.value_gap.push_back(s1.value_process[t] - s2.value_process[t]);
    if (r.kappa.back() - v2 > 0.0 && !(r.value_gap.back() > 0.0)) r.proof_chain_holds = false;
    const double elapsed = t_now - path.times.front();
    if (elapsed > 0.0 && t_now <= cfg.horizon) {
      ++checked;
      all_above = all_above && r.kappa.back() > cfg.eta * elapsed;
    }
  }
  if (negative) r.violations.emplace_back("a generating function is negative along the path");
  if (above) r.violations.emplace_back("G2 exceeds c_bound along the path");
  if (checked == 0) r.violations.emplace_back("no sampled time in (0, horizon]");
  r.eta_ok = checked > 0 && all_above;
  if (r.eta_ok) {
    r.t_star = cfg.c_bound / cfg.eta;
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (path.times[t] - path.times.front() >= *r.t_star && r.value_gap[t] > 0.0) {
        r.strong_arb_from = path.times[t];
        break;
      }
    }
  }
  return r;
}

}  // namespace convex_order
