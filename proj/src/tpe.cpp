#include "convex_order/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<Bounds> internal_bounds(const TpeConfig& cfg) {
  std::vector<Bounds> b = cfg.bounds;
  if (cfg.log_scale)
    for (auto& x : b) x = {std::log(x.lo), std::log(x.hi)};
  return b;
}

Eigen::VectorXd to_internal(const Eigen::VectorXd& x, const TpeConfig& cfg) {
  return cfg.log_scale ? Eigen::VectorXd(x.array().log()) : x;
}

Eigen::VectorXd to_external(const Eigen::VectorXd& u, const TpeConfig& cfg) {
  Eigen::VectorXd x = cfg.log_scale ? Eigen::VectorXd(u.array().exp()) : u;
  // exp(log(x)) may land one ulp outside the box.
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const Bounds& b = cfg.bounds[static_cast<std::size_t>(k)];
    x[k] = std::clamp(x[k], b.lo, b.hi);
  }
  return x;
}

Eigen::VectorXd prior_draw(const std::vector<Bounds>& b, Rng& rng) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(b.size()));
  for (std::size_t k = 0; k < b.size(); ++k) {
    std::uniform_real_distribution<double> d(b[k].lo, b[k].hi);
    u[static_cast<Eigen::Index>(k)] = d(rng);
  }
  return u;
}

TpeResult run(const Objective& objective, const TpeConfig& cfg, bool guided) {
  cfg.validate();
  Rng rng(cfg.seed);
  TpeResult out;
  for (int e = 0; e < cfg.max_evals; ++e) {
    Eigen::VectorXd x = guided ? suggest(out.history, cfg, rng) : to_external(prior_draw(internal_bounds(cfg), rng), cfg);
    const double loss = objective(x);
    out.history.add(std::move(x), loss);
  }
  const Trial& best = out.history.best();
  out.best_x = best.x;
  out.best_loss = best.loss;
  return out;
}

}  // namespace

void TpeConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  require(n_candidates >= 1, ErrorCode::kInvalidArgument, "n_candidates must be >= 1");
  require(max_evals >= 1, ErrorCode::kInvalidArgument, "max_evals must be >= 1");
  require(!bounds.empty(), ErrorCode::kInvalidArgument, "empty search box");
  for (const auto& b : bounds) {
    require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi, ErrorCode::kInvalidArgument,
            "bounds need lo < hi");
    require(!log_scale || b.lo > 0.0, ErrorCode::kInvalidArgument, "log-scale bounds must be positive");
  }
}

void TrialHistory::add(Eigen::VectorXd x, double loss) {
  if (!std::isfinite(loss)) loss = kInf;
  else ++finite_;
  const std::size_t idx = trials_.size();
  trials_.push_back({std::move(x), loss});
  auto pos = std::upper_bound(by_loss_.begin(), by_loss_.end(), loss,
                              [&](double l, std::size_t i) { return l < trials_[i].loss; });
  by_loss_.insert(pos, idx);
}

const Trial& TrialHistory::best() const {
  require(!trials_.empty(), ErrorCode::kInvalidArgument, "empty history");
  return trials_[by_loss_.front()];
}

std::vector<double> TrialHistory::best_so_far() const {
  std::vector<double> out;
  double m = kInf;
  for (const Trial& t : trials_) out.push_back(m = std::min(m, t.loss));
  return out;
}

TruncatedKde::TruncatedKde(const std::vector<double>& samples, Bounds bounds) : bounds_(bounds) {
  const double range = bounds.hi - bounds.lo;
  const auto n = static_cast<double>(samples.size());
  double sd = 0.0;
  if (samples.size() > 1) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    for (double s : samples) sd += (s - mean) * (s - mean);
    sd = std::sqrt(sd / (n - 1.0));
  }
  const double floor = range / std::min(100.0, n + 1.0);
  bandwidth_ = std::clamp(1.06 * sd * std::pow(std::max(n, 1.0), -0.2), floor, range);

  centres_ = samples;
  widths_.assign(samples.size(), bandwidth_);
  centres_.push_back(0.5 * (bounds.lo + bounds.hi));
  widths_.push_back(range);
  weights_.assign(centres_.size(), 1.0 / static_cast<double>(centres_.size()));
  for (std::size_t k = 0; k < centres_.size(); ++k) {
    const double z = normal_cdf((bounds.hi - centres_[k]) / widths_[k]) - normal_cdf((bounds.lo - centres_[k]) / widths_[k]);
    mass_.push_back(weights_[k] / (widths_[k] * std::sqrt(2.0 * std::numbers::pi) * z));
  }
}

double TruncatedKde::log_density(double x) const {
  if (x < bounds_.lo || x > bounds_.hi) return -kInf;
  double top = -kInf;
  std::vector<double> terms(centres_.size());
  for (std::size_t k = 0; k < centres_.size(); ++k) {
    const double z = (x - centres_[k]) / widths_[k];
    terms[k] = std::log(mass_[k]) - 0.5 * z * z;
    top = std::max(top, terms[k]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

double TruncatedKde::density(double x) const { return std::exp(log_density(x)); }

double TruncatedKde::sample(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  const std::size_t k = pick(rng);
  std::normal_distribution<double> g(centres_[k], widths_[k]);
  // Centres lie inside the box and widths never exceed the range, so
  // acceptance stays above roughly one third.
  for (;;) {
    const double x = g(rng);
    if (x >= bounds_.lo && x <= bounds_.hi) return x;
  }
}

double DensityPair::log_ratio(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < good.size(); ++k) {
    const double v = x[static_cast<Eigen::Index>(k)];
    s += bad[k].log_density(v) - good[k].log_density(v);
  }
  return s;
}

double ei_score(double ratio, double gamma) { return 1.0 / (gamma + ratio * (1.0 - gamma)); }

double ei_score(const Eigen::VectorXd& candidate, const DensityPair& densities, double gamma) {
  return ei_score(std::exp(densities.log_ratio(candidate)), gamma);
}

Eigen::VectorXd suggest(const TrialHistory& history, const TpeConfig& cfg, Rng& rng) {
  const std::vector<Bounds> box = internal_bounds(cfg);
  const auto dims = box.size();
  const auto n = history.finite_count();
  if (static_cast<double>(n) < 2.0 / cfg.gamma) return to_external(prior_draw(box, rng), cfg);

  const std::vector<std::size_t>& order = history.by_loss();
  const auto n_good = static_cast<std::size_t>(std::ceil(cfg.gamma * static_cast<double>(n)));
  const double y_star = history[order[n_good]].loss;
  std::vector<std::vector<double>> good(dims), bad(dims);
  for (std::size_t r = 0; r < n; ++r) {
    const Trial& t = history[order[r]];
    const Eigen::VectorXd u = to_internal(t.x, cfg);
    auto& side = t.loss < y_star ? good : bad;
    for (std::size_t k = 0; k < dims; ++k) side[k].push_back(u[static_cast<Eigen::Index>(k)]);
  }
  if (good[0].empty() || bad[0].empty()) return to_external(prior_draw(box, rng), cfg);

  DensityPair dp;
  for (std::size_t k = 0; k < dims; ++k) {
    dp.good.emplace_back(good[k], box[k]);
    dp.bad.emplace_back(bad[k], box[k]);
  }
  // Highest score <=> lowest g / l.
  Eigen::VectorXd best;
  double best_log_ratio = kInf;
  for (int c = 0; c < cfg.n_candidates; ++c) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dims));
    for (std::size_t k = 0; k < dims; ++k) u[static_cast<Eigen::Index>(k)] = dp.good[k].sample(rng);
    const double lr = dp.log_ratio(u);
    if (best.size() == 0 || lr < best_log_ratio) {
      best_log_ratio = lr;
      best = std::move(u);
    }
  }
  return to_external(best, cfg);
}

TpeResult minimize(const Objective& objective, const TpeConfig& cfg) { return run(objective, cfg, true); }

TpeResult random_search(const Objective& objective, const TpeConfig& cfg) { return run(objective, cfg, false); }

}  // namespace convex_order
