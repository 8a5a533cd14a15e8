#include "convex_order/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

constexpr double kSheetTolerance = 1e-9;
constexpr double kDropWeight = 1e-12;

std::vector<double> slopes(const CallSheet& s) {
  std::vector<double> out(s.strikes.size() - 1);
  for (std::size_t i = 0; i + 1 < s.strikes.size(); ++i)
    out[i] = (s.prices[i + 1] - s.prices[i]) / (s.strikes[i + 1] - s.strikes[i]);
  return out;
}

}  // namespace

void CallSheet::validate() const {
  require(strikes.size() == prices.size(), ErrorCode::kLengthMismatch, "strikes and prices differ in length");
  require(strikes.size() >= 3, ErrorCode::kInsufficientStrikes, "need at least three strikes");
  const double scale = std::max(1.0, *std::max_element(prices.begin(), prices.end()));
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    require(std::isfinite(strikes[i]) && std::isfinite(prices[i]), ErrorCode::kMalformedInput, "non-finite sheet entry");
    require(i == 0 || strikes[i] > strikes[i - 1], ErrorCode::kMalformedInput, "strikes must be strictly increasing");
    require(prices[i] >= -kSheetTolerance * scale, ErrorCode::kArbitrageInSheet, "negative call price");
  }
  const std::vector<double> s = slopes(*this);
  require(s.front() >= -1.0 - kSheetTolerance, ErrorCode::kArbitrageInSheet, "call prices fall faster than strike");
  for (std::size_t i = 0; i < s.size(); ++i) {
    require(s[i] <= kSheetTolerance, ErrorCode::kArbitrageInSheet,
            "call prices increase in strike near " + std::to_string(strikes[i]));
    require(i == 0 || s[i] - s[i - 1] >= -kSheetTolerance, ErrorCode::kArbitrageInSheet,
            "call prices not convex at strike " + std::to_string(strikes[i]));
  }
}

std::vector<double> call_prices(const DiscreteMeasure& law, const std::vector<double>& strikes) {
  require(law.dim() == 1, ErrorCode::kInvalidDimension, "call prices need a 1D law");
  std::vector<double> out;
  out.reserve(strikes.size());
  for (double k : strikes) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < law.size(); ++i) c += law.weight(i) * std::max(law.points()(i, 0) - k, 0.0);
    out.push_back(c);
  }
  return out;
}

Extraction bl_extract(const CallSheet& sheet) {
  sheet.validate();
  const std::vector<double> s = slopes(sheet);
  const std::size_t n = sheet.strikes.size();
  std::vector<double> mass(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) mass[i - 1] = std::max(0.0, s[i] - s[i - 1]);
  const double left = std::max(0.0, 1.0 + s.front()), right = std::max(0.0, -s.back());
  mass.front() += left;
  mass.back() += right;

  std::vector<double> at, w;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= kDropWeight) continue;
    at.push_back(sheet.strikes[i + 1]);
    w.push_back(mass[i]);
  }
  require(!at.empty(), ErrorCode::kArbitrageInSheet, "sheet implies no mass");
  PointMatrix pts(static_cast<Eigen::Index>(at.size()), 1);
  for (std::size_t i = 0; i < at.size(); ++i) pts(static_cast<Eigen::Index>(i), 0) = at[i];
  return {DiscreteMeasure::normalized(pts, Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()))),
          left, right};
}

ArbitrageStrategy build_strategy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Potential f) {
  require(mu.dim() == nu.dim() && mu.dim() == f.dim(), ErrorCode::kDimensionMismatch,
          "mu, nu and the potential must share a dimension");
  ArbitrageStrategy s;
  for (Eigen::Index i = 0; i < mu.size(); ++i) s.cash_mu += mu.weight(i) * f(mu.points().row(i).transpose()).value;
  for (Eigen::Index j = 0; j < nu.size(); ++j) s.cash_nu += nu.weight(j) * f(nu.points().row(j).transpose()).value;
  s.margin = s.cash_mu - s.cash_nu;
  require(std::isfinite(s.margin), ErrorCode::kNumericalFailure, "non-finite margin");
  require(s.margin > 0.0, ErrorCode::kNoArbitrageMargin,
          "int f dmu - int f dnu = " + std::to_string(s.margin) + " is not positive");
  s.potential = std::move(f);
  return s;
}

Payoff payoff(const ArbitrageStrategy& s, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const PotentialValue fx = s.potential(x), fy = s.potential(y);
  return {s.margin + (fy.value - fx.value) + s.delta_sign * fx.gradient.dot(y - x), fx.extrapolated || fy.extrapolated};
}

Verification verify_strategy(const ArbitrageStrategy& s, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(mu.dim() == nu.dim() && mu.dim() == s.potential.dim(), ErrorCode::kDimensionMismatch,
          "strategy and measures differ in dimension");
  Verification v;
  v.min_payoff = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Eigen::VectorXd x = mu.points().row(i).transpose();
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
      const Payoff p = payoff(s, x, nu.points().row(j).transpose());
      sum += p.value;
      v.extrapolated_pairs += p.extrapolated;
      if (p.value < v.min_payoff) {
        v.min_payoff = p.value;
        v.argmin_x = i;
        v.argmin_y = j;
      }
    }
  }
  v.pairs = static_cast<long>(mu.size() * nu.size());
  v.mean_payoff = sum / static_cast<double>(v.pairs);
  v.pass = v.min_payoff > 0.0;
  return v;
}

}  // namespace convex_order
