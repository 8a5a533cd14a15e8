#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convex_order/measures.hpp"
#include "convex_order/recover.hpp"

namespace convex_order {

/// Call prices at one maturity, zero rates.
struct CallSheet {
  std::string maturity;
  std::vector<double> strikes;
  std::vector<double> prices;

  /// Throws kInsufficientStrikes below three strikes, kArbitrageInSheet when
  /// prices are negative, increasing, steeper than -1 or non-convex in strike
  /// (1e-9 on slopes).
  void validate() const;
};

/// C(K) = E (S - K)^+ for a 1D law.
std::vector<double> call_prices(const DiscreteMeasure& law, const std::vector<double>& strikes);

struct Extraction {
  DiscreteMeasure measure;
  /// Mass implied below the second strike and above the second-to-last one,
  /// folded onto those strikes.
  double left_tail = 0.0;
  double right_tail = 0.0;
};

/// Mass at interior strike K_i is the jump in the price slope there.
Extraction bl_extract(const CallSheet& sheet);

/// Calendar spread: short f at T1, long f at T2, forward position Delta(x)
/// held from T1 to T2.
struct ArbitrageStrategy {
  Potential potential{1, {}};
  double cash_mu = 0.0;  // int f dmu
  double cash_nu = 0.0;  // int f dnu
  double margin = 0.0;
  /// Delta = delta_sign * grad f. Anything but -1 is for adversarial tests.
  double delta_sign = -1.0;

  double u1(const Eigen::VectorXd& x) const { return -potential(x).value; }
  double u2(const Eigen::VectorXd& y) const { return potential(y).value; }
  Eigen::VectorXd delta(const Eigen::VectorXd& x) const { return delta_sign * potential(x).gradient; }
};

/// Throws kNoArbitrageMargin unless int f dmu - int f dnu > 0.
ArbitrageStrategy build_strategy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Potential f);

struct Payoff {
  double value = 0.0;
  bool extrapolated = false;
};

/// margin + f(y) - f(x) + Delta(x).(y - x).
Payoff payoff(const ArbitrageStrategy& s, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct Verification {
  double min_payoff = 0.0;
  double mean_payoff = 0.0;
  Eigen::Index argmin_x = 0;
  Eigen::Index argmin_y = 0;
  long pairs = 0;
  long extrapolated_pairs = 0;
  bool pass = false;
};

/// Scans every (mu atom, nu atom) pair; passes iff the minimum is positive.
Verification verify_strategy(const ArbitrageStrategy& s, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace convex_order
