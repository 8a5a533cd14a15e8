#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convex_order/arbitrage.hpp"
#include "convex_order/measures.hpp"
#include "convex_order/order.hpp"
#include "convex_order/recover.hpp"

namespace convex_order {

/// x -> (x - centre) / half_range, shared by both measures so that convex
/// order is preserved. half_range is the largest distance of a pooled atom
/// from the bounding-box centre (the half-range in 1D).
struct Rescaling {
  Eigen::VectorXd centre;
  double half_range = 1.0;

  DiscreteMeasure apply(const DiscreteMeasure& m) const;
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const { return (x - centre) / half_range; }
};

Rescaling shared_rescaling(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct StrategyRow {
  double strike = 0.0;
  double unit = 0.0;  // rescaled strike
  double u1 = 0.0;
  double u2 = 0.0;
  double delta = 0.0;
};

struct StrategyOutcome {
  Rescaling rescaling;
  DiscreteMeasure mu{PointMatrix::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  DiscreteMeasure nu{PointMatrix::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  ConvexOrderReport order;
  bool violation = false;
  std::optional<Recovery> recovery;
  std::optional<ArbitrageStrategy> strategy;
  std::optional<Verification> verification;
  /// Set when a violation was found but no strategy could be built.
  std::string strategy_error;
};

/// Rescale into the unit ball, search for a witness, and if mu is not
/// dominated by nu recover f from the (witness, nu) plan and verify the
/// calendar spread it generates. Measures in the outcome are rescaled.
StrategyOutcome strategy_from_measures(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const OrderSearchConfig& order_cfg, const RecoverConfig& recover_cfg = {});

/// Sheets at T1 < T2; mu is the T1 law.
struct SheetOutcome {
  Extraction t1;
  Extraction t2;
  StrategyOutcome outcome;
  std::vector<StrategyRow> table;
};

SheetOutcome strategy_from_sheets(const CallSheet& t1, const CallSheet& t2, const OrderSearchConfig& order_cfg,
                                  const RecoverConfig& recover_cfg = {});

}  // namespace convex_order
