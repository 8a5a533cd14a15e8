#include "convex_order/pipeline.hpp"

#include <algorithm>
#include <set>

#include "convex_order/error.hpp"
#include "convex_order/transport.hpp"

namespace convex_order {

DiscreteMeasure Rescaling::apply(const DiscreteMeasure& m) const {
  require(m.dim() == centre.size(), ErrorCode::kDimensionMismatch, "rescaling dimension mismatch");
  PointMatrix p = (m.points().rowwise() - centre.transpose()) / half_range;
  return DiscreteMeasure(std::move(p), m.weights());
}

Rescaling shared_rescaling(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch, "measures differ in dimension");
  const Eigen::RowVectorXd lo = a.points().colwise().minCoeff().cwiseMin(b.points().colwise().minCoeff());
  const Eigen::RowVectorXd hi = a.points().colwise().maxCoeff().cwiseMax(b.points().colwise().maxCoeff());
  Rescaling r;
  r.centre = (0.5 * (lo + hi)).transpose();
  const double ra = (a.points().rowwise() - r.centre.transpose()).rowwise().norm().maxCoeff();
  const double rb = (b.points().rowwise() - r.centre.transpose()).rowwise().norm().maxCoeff();
  r.half_range = std::max(ra, rb);
  if (!(r.half_range > 0.0)) r.half_range = 1.0;
  return r;
}

StrategyOutcome strategy_from_measures(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const OrderSearchConfig& order_cfg, const RecoverConfig& recover_cfg) {
  StrategyOutcome out;
  out.rescaling = shared_rescaling(mu, nu);
  out.mu = out.rescaling.apply(mu);
  out.nu = out.rescaling.apply(nu);
  out.order = estimate_v(out.mu, out.nu, order_cfg);
  out.violation = out.order.decision == Decision::kNotOrdered;
  if (!out.violation) return out;

  const DiscreteMeasure& rho = out.order.witness_rho;
  const TransportPlan plan = emd(rho, out.nu, cost_matrix(rho, out.nu, CostMode::kNegInnerProduct)).plan;
  out.recovery = recover_f(out.nu, rho, plan, recover_cfg);
  try {
    out.strategy = build_strategy(out.mu, out.nu, out.recovery->evaluator);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoArbitrageMargin) throw;
    out.strategy_error = e.what();
    return out;
  }
  out.verification = verify_strategy(*out.strategy, out.mu, out.nu);
  return out;
}

SheetOutcome strategy_from_sheets(const CallSheet& t1, const CallSheet& t2, const OrderSearchConfig& order_cfg,
                                  const RecoverConfig& recover_cfg) {
  SheetOutcome s{bl_extract(t1), bl_extract(t2), {}, {}};
  s.outcome = strategy_from_measures(s.t1.measure, s.t2.measure, order_cfg, recover_cfg);
  if (!s.outcome.strategy) return s;
  std::set<double> strikes(t1.strikes.begin(), t1.strikes.end());
  strikes.insert(t2.strikes.begin(), t2.strikes.end());
  for (double k : strikes) {
    const Eigen::VectorXd z = s.outcome.rescaling.to_unit(Eigen::VectorXd::Constant(1, k));
    const ArbitrageStrategy& st = *s.outcome.strategy;
    s.table.push_back({k, z[0], st.u1(z), st.u2(z), st.delta(z)[0]});
  }
  return s;
}

}  // namespace convex_order
