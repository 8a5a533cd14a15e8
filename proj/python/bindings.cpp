#include <pybind11/eigen.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "convex_order/arbitrage.hpp"
#include "convex_order/error.hpp"
#include "convex_order/fgp.hpp"
#include "convex_order/order.hpp"
#include "convex_order/pipeline.hpp"
#include "convex_order/recover.hpp"
#include "convex_order/scenarios.hpp"
#include "convex_order/transport.hpp"

namespace py = pybind11;
using namespace convex_order;

namespace {

PointMatrix as_points(const Eigen::Ref<const Eigen::MatrixXd>& x) { return PointMatrix(x); }

DiscreteMeasure make_measure(const Eigen::Ref<const Eigen::MatrixXd>& points, std::optional<Eigen::VectorXd> weights) {
  if (!weights) return DiscreteMeasure::uniform(as_points(points));
  return DiscreteMeasure(as_points(points), *weights);
}

SearchMethod method_from(const std::string& name) {
  if (name == "indirect-hist") return SearchMethod::kIndirectHistogram;
  if (name == "indirect-samples") return SearchMethod::kIndirectSamples;
  if (name == "direct") return SearchMethod::kDirect;
  fail(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

CostMode cost_mode_from(const std::string& name) {
  if (name == "sqeuclidean") return CostMode::kSquaredEuclidean;
  if (name == "neg-inner") return CostMode::kNegInnerProduct;
  fail(ErrorCode::kInvalidArgument, "cost must be sqeuclidean or neg-inner");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Convex order estimation, potential recovery and arbitrage construction";

  // Raised for every library failure; `code` names the failure mode.
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "ConvexOrderError", PyExc_ValueError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def(py::init(&make_measure), py::arg("points"), py::arg("weights") = py::none())
      .def_property_readonly("points", [](const DiscreteMeasure& d) { return Eigen::MatrixXd(d.points()); })
      .def_property_readonly("weights", &DiscreteMeasure::weights)
      .def_property_readonly("dim", &DiscreteMeasure::dim)
      .def("__len__", &DiscreteMeasure::size);

  py::class_<TransportPlan>(m, "TransportPlan").def_readonly("matrix", &TransportPlan::matrix);
  py::class_<TransportResult>(m, "TransportResult")
      .def_readonly("value", &TransportResult::value)
      .def_readonly("plan", &TransportResult::plan)
      .def_readonly("duality_gap", &TransportResult::duality_gap);

  m.def(
      "emd",
      [](const DiscreteMeasure& a, const DiscreteMeasure& b, const std::string& cost) {
        return emd(a, b, cost_matrix(a, b, cost_mode_from(cost)));
      },
      py::arg("a"), py::arg("b"), py::arg("cost") = "sqeuclidean");
  m.def("w2_squared", &w2_squared);
  m.def("correlation_cost", &correlation_cost);

  py::class_<ConvexOrderReport>(m, "ConvexOrderReport")
      .def_readonly("v_estimate", &ConvexOrderReport::v_estimate)
      .def_readonly("witness_rho", &ConvexOrderReport::witness_rho)
      .def_readonly("tolerance", &ConvexOrderReport::tolerance)
      .def_readonly("evals_used", &ConvexOrderReport::evals_used)
      .def_readonly("trial_gaps", &ConvexOrderReport::trial_gaps)
      .def_property_readonly("decision", [](const ConvexOrderReport& r) { return std::string(to_string(r.decision)); });

  m.def("gap", &gap, py::arg("mu"), py::arg("nu"), py::arg("rho"));
  m.def(
      "estimate_v",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu, const std::string& method, int grid_p, int max_evals,
         double alpha_lo, double alpha_hi, std::optional<double> tolerance, std::uint64_t seed) {
        OrderSearchConfig cfg;
        cfg.method = method_from(method);
        cfg.grid_partitions = grid_p;
        cfg.max_evals = max_evals;
        cfg.alpha_lo = alpha_lo;
        cfg.alpha_hi = alpha_hi;
        cfg.tolerance = tolerance ? *tolerance : default_tolerance(std::min(mu.size(), nu.size()));
        cfg.seed = seed;
        py::gil_scoped_release release;
        return estimate_v(mu, nu, cfg);
      },
      py::arg("mu"), py::arg("nu"), py::arg("method") = "indirect-samples",
      py::arg("grid_p") = OrderSearchConfig{}.grid_partitions, py::arg("max_evals") = OrderSearchConfig{}.max_evals,
      py::arg("alpha_lo") = OrderSearchConfig{}.alpha_lo, py::arg("alpha_hi") = OrderSearchConfig{}.alpha_hi,
      py::arg("tolerance") = py::none(), py::arg("seed") = 0);
  m.def("decide", [](double v, double eps) { return std::string(to_string(decide(v, eps))); });
  m.def("default_tolerance", &default_tolerance);

  m.def("two_point", [](double s) {
    const MeasurePair p = two_point(s);
    return py::make_tuple(p.mu, p.nu);
  }, py::arg("s"));
  m.def("gaussian_samples", [](int dim, double sigma, int n, std::uint64_t seed) {
    const MeasurePair p = gaussian_samples(dim, sigma, n, seed);
    return py::make_tuple(p.mu, p.nu);
  }, py::arg("dim"), py::arg("sigma"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "recover_f",
      [](const DiscreteMeasure& nu, const DiscreteMeasure& rho, double span, bool smooth, double h) {
        const TransportPlan plan = emd(rho, nu, cost_matrix(rho, nu, CostMode::kNegInnerProduct)).plan;
        const Recovery r = recover_f(nu, rho, plan, {span, smooth, h});
        py::dict out;
        out["anchors"] = Eigen::MatrixXd(r.gradient.anchors);
        out["gradient"] = Eigen::MatrixXd(r.gradient.values);
        out["potential_anchors"] = Eigen::MatrixXd(r.potential.anchors);
        out["potential"] = r.potential.values;
        return out;
      },
      py::arg("nu"), py::arg("rho"), py::arg("span") = RecoverConfig{}.span, py::arg("smooth") = true,
      py::arg("h") = 0.0);

  py::class_<CallSheet>(m, "CallSheet")
      .def(py::init([](std::string maturity, std::vector<double> strikes, std::vector<double> prices) {
             return CallSheet{std::move(maturity), std::move(strikes), std::move(prices)};
           }),
           py::arg("maturity"), py::arg("strikes"), py::arg("prices"))
      .def_readonly("strikes", &CallSheet::strikes)
      .def_readonly("prices", &CallSheet::prices);
  m.def("call_prices", &call_prices, py::arg("law"), py::arg("strikes"));
  m.def("bl_extract", [](const CallSheet& s) {
    const Extraction e = bl_extract(s);
    return py::make_tuple(e.measure, e.left_tail, e.right_tail);
  });
  m.def(
      "strategy_from_sheets",
      [](const CallSheet& t1, const CallSheet& t2, std::uint64_t seed) {
        OrderSearchConfig cfg;
        cfg.seed = seed;
        const SheetOutcome s = strategy_from_sheets(t1, t2, cfg);
        py::dict out;
        out["violation"] = s.outcome.violation;
        out["v_estimate"] = s.outcome.order.v_estimate;
        if (s.outcome.strategy) {
          out["margin"] = s.outcome.strategy->margin;
          out["min_payoff"] = s.outcome.verification->min_payoff;
          py::list rows;
          for (const StrategyRow& r : s.table) rows.append(py::make_tuple(r.strike, r.u1, r.u2, r.delta));
          out["table"] = rows;
        }
        return out;
      },
      py::arg("t1"), py::arg("t2"), py::arg("seed") = 0);

  m.def(
      "simulate_market",
      [](int d, int steps, double dt, double vol, std::uint64_t seed) {
        const MarketPath p = simulate_market(d, steps, dt, vol, seed);
        return py::make_tuple(p.times, Eigen::MatrixXd(p.weights));
      },
      py::arg("d"), py::arg("steps"), py::arg("dt"), py::arg("vol"), py::arg("seed") = 0);
  m.def(
      "gamma_process",
      [](const std::string& g, std::vector<double> times, const Eigen::Ref<const Eigen::MatrixXd>& weights) {
        MarketPath p;
        p.times = std::move(times);
        p.weights = as_points(weights);
        return gamma_process(generating_function(g), p).gamma;
      },
      py::arg("g"), py::arg("times"), py::arg("weights"));
}
