#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "convex_order/error.hpp"
#include "convex_order/fgp.hpp"
#include "convex_order/io.hpp"
#include "convex_order/order.hpp"
#include "convex_order/pipeline.hpp"
#include "convex_order/recover.hpp"
#include "convex_order/scenarios.hpp"
#include "convex_order/transport.hpp"

namespace convex_order::cli {

namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = std::make_shared<spdlog::logger>("convex_order", std::make_shared<spdlog::sinks::stderr_sink_st>());
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("CONVEX_ORDER_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    log->set_level(spdlog::level::err);
  } else if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else {
    log->set_level(spdlog::level::info);
    if (level != "info") log->warn("CONVEX_ORDER_LOG='{}' not recognised, using info", level);
  }
  return log;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNumericalFailure:
    case ErrorCode::kNumericalUnderflow:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kNoConvergence:
    case ErrorCode::kInfeasible:
    case ErrorCode::kRejectionStall:
    case ErrorCode::kBudgetExceeded:
      return kExitNumericalFailure;
    default:
      return kExitInputError;
  }
}

struct SearchFlags {
  std::string method = "auto";
  int grid_p = OrderSearchConfig{}.grid_partitions;
  int max_evals = OrderSearchConfig{}.max_evals;
  double alpha_lo = OrderSearchConfig{}.alpha_lo;
  double alpha_hi = OrderSearchConfig{}.alpha_hi;
  double tolerance = 0.0;  // 0: 0.5 / sqrt(n)
  bool stochastic = false;

  void attach(CLI::App& app) {
    app.add_option("--method", method, "indirect-hist, indirect-samples, direct or auto")
        ->check(CLI::IsMember({"auto", "indirect-hist", "indirect-samples", "direct"}))
        ->capture_default_str();
    app.add_option("--grid-p", grid_p, "grid partitions per axis")->check(CLI::Range(2, 100000))->capture_default_str();
    app.add_option("--max-evals", max_evals, "TPE evaluations")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--alpha-lo", alpha_lo, "lower alpha bound")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--alpha-hi", alpha_hi, "upper alpha bound")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--tolerance", tolerance, "decision tolerance (default 0.5/sqrt(n))")
        ->check(CLI::PositiveNumber);
    app.add_flag("--stochastic-weights", stochastic, "draw rho weights from Dirichlet(alpha)");
  }

  OrderSearchConfig config(SearchMethod fallback, Eigen::Index n, std::uint64_t seed) const {
    OrderSearchConfig cfg;
    cfg.method = method == "indirect-hist"      ? SearchMethod::kIndirectHistogram
                 : method == "indirect-samples" ? SearchMethod::kIndirectSamples
                 : method == "direct"           ? SearchMethod::kDirect
                                                : fallback;
    cfg.grid_partitions = grid_p;
    cfg.max_evals = max_evals;
    cfg.alpha_lo = alpha_lo;
    cfg.alpha_hi = alpha_hi;
    cfg.seed = seed;
    cfg.stochastic_weights = stochastic;
    cfg.tolerance = tolerance > 0.0 ? tolerance : default_tolerance(n);
    cfg.validate();
    return cfg;
  }
};

struct Common {
  std::string input_a;
  std::string input_b;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void attach_io(CLI::App& app, Common& c, const std::string& a_help, const std::string& b_help, bool required) {
  auto* a = app.add_option("--input-a", c.input_a, a_help);
  auto* b = app.add_option("--input-b", c.input_b, b_help);
  if (required) {
    a->required();
    b->required();
  }
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
}

io::Table measure_table(const DiscreteMeasure& m) {
  io::Table t;
  for (int j = 0; j < m.dim(); ++j) t.header.push_back(m.dim() == 1 ? "x" : fmt::format("x{}", j + 1));
  t.header.push_back("weight");
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::vector<double> row(m.points().row(i).data(), m.points().row(i).data() + m.dim());
    row.push_back(m.weight(i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Row-major copy; PointMatrix rows are not contiguous in general.
std::vector<double> row_of(const PointMatrix& m, Eigen::Index i) {
  std::vector<double> r;
  for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
  return r;
}

void add_order_fields(io::Report& r, const ConvexOrderReport& rep, const OrderSearchConfig& cfg) {
  r.add("method", std::string(to_string(cfg.method)));
  r.add("grid_p", cfg.grid_partitions);
  r.add("max_evals", cfg.max_evals);
  r.add("alpha_lo", cfg.alpha_lo);
  r.add("alpha_hi", cfg.alpha_hi);
  r.add("seed", std::to_string(cfg.seed));
  r.add("v_estimate", rep.v_estimate);
  r.add("tolerance", rep.tolerance);
  r.add("decision", std::string(to_string(rep.decision)));
  r.add("evals_used", rep.evals_used);
  r.add("witness_atoms", static_cast<int>(rep.witness_rho.size()));
}

io::Table trials_table(const ConvexOrderReport& rep) {
  io::Table t{{"trial", "gap", "best_so_far"}, {}};
  for (std::size_t i = 0; i < rep.trial_gaps.size(); ++i)
    t.rows.push_back({static_cast<double>(i + 1), rep.trial_gaps[i], rep.best_so_far[i]});
  return t;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item(rest.substr(0, comma));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == item.size() && !item.empty(), ErrorCode::kInvalidArgument, "bad list entry '" + item + "'");
    out.push_back(v);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct CheckOrder {
  Common io_flags;
  SearchFlags search;
  std::string sweep;
  int dim = 1;
  int samples = 100;
  int bins = 100;

  int run(spdlog::logger& log) const {
    const fs::path out(io_flags.out_dir);
    if (!sweep.empty()) return run_sweep(log, out);
    require(!io_flags.input_a.empty() && !io_flags.input_b.empty(), ErrorCode::kInvalidArgument,
            "check-order needs --input-a and --input-b (or --sweep-sigma)");
    const auto a = io::read_measure(io_flags.input_a);
    const auto b = io::read_measure(io_flags.input_b);
    const bool both_hist = a.format == io::InputFormat::kHistogram && b.format == io::InputFormat::kHistogram;
    const OrderSearchConfig cfg =
        search.config(both_hist ? SearchMethod::kIndirectHistogram : SearchMethod::kIndirectSamples,
                      std::min(a.measure.size(), b.measure.size()), io_flags.seed);
    log.info("check-order: {} vs {} ({} method)", io_flags.input_a, io_flags.input_b, to_string(cfg.method));
    const ConvexOrderReport rep = estimate_v(a.measure, b.measure, cfg);

    io::Report r;
    r.add("command", "check-order");
    r.add("input_a", io_flags.input_a);
    r.add("input_b", io_flags.input_b);
    r.add("format_a", std::string(io::to_string(a.format)));
    r.add("format_b", std::string(io::to_string(b.format)));
    r.add("dim", a.measure.dim());
    r.add("atoms_a", static_cast<int>(a.measure.size()));
    r.add("atoms_b", static_cast<int>(b.measure.size()));
    add_order_fields(r, rep, cfg);
    r.add_block("trials", trials_table(rep));
    io::write_file(out / "report.txt", r.render());
    io::write_file(out / "witness.csv", io::samples_csv(rep.witness_rho));
    log.info("v_estimate {} -> {}", io::number(rep.v_estimate), to_string(rep.decision));
    return rep.decision == Decision::kNotOrdered ? kExitViolation : kExitOk;
  }

  int run_sweep(spdlog::logger& log, const fs::path& out) const {
    const std::vector<double> sigmas = parse_list(sweep);
    require(!sigmas.empty(), ErrorCode::kInvalidArgument, "empty sweep");
    const SearchMethod fallback = dim == 1 ? SearchMethod::kIndirectHistogram : SearchMethod::kIndirectSamples;
    io::Table table{{"sigma", "v_estimate", "tolerance", "not_ordered"}, {}};
    io::Report r;
    r.add("command", "check-order");
    r.add("sweep", sweep);
    r.add("dim", dim);
    r.add("samples", samples);
    OrderSearchConfig cfg;
    for (double sigma : sigmas) {
      require(sigma > 0.0, ErrorCode::kInvalidArgument, "sweep values must be positive");
      cfg = search.config(fallback, samples, io_flags.seed);
      const bool hist = cfg.method == SearchMethod::kIndirectHistogram;
      require(!hist || dim == 1, ErrorCode::kInvalidDimension, "histogram sweeps are one-dimensional");
      const MeasurePair p = hist ? gaussian_histograms(sigma, samples, bins, io_flags.seed)
                                 : gaussian_samples(dim, sigma, samples, io_flags.seed);
      const ConvexOrderReport rep = estimate_v(p.mu, p.nu, cfg);
      log.info("sigma {}: v_estimate {}", io::number(sigma), io::number(rep.v_estimate));
      table.rows.push_back({sigma, rep.v_estimate, rep.tolerance, rep.decision == Decision::kNotOrdered ? 1.0 : 0.0});
    }
    r.add("method", std::string(to_string(cfg.method)));
    if (cfg.method == SearchMethod::kIndirectHistogram) r.add("bins", bins);
    r.add("grid_p", cfg.grid_partitions);
    r.add("max_evals", cfg.max_evals);
    r.add("seed", std::to_string(io_flags.seed));
    r.add_block("sweep", table);
    io::write_file(out / "sweep.csv", table.csv());
    io::write_file(out / "report.txt", r.render());
    return kExitOk;
  }
};

struct RecoverF {
  Common io_flags;
  RecoverConfig cfg;
  bool no_smooth = false;

  int run(spdlog::logger& log) const {
    const auto nu = io::read_measure(io_flags.input_a).measure;
    const DiscreteMeasure rho = io::read_samples(io_flags.input_b);
    require(nu.dim() == rho.dim(), ErrorCode::kDimensionMismatch, "nu and rho differ in dimension");
    RecoverConfig c = cfg;
    c.smooth = !no_smooth;
    const TransportPlan plan = emd(rho, nu, cost_matrix(rho, nu, CostMode::kNegInnerProduct)).plan;
    const Recovery rec = recover_f(nu, rho, plan, c);
    const fs::path out(io_flags.out_dir);
    const int d = nu.dim();

    io::Table grad, pot;
    if (d == 1) {
      grad.header = {"x", "gradient"};
      pot.header = {"x", "f", "gradient"};
    } else {
      grad.header = {"x", "y", "gx", "gy"};
      pot.header = {"x", "y", "f"};
    }
    for (Eigen::Index i = 0; i < rec.gradient.size(); ++i) {
      auto row = row_of(rec.gradient.anchors, i);
      const auto v = row_of(rec.gradient.values, i);
      row.insert(row.end(), v.begin(), v.end());
      grad.rows.push_back(std::move(row));
    }
    for (Eigen::Index i = 0; i < rec.potential.anchors.rows(); ++i) {
      auto row = row_of(rec.potential.anchors, i);
      row.push_back(rec.potential.values[i]);
      if (d == 1) row.push_back(rec.evaluator(rec.potential.anchors.row(i).transpose()).gradient[0]);
      pot.rows.push_back(std::move(row));
    }
    io::write_file(out / "gradient.csv", grad.csv());
    io::write_file(out / "potential.csv", pot.csv());

    io::Report r;
    r.add("command", "recover-f");
    r.add("input_a", io_flags.input_a);
    r.add("input_b", io_flags.input_b);
    r.add("dim", d);
    r.add("anchors", static_cast<int>(rec.gradient.size()));
    r.add("skipped", static_cast<int>(rec.gradient.skipped.size()));
    r.add("normalization",
          rec.potential.normalization == Normalization::kAnchoredAtMin ? "zero-at-smallest-anchor" : "zero-mean");
    if (d == 1) {
      r.add("smoothed", rec.smoothed);
      r.add("span", c.span);
    }
    if (rec.problem && rec.grid_values) {
      const PoissonProblem& pb = *rec.problem;
      r.add("h", pb.h);
      r.add("nx", pb.nx);
      r.add("ny", pb.ny);
      r.add("active_cells", static_cast<int>(pb.size()));
      r.add("compatibility_residual_before", pb.residual_before);
      r.add("compatibility_residual_after", pb.residual_after);
      io::Table mesh{{"x", "y", "f"}, {}};
      for (Eigen::Index i = 0; i < rec.grid_values->anchors.rows(); ++i) {
        auto row = row_of(rec.grid_values->anchors, i);
        row.push_back(rec.grid_values->values[i]);
        mesh.rows.push_back(std::move(row));
      }
      io::write_file(out / "mesh.csv", mesh.csv());
    }
    io::write_file(out / "report.txt", r.render());
    log.info("recovered f on {} anchors", rec.gradient.size());
    return kExitOk;
  }
};

struct Strategy {
  Common io_flags;
  SearchFlags search;
  RecoverConfig recover;

  int run(spdlog::logger& log) const {
    const CallSheet t1 = io::read_call_sheet(io_flags.input_a);
    const CallSheet t2 = io::read_call_sheet(io_flags.input_b);
    // Measure sizes are only known after extraction; size the tolerance on
    // the larger strike grid.
    const auto n = static_cast<Eigen::Index>(std::max(t1.strikes.size(), t2.strikes.size()));
    const OrderSearchConfig cfg = search.config(SearchMethod::kIndirectSamples, n, io_flags.seed);
    const SheetOutcome s = strategy_from_sheets(t1, t2, cfg, recover);
    const StrategyOutcome& o = s.outcome;

    io::Report r;
    r.add("command", "strategy");
    r.add("maturity_t1", t1.maturity);
    r.add("maturity_t2", t2.maturity);
    r.add("transform", "x -> (x - centre) / half_range");
    r.add("transform_centre", o.rescaling.centre[0]);
    r.add("transform_half_range", o.rescaling.half_range);
    r.add("t1_left_tail", s.t1.left_tail);
    r.add("t1_right_tail", s.t1.right_tail);
    r.add("t2_left_tail", s.t2.left_tail);
    r.add("t2_right_tail", s.t2.right_tail);
    add_order_fields(r, o.order, cfg);

    int code = kExitOk;
    if (!o.violation) {
      r.add("status", "market consistent with convex order");
    } else if (!o.strategy) {
      r.add("status", "violation found, no strategy with positive margin");
      r.add("strategy_error", o.strategy_error);
      code = kExitViolation;
    } else {
      const ArbitrageStrategy& st = *o.strategy;
      const Verification& v = *o.verification;
      double diagonal = 0.0;
      for (Eigen::Index i = 0; i < o.mu.size(); ++i) {
        const Eigen::VectorXd x = o.mu.points().row(i).transpose();
        diagonal = std::max(diagonal, std::abs(payoff(st, x, x).value - st.margin));
      }
      r.add("status", v.pass ? "arbitrage strategy verified" : "arbitrage strategy failed verification");
      r.add("margin", st.margin);
      r.add("cash_t1", st.cash_mu);
      r.add("cash_t2", st.cash_nu);
      r.add("min_payoff", v.min_payoff);
      r.add("mean_payoff", v.mean_payoff);
      r.add("argmin_s1", o.mu.points()(v.argmin_x, 0) * o.rescaling.half_range + o.rescaling.centre[0]);
      r.add("argmin_s2", o.nu.points()(v.argmin_y, 0) * o.rescaling.half_range + o.rescaling.centre[0]);
      r.add("pairs", static_cast<int>(v.pairs));
      r.add("extrapolated_pairs", static_cast<int>(v.extrapolated_pairs));
      r.add("diagonal_max_deviation", diagonal);
      r.add("verified", v.pass);
      io::Table table{{"strike", "unit", "u1", "u2", "delta_unit", "delta"}, {}};
      for (const StrategyRow& row : s.table)
        table.rows.push_back({row.strike, row.unit, row.u1, row.u2, row.delta, row.delta / o.rescaling.half_range});
      r.add_block("strategy", table);
      code = kExitViolation;
    }
    r.add_block("t1_law", measure_table(s.t1.measure));
    r.add_block("t2_law", measure_table(s.t2.measure));
    io::write_file(fs::path(io_flags.out_dir) / "report.txt", r.render());
    log.info("strategy: {}", o.violation ? "violation" : "consistent");
    return code;
  }
};

struct Fgp {
  Common io_flags;
  std::string g1 = "entropy";
  std::string g2 = "constant";
  std::string path = "random";
  int d = 3;
  int steps = 1000;
  double dt = 1e-3;
  double vol = 0.2;
  ArbitrageTestConfig test;

  int run(spdlog::logger& log) const {
    const GeneratingFunction f1 = generating_function(g1), f2 = generating_function(g2);
    MarketPath p = path == "random"   ? simulate_market(d, steps, dt, vol, io_flags.seed)
                   : path == "zigzag" ? zigzag_path(d, steps, dt, test.eta)
                                      : io::read_path(path);
    p.validate();
    const GammaSeries s1 = gamma_process(f1, p), s2 = gamma_process(f2, p);
    const RelativeArbitrageReport rep = detect_relative_arbitrage(f1, f2, p, test);
    const fs::path out(io_flags.out_dir);

    io::Table kappa{{"time", "gamma_g1", "gamma_g2", "kappa", "value_gap"}, {}};
    for (std::size_t t = 0; t < p.size(); ++t)
      kappa.rows.push_back({p.times[t], s1.gamma[t], s2.gamma[t], rep.kappa[t], rep.value_gap[t]});

    io::Report r;
    r.add("command", "fgp");
    r.add("g1", f1.name == "constant" ? g1 : f1.name);
    r.add("g2", f2.name == "constant" ? g2 : f2.name);
    r.add("path", path);
    r.add("dim", p.dim());
    r.add("samples", static_cast<int>(p.size()));
    if (path == "random") {
      r.add("dt", dt);
      r.add("vol", vol);
      r.add("seed", std::to_string(io_flags.seed));
    }
    r.add("eta", test.eta);
    r.add("c_bound", test.c_bound);
    r.add("horizon", test.horizon);
    r.add("eta_ok", rep.eta_ok);
    r.add("t_star", rep.t_star ? io::number(*rep.t_star) : "none");
    r.add("strong_arbitrage_from", rep.strong_arb_from ? io::number(*rep.strong_arb_from) : "none");
    r.add("proof_chain_holds", rep.proof_chain_holds);
    r.add("final_kappa", rep.kappa.back());
    r.add("final_value_gap", rep.value_gap.back());
    for (std::size_t i = 0; i < rep.violations.size(); ++i) r.add(fmt::format("violation_{}", i + 1), rep.violations[i]);
    io::write_file(out / "path.csv", io::path_csv(p));
    io::write_file(out / "kappa.csv", kappa.csv());
    io::write_file(out / "report.txt", r.render());
    log.info("fgp: eta_ok={} strong arbitrage from {}", rep.eta_ok,
             rep.strong_arb_from ? io::number(*rep.strong_arb_from) : "none");
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args) {
  auto log = make_logger();
  CLI::App app{"Convex order checks, potential recovery, calendar-spread arbitrage and portfolio generation", "convex_order"};
  app.require_subcommand(1);

  CheckOrder check;
  auto* c = app.add_subcommand("check-order", "estimate V(mu, nu) and decide convex order");
  attach_io(*c, check.io_flags, "mu (samples or histogram CSV)", "nu (samples or histogram CSV)", false);
  check.search.attach(*c);
  c->add_option("--sweep-sigma", check.sweep, "comma-separated sigmas for the Gaussian example");
  c->add_option("--dim", check.dim, "sweep dimension")->check(CLI::Range(1, 16))->capture_default_str();
  c->add_option("--samples", check.samples, "sweep sample count")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--bins", check.bins, "sweep histogram bins")->check(CLI::PositiveNumber)->capture_default_str();

  RecoverF recover;
  auto* rf = app.add_subcommand("recover-f", "recover the convex potential from nu and a witness rho");
  attach_io(*rf, recover.io_flags, "nu (samples or histogram CSV)", "witness rho (samples CSV)", true);
  rf->add_option("--span", recover.cfg.span, "LOWESS span (1D)")->capture_default_str();
  rf->add_flag("--no-smooth", recover.no_smooth, "skip smoothing (1D)");
  rf->add_option("--grid-h", recover.cfg.h, "grid spacing (2D, 0 = extent/32)")->capture_default_str();

  Strategy strategy;
  auto* st = app.add_subcommand("strategy", "calendar-spread arbitrage from two call sheets");
  attach_io(*st, strategy.io_flags, "call sheet at T1", "call sheet at T2 > T1", true);
  strategy.search.attach(*st);

  Fgp fgp;
  auto* fg = app.add_subcommand("fgp", "functionally generated portfolios and relative arbitrage");
  fg->add_option("--g1", fgp.g1, "entropy, quadratic, constant or constant:<c>")->capture_default_str();
  fg->add_option("--g2", fgp.g2, "entropy, quadratic, constant or constant:<c>")->capture_default_str();
  fg->add_option("--path", fgp.path, "random, zigzag or a path CSV")->capture_default_str();
  fg->add_option("--d", fgp.d, "number of stocks")->capture_default_str();
  fg->add_option("--steps", fgp.steps, "time steps")->capture_default_str();
  fg->add_option("--dt", fgp.dt, "time step")->capture_default_str();
  fg->add_option("--vol", fgp.vol, "log-capitalisation volatility")->capture_default_str();
  fg->add_option("--eta", fgp.test.eta, "required slope of kappa")->capture_default_str();
  fg->add_option("--c-bound", fgp.test.c_bound, "upper bound on G2")->capture_default_str();
  fg->add_option("--horizon", fgp.test.horizon, "horizon for the slope check")->capture_default_str();
  fg->add_option("--seed", fgp.io_flags.seed, "random seed")->capture_default_str();
  fg->add_option("--out-dir", fgp.io_flags.out_dir, "output directory")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (c->parsed()) return check.run(*log);
    if (rf->parsed()) return recover.run(*log);
    if (st->parsed()) return strategy.run(*log);
    return fgp.run(*log);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log->error("internal failure: {}", e.what());
    return kExitNumericalFailure;
  }
}

}  // namespace convex_order::cli
