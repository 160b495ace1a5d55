// Command-line front end: solve | daily | verify | acerror.
#include "asdvc/acflow.hpp"
#include "asdvc/async_engine.hpp"
#include "asdvc/error.hpp"
#include "asdvc/operator_lab.hpp"
#include "asdvc/scenario.hpp"
#include "asdvc/sync_solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace asdvc;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNotConverged = 2;

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> chi;
  std::optional<double> eta;
  std::string mode;
  std::string out = "out";
};

std::vector<double> to_kw(const Vector& v, const PerUnitBase& base) {
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = base.pu_to_kw(v(i));
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Scenario load(const CommonOpts& o) {
  Scenario sc = load_scenario(o.config);
  if (o.eta) sc.solver.eta = *o.eta;
  return sc;
}

// Converged optimum used as the w* reference in traces.
Vector reference_optimum(const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost) {
  const SolverParams p = synthesize_params(model, cost, 0);
  SyncOptions opts;
  opts.tol = 1e-13;
  opts.max_iter = 200000;
  const SyncResult r = solve_sync(PrimalDualState::zeros(model.n), p, model, region, cost, opts);
  return r.state.stacked();
}

json state_json(const PrimalDualState& s, const NetworkModel& model, const FeasibleRegion& region,
                const CostModel& cost, const PerUnitBase& base) {
  const KktResidual k = kkt_residual(s, model, region, cost);
  Vector U = (2.0 * s.V.array()).sqrt();
  return {{"p_kw", to_kw(s.p, base)},
          {"q_kvar", to_kw(s.q, base)},
          {"lambda", to_std(s.lambda)},
          {"U_pu", to_std(U)},
          {"kkt", {{"stationarity_V", k.stationarity_V}, {"stationarity_z", k.stationarity_z}, {"primal", k.primal}}}};
}

int cmd_solve(const CommonOpts& o) {
  Scenario sc = load(o);
  if (o.chi) sc.schedule.chi = *o.chi;
  if (o.seed) sc.schedule.seed = *o.seed;
  const std::string mode = o.mode.empty() ? "sync" : o.mode;
  if (mode != "sync" && mode != "async") throw Error(ErrorCode::InvalidInput, "--mode must be sync or async");

  const NetworkModel model = scenario_network(sc);
  const FeasibleRegion region = scenario_region(sc);
  const CostModel cost = scenario_cost(sc);
  const ValidatedParams vp = scenario_params(sc, model, cost, sc.schedule.chi);
  const Vector w_ref = reference_optimum(model, region, cost);

  json summary{{"mode", mode},
               {"chi", sc.schedule.chi},
               {"eta", vp.params.eta},
               {"eta_bound", vp.eta_bound},
               {"alpha", vp.params.alpha_pq},
               {"beta", vp.params.beta},
               {"kappa", vp.params.kappa}};
  bool converged = false;
  if (mode == "sync") {
    SyncOptions opts;
    opts.tol = sc.sync_tol;
    opts.max_iter = sc.sync_max_iter;
    opts.w_ref = w_ref;
    const SyncResult r = solve_sync(PrimalDualState::zeros(model.n), vp.params, model, region, cost, opts);
    write_text(fs::path(o.out) / "sync_trace.csv", sync_trace_csv(r.trace));
    converged = r.status == SolveStatus::Converged;
    summary["iterations"] = r.iterations;
    summary["residual"] = r.residual;
    summary["iterations_to_1e-4"] = iterations_to_level(r.trace, 1e-4);
    summary["state"] = state_json(r.state, model, region, cost, sc.base);
  } else {
    AsyncSim sim = make_async_sim(model, region, cost, vp.params, sc.schedule, PrimalDualState::zeros(model.n));
    StopRule rule;
    rule.tol = sc.async_tol;
    rule.max_ticks = sc.async_max_ticks;
    rule.w_ref = w_ref;
    const AsyncResult r = run_async(sim, rule);
    write_text(fs::path(o.out) / "async_trace.csv", async_trace_csv(r.trace));
    converged = r.status == SolveStatus::Converged;
    summary["seed"] = sc.schedule.seed;
    summary["ticks"] = r.ticks;
    summary["residual"] = r.residual;
    summary["rel_err"] = r.rel_err;
    summary["per_bus_iterations_to_1e-4"] =
        r.ticks_to_level < 0 ? -1.0 : static_cast<double>(r.ticks_to_level) / model.n;
    summary["state"] = state_json(r.state, model, region, cost, sc.base);
  }
  summary["converged"] = converged;
  write_text(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  if (!converged) {
    std::cerr << "solver did not reach tolerance within its budget\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_daily(const CommonOpts& o) {
  Scenario sc = load(o);
  if (o.chi) sc.daily.chi = *o.chi;
  if (o.seed) sc.daily.seed = *o.seed;
  const std::string mode = o.mode.empty() ? "both" : o.mode;
  if (mode != "sync" && mode != "async" && mode != "both")
    throw Error(ErrorCode::InvalidInput, "--mode must be sync, async or both");
  const DailyProfile prof =
      sc.daily.timeseries ? read_timeseries_csv(*sc.daily.timeseries, sc.n()) : synthetic_profile(sc);

  std::vector<DailyRow> rows, sync_rows, async_rows;
  if (mode != "async") sync_rows = run_daily(sc, DailyMode::Sync, prof);
  if (mode != "sync") async_rows = run_daily(sc, DailyMode::Async, prof);
  rows = sync_rows;
  rows.insert(rows.end(), async_rows.begin(), async_rows.end());
  write_text(fs::path(o.out) / "daily.csv", daily_csv(rows));

  json summary{{"minutes", prof.minutes}, {"chi", sc.daily.chi}};
  auto stats = [](const std::vector<DailyRow>& r) {
    double worst_kkt = 0.0, mean_err = 0.0;
    for (const auto& x : r) {
      worst_kkt = std::max(worst_kkt, x.kkt_residual);
      mean_err += x.voltage_error / r.size();
    }
    return json{{"worst_kkt", worst_kkt}, {"mean_voltage_error", mean_err}};
  };
  if (!sync_rows.empty()) summary["sync"] = stats(sync_rows);
  if (!async_rows.empty()) summary["async"] = stats(async_rows);
  if (!sync_rows.empty() && !async_rows.empty()) {
    int wins = 0;
    for (std::size_t m = 0; m < sync_rows.size(); ++m)
      if (async_rows[m].voltage_error <= sync_rows[m].voltage_error * (1 + 1e-9) + 1e-12) ++wins;
    summary["async_not_worse_fraction"] = static_cast<double>(wins) / sync_rows.size();
  }
  write_text(fs::path(o.out) / "daily_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_verify(const CommonOpts& o, long samples) {
  Scenario sc = load(o);
  const int chi = o.chi.value_or(sc.schedule.chi);
  const NetworkModel model = scenario_network(sc);
  const FeasibleRegion region = scenario_region(sc);
  const CostModel cost = scenario_cost(sc);
  const ValidatedParams vp = scenario_params(sc, model, cost, chi);
  const OperatorContext ctx = make_operator_context(model, region, cost, vp.params);
  const auto reports = run_property_suite(ctx, samples, o.seed.value_or(2024));

  std::string csv = "property,samples,worst_margin,tolerance,passed\n";
  bool ok = true;
  for (const auto& r : reports) {
    char line[256];
    std::snprintf(line, sizeof line, "%s,%ld,%.17g,%.3g,%d\n", r.name.c_str(), r.samples, r.worst_margin,
                  r.tolerance, r.passed() ? 1 : 0);
    csv += line;
    std::printf("%-32s samples=%-6ld worst_margin=% .3e  %s\n", r.name.c_str(), r.samples, r.worst_margin,
                r.passed() ? "ok" : "VIOLATED");
    ok = ok && r.passed();
  }
  const Vector w_star = reference_optimum(model, region, cost);
  const auto inc = inclusion_residual(ctx, w_star);
  std::printf("fixed-point residual at w*       %.3e\n", fixed_point_residual(ctx, w_star));
  std::printf("inclusion residual at w*         z=%.3e lambda=%.3e\n", inc.z_block, inc.lambda_block);
  std::printf("maximal monotonicity and almost-sure convergence are checked only through the sampled\n"
              "inequalities above and multi-seed runs, not proved.\n");
  write_text(fs::path(o.out) / "verify_margins.csv", csv);
  for (const auto& r : reports) enforce(r);
  return ok ? kOk : kValidation;
}

int cmd_acerror(const CommonOpts& o) {
  Scenario sc = load(o);
  const NetworkModel model = scenario_network(sc);
  const FeasibleRegion region = scenario_region(sc);
  const CostModel cost = scenario_cost(sc);
  const Vector w = reference_optimum(model, region, cost);
  const int n = model.n;
  const Vector p = w.head(n), q = w.segment(n, n);

  std::string csv = "case,bus,U_linear,U_ac,rel_err\n";
  json summary;
  auto run = [&](const std::string& name, const Vector& pp, const Vector& qq) {
    const ACSolution ac = solve_ac(model, pp, qq);
    const Vector V = linear_voltage(model, pp, qq);
    for (int j = 0; j < n; ++j) {
      const double ul = std::sqrt(2.0 * V(j));
      char line[160];
      std::snprintf(line, sizeof line, "%s,%d,%.12f,%.12f,%.6e\n", name.c_str(), j + 1, ul, ac.U(j),
                    std::abs(ul - ac.U(j)) / ac.U(j));
      csv += line;
    }
    summary[name] = {{"max_rel_error", linearization_error(model, pp, qq)},
                     {"sweeps", ac.iterations},
                     {"balance_residual", ac.balance_residual}};
  };
  run("controlled", p, q);
  run("no_control", Vector::Zero(n), Vector::Zero(n));
  write_text(fs::path(o.out) / "acerror.csv", csv);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Diverged:
    case ErrorCode::MaxIterExceeded:
    case ErrorCode::NotConverged: return kNotConverged;
    default: return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous distributed voltage control for radial feeders"};
  app.require_subcommand(1);
  CommonOpts o;
  long samples = 1000;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--chi", o.chi, "Maximum read delay in global ticks");
    sub->add_option("--eta", o.eta, "Relaxation step (validated against the convergence bound)");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto* solve = app.add_subcommand("solve", "Static solve, synchronous or asynchronous");
  add_common(solve);
  solve->add_option("--mode", o.mode, "sync | async");
  auto* daily = app.add_subcommand("daily", "Quasi-static day with online estimation");
  add_common(daily);
  daily->add_option("--mode", o.mode, "sync | async | both");
  auto* verify = app.add_subcommand("verify", "Sampled operator property checks");
  add_common(verify);
  verify->add_option("--samples", samples, "Random pairs per property");
  auto* acerror = app.add_subcommand("acerror", "Linearization error against the AC sweep");
  add_common(acerror);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kValidation;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*daily) return cmd_daily(o);
    if (*verify) return cmd_verify(o, samples);
    if (*acerror) return cmd_acerror(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
