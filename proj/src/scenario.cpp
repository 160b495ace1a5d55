#include "asdvc/scenario.hpp"

#include "asdvc/acflow.hpp"
#include "asdvc/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace asdvc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

// Numeric rows of a CSV; a leading header row and '#' comments are skipped.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    std::vector<double> row;
    bool numeric = true;
    for (const auto& x : fields) {
      double v = 0.0;
      if (!parse_double(x, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric && first) {
      first = false;
      continue;
    }
    first = false;
    require(numeric, ErrorCode::InvalidInput, path.string() + ":" + std::to_string(lineno) + ": non-numeric field");
    require(row.size() == columns, ErrorCode::InvalidInput,
            path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) + " fields");
    rows.push_back(std::move(row));
  }
  return rows;
}

int bus_index(double v, int n, const fs::path& path) {
  const int b = static_cast<int>(v);
  require(b == v && b >= 1 && b <= n, ErrorCode::InvalidInput,
          path.string() + ": bus " + std::to_string(v) + " outside 1.." + std::to_string(n));
  return b - 1;
}

}  // namespace

std::vector<Line> read_feeder_csv(const fs::path& path) {
  std::vector<Line> lines;
  for (const auto& r : read_numeric_csv(path, 4)) {
    require(r[0] == std::floor(r[0]) && r[1] == std::floor(r[1]), ErrorCode::InvalidInput,
            path.string() + ": bus ids must be integers");
    lines.push_back({static_cast<int>(r[0]), static_cast<int>(r[1]), r[2], r[3]});
  }
  return lines;
}

void read_loads_csv(const fs::path& path, int n, const PerUnitBase& base, Vector& p_c, Vector& q_c) {
  p_c = Vector::Zero(n);
  q_c = Vector::Zero(n);
  for (const auto& r : read_numeric_csv(path, 3)) {
    const int j = bus_index(r[0], n, path);
    p_c(j) = base.kw_to_pu(r[1]);
    q_c(j) = base.kw_to_pu(r[2]);
  }
}

std::vector<BusLimits> read_limits_csv(const fs::path& path, int n, const PerUnitBase& base) {
  std::vector<BusLimits> lim(n);
  std::vector<bool> seen(n, false);
  for (const auto& r : read_numeric_csv(path, 6)) {
    const int j = bus_index(r[0], n, path);
    lim[j] = {base.kw_to_pu(r[1]), base.kw_to_pu(r[2]), base.kw_to_pu(r[3]), base.kw_to_pu(r[4]),
              base.kw_to_pu(r[5])};
    seen[j] = true;
  }
  for (int j = 0; j < n; ++j)
    require(seen[j], ErrorCode::InvalidInput, path.string() + ": no limits for bus " + std::to_string(j + 1));
  return lim;
}

DailyProfile read_timeseries_csv(const fs::path& path, int n) {
  const auto rows = read_numeric_csv(path, 5);
  int minutes = 0;
  for (const auto& r : rows) minutes = std::max(minutes, static_cast<int>(r[0]) + 1);
  DailyProfile prof;
  prof.minutes = minutes;
  prof.p_kw = Matrix::Constant(minutes, n, std::nan(""));
  prof.q_kvar = prof.p_kw;
  prof.pv_kw = prof.p_kw;
  for (const auto& r : rows) {
    const int m = static_cast<int>(r[0]);
    require(m >= 0 && m == r[0], ErrorCode::InvalidInput, path.string() + ": minute must be a nonnegative integer");
    const int j = bus_index(r[1], n, path);
    require(r[4] >= 0.0, ErrorCode::InvalidInput, path.string() + ": pv_kw must be nonnegative");
    prof.p_kw(m, j) = r[2];
    prof.q_kvar(m, j) = r[3];
    prof.pv_kw(m, j) = r[4];
  }
  require(!prof.p_kw.hasNaN(), ErrorCode::InvalidInput, path.string() + ": every minute needs a row for every bus");
  return prof;
}

DelayLaw parse_delay_law(const std::string& s) {
  if (s == "uniform") return DelayLaw::Uniform;
  if (s == "fixed") return DelayLaw::Fixed;
  if (s == "adversarial" || s == "adversarial-max") return DelayLaw::AdversarialMax;
  throw Error(ErrorCode::InvalidInput, "unknown delay law '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "uniform") return Activation::Uniform;
  if (s == "round-robin") return Activation::RoundRobin;
  if (s == "simultaneous") return Activation::Simultaneous;
  throw Error(ErrorCode::InvalidInput, "unknown activation '" + s + "'");
}

Scenario load_scenario(const fs::path& config) {
  std::ifstream in(config);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + config.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, config.string() + ": " + e.what());
  }
  Scenario sc;
  sc.config_dir = fs::absolute(config).parent_path();
  auto path_of = [&](const std::string& key) {
    require(j.contains(key), ErrorCode::InvalidInput, config.string() + ": missing '" + key + "'");
    return sc.config_dir / j.at(key).get<std::string>();
  };
  try {
    if (j.contains("base")) {
      sc.base.base_kv = j["base"].value("kv", sc.base.base_kv);
      sc.base.base_mva = j["base"].value("mva", sc.base.base_mva);
    }
    sc.substation_voltage_pu = j.value("substation_voltage_pu", 1.0);
    if (j.contains("k_policy")) {
      const auto& k = j["k_policy"];
      const std::string kind = k.value("kind", "exact");
      if (kind == "exact")
        sc.k_policy = KPolicy::exact();
      else if (kind == "approximate")
        sc.k_policy = KPolicy::approximate(k.at("k").get<double>());
      else
        throw Error(ErrorCode::InvalidInput, "k_policy.kind must be exact or approximate");
    }
    sc.lines_ohm = read_feeder_csv(path_of("feeder"));
    const int n = sc.n();
    read_loads_csv(path_of("loads"), n, sc.base, sc.p_c, sc.q_c);
    sc.limits = read_limits_csv(path_of("limits"), n, sc.base);
    if (j.contains("cost")) {
      sc.c_p = j["cost"].value("c_p", sc.c_p);
      sc.c_q = j["cost"].value("c_q", sc.c_q);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      auto opt = [&](const char* key, std::optional<double>& out) {
        if (s.contains(key)) out = s.at(key).get<double>();
      };
      opt("alpha_pq", sc.solver.alpha_pq);
      opt("alpha_lambda", sc.solver.alpha_lambda);
      opt("eta", sc.solver.eta);
      opt("beta", sc.solver.beta);
      opt("kappa", sc.solver.kappa);
      sc.sync_tol = s.value("tol", sc.sync_tol);
      sc.sync_max_iter = s.value("max_iter", sc.sync_max_iter);
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      sc.schedule.seed = s.value("seed", sc.schedule.seed);
      sc.schedule.chi = s.value("chi", sc.schedule.chi);
      sc.schedule.delay_law = parse_delay_law(s.value("delay_law", std::string("uniform")));
      sc.schedule.fixed_delay = s.value("fixed_delay", 0);
      sc.schedule.activation = parse_activation(s.value("activation", std::string("uniform")));
      const std::string nd = s.value("neighbor_delay", std::string("independent"));
      require(nd == "independent" || nd == "shared", ErrorCode::InvalidInput,
              "neighbor_delay must be independent or shared");
      sc.schedule.neighbor_delay = nd == "shared" ? NeighborDelay::Shared : NeighborDelay::Independent;
      const std::string th = s.value("two_hop", std::string("direct"));
      require(th == "direct" || th == "relayed", ErrorCode::InvalidInput, "two_hop must be direct or relayed");
      sc.schedule.two_hop = th == "relayed" ? TwoHopMode::Relayed : TwoHopMode::Direct;
    }
    if (j.contains("async")) {
      sc.async_tol = j["async"].value("tol", sc.async_tol);
      sc.async_max_ticks = j["async"].value("max_ticks", sc.async_max_ticks);
    }
    if (j.contains("daily")) {
      const auto& d = j["daily"];
      auto& dc = sc.daily;
      dc.minutes = d.value("minutes", dc.minutes);
      dc.iterations_per_step = d.value("iterations_per_step", dc.iterations_per_step);
      dc.chi = d.value("chi", dc.chi);
      dc.seed = d.value("seed", dc.seed);
      const std::string ms = d.value("measurement", std::string("linear"));
      require(ms == "linear" || ms == "ac", ErrorCode::InvalidInput, "daily.measurement must be linear or ac");
      dc.measurement = ms == "ac" ? MeasurementSource::AC : MeasurementSource::Linear;
      dc.use_controller_injections = d.value("use_controller_injections", false);
      if (d.contains("timeseries")) dc.timeseries = sc.config_dir / d["timeseries"].get<std::string>();
      dc.load_min_factor = d.value("load_min_factor", dc.load_min_factor);
      dc.load_peak_factor = d.value("load_peak_factor", dc.load_peak_factor);
      dc.load_peak_minute = d.value("load_peak_minute", dc.load_peak_minute);
      dc.pv_peak_factor = d.value("pv_peak_factor", dc.pv_peak_factor);
      dc.pv_peak_minute = d.value("pv_peak_minute", dc.pv_peak_minute);
      dc.pv_width_minutes = d.value("pv_width_minutes", dc.pv_width_minutes);
      require(dc.iterations_per_step >= 1 && dc.minutes >= 1 && dc.chi >= 0, ErrorCode::InvalidInput,
              "daily: iterations_per_step and minutes must be >= 1, chi >= 0");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, config.string() + ": " + e.what());
  }
  return sc;
}

NetworkModel scenario_network(const Scenario& sc) {
  const double V0 = 0.5 * sc.substation_voltage_pu * sc.substation_voltage_pu;
  return build_network(to_per_unit(sc.lines_ohm, sc.base), sc.p_c, sc.q_c, V0, sc.k_policy);
}

FeasibleRegion scenario_region(const Scenario& sc) { return FeasibleRegion(sc.limits); }

CostModel scenario_cost(const Scenario& sc) { return CostModel::uniform(sc.n(), sc.c_p, sc.c_q); }

ValidatedParams scenario_params(const Scenario& sc, const NetworkModel& model, const CostModel& cost, int chi) {
  SolverParams p = synthesize_params(model, cost, chi);
  const auto& o = sc.solver;
  if (o.beta) p.beta = *o.beta;
  if (o.kappa) p.kappa = *o.kappa;
  if (o.alpha_pq) p.alpha_pq = *o.alpha_pq;
  if (o.alpha_lambda) p.alpha_lambda = *o.alpha_lambda;
  if (o.eta) p.eta = *o.eta;
  return validate_params(p, model);
}

MeasurementFrame measure(const NetworkModel& truth, const Vector& p, const Vector& q, MeasurementSource source) {
  MeasurementFrame f;
  f.p = p;
  f.q = q;
  if (source == MeasurementSource::Linear) {
    f.V = linear_voltage(truth, p, q);
  } else {
    const ACSolution ac = solve_ac(truth, p, q);
    f.V = 0.5 * ac.U.cwiseAbs2();
  }
  return f;
}

double estimate_varpi_online(const NetworkModel& model, const MeasurementFrame& frame, int j) {
  require(frame.V.size() == model.n && frame.p.size() == model.n && frame.q.size() == model.n,
          ErrorCode::DimensionMismatch, "measurement frame has wrong size");
  double s = 0.0;
  for (int k : model.b_stencil[j]) {
    require(std::isfinite(frame.V(k)), ErrorCode::MissingMeasurement,
            "no voltage measurement at bus " + std::to_string(k + 1));
    s += model.B(j, k) * frame.V(k);
  }
  require(std::isfinite(frame.p(j)) && std::isfinite(frame.q(j)), ErrorCode::MissingMeasurement,
          "no injection measurement at bus " + std::to_string(j + 1));
  double est = s - model.K * frame.p(j) - frame.q(j);
  if (model.root_adjacent(j)) est -= 1.0 / (2.0 * model.root_reactance(j));
  return est;
}

Vector estimate_varpi_online(const NetworkModel& model, const MeasurementFrame& frame) {
  Vector out(model.n);
  for (int j = 0; j < model.n; ++j) out(j) = estimate_varpi_online(model, frame, j);
  return out;
}

std::string to_string(DailyMode mode) { return mode == DailyMode::Sync ? "sync" : "async"; }

DailyProfile synthetic_profile(const Scenario& sc) {
  const auto& d = sc.daily;
  const int n = sc.n();
  DailyProfile prof;
  prof.minutes = d.minutes;
  prof.p_kw.resize(d.minutes, n);
  prof.q_kvar.resize(d.minutes, n);
  prof.pv_kw.resize(d.minutes, n);
  const double to_kw = 1000.0 * sc.base.base_mva;
  for (int m = 0; m < d.minutes; ++m) {
    const double phase = 2.0 * std::numbers::pi * (m - d.load_peak_minute) / 1440.0;
    const double load = d.load_min_factor + (d.load_peak_factor - d.load_min_factor) * 0.5 * (1.0 + std::cos(phase));
    const double z = (m - d.pv_peak_minute) / d.pv_width_minutes;
    const double sun = d.pv_peak_factor * std::exp(-0.5 * z * z);
    for (int j = 0; j < n; ++j) {
      prof.p_kw(m, j) = load * sc.p_c(j) * to_kw;
      prof.q_kvar(m, j) = load * sc.q_c(j) * to_kw;
      prof.pv_kw(m, j) = sun * sc.limits[j].p_max * to_kw;
    }
  }
  return prof;
}

std::vector<DailyRow> run_daily(const Scenario& sc, DailyMode mode, const DailyProfile& profile) {
  const int n = sc.n();
  require(profile.p_kw.cols() == n, ErrorCode::DimensionMismatch, "profile bus count differs from the feeder");
  const NetworkModel base_model = scenario_network(sc);
  const CostModel cost = scenario_cost(sc);
  const ValidatedParams vp = scenario_params(sc, base_model, cost, sc.daily.chi);
  const auto& dc = sc.daily;

  AsyncSchedule sched = sc.schedule;
  sched.chi = dc.chi;
  sched.seed = dc.seed;
  if (sched.delay_law == DelayLaw::Fixed) sched.fixed_delay = std::min(sched.fixed_delay, dc.chi);

  // The controller's view of the grid changes every minute; these live for the
  // whole run so the async sim can keep pointing at them.
  NetworkModel controller = base_model;
  FeasibleRegion region = scenario_region(sc);
  std::optional<AsyncSim> sim;
  AsyncSim barrier;  // only used to draw the synchronous step delays
  if (mode == DailyMode::Sync) {
    barrier = make_async_sim(base_model, region, cost, vp.params, sched, PrimalDualState::zeros(n));
  }

  PrimalDualState state = PrimalDualState::zeros(n);
  std::vector<DailyRow> rows;
  rows.reserve(profile.minutes);
  for (int m = 0; m < profile.minutes; ++m) {
    Vector pc(n), qc(n);
    std::vector<BusLimits> lim = sc.limits;
    for (int j = 0; j < n; ++j) {
      pc(j) = sc.base.kw_to_pu(profile.p_kw(m, j));
      qc(j) = sc.base.kw_to_pu(profile.q_kvar(m, j));
      lim[j].p_max = std::max(sc.base.kw_to_pu(profile.pv_kw(m, j)), lim[j].p_min);
    }
    const NetworkModel truth = with_loads(base_model, pc, qc);
    region = FeasibleRegion(lim);
    // Injections cannot exceed the refreshed limits (PV availability drops
    // between minutes); the relaxed update alone would only approach them.
    const Vector z = project_all(region, (Vector(2 * n) << state.p, state.q).finished());
    state.p = z.head(n);
    state.q = z.tail(n);
    if (sim) {
      sim->region = &region;
      clip_published(*sim);
    }

    MeasurementFrame frame = measure(truth, state.p, state.q, dc.measurement);
    if (dc.use_controller_injections) {
      frame.p = state.p;
      frame.q = state.q;
    }
    controller = with_varpi_a(base_model, estimate_varpi_online(base_model, frame));

    long steps = 0;
    if (mode == DailyMode::Sync) {
      long budget = dc.iterations_per_step;
      while (true) {
        int worst = 0;
        for (int j = 0; j < n; ++j) {
          const DelayDraw d = draw_delays(barrier, j);
          worst = std::max({worst, d.tau_self, d.max_neighbor()});
        }
        budget -= 1 + worst;
        if (budget < 0) break;
        state = sdvc_step(state, vp.params, controller, region, cost);
        ++steps;
      }
    } else {
      if (!sim) sim = make_async_sim(controller, region, cost, vp.params, sched, state);
      sim->model = &controller;
      sim->region = &region;
      StopRule rule;
      rule.tol = 0.0;
      rule.max_ticks = static_cast<long>(dc.iterations_per_step) * n;
      rule.record_trace = false;
      const AsyncResult res = run_async(*sim, rule);
      state = res.state;
      steps = res.ticks;
    }

    const MeasurementFrame after = measure(truth, state.p, state.q, dc.measurement);
    const double verr = (after.V - truth.V_ref).norm();
    const double kkt = kkt_residual(state, truth, region, cost).max();
    rows.push_back({m, mode, verr, kkt, steps});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string sync_trace_csv(const std::vector<SyncTraceRow>& trace) {
  std::string out = "iter,residual,rel_err_vs_wstar\n";
  for (const auto& r : trace) out += std::to_string(r.iter) + "," + fmt(r.residual) + "," + fmt(r.rel_err) + "\n";
  return out;
}

std::string async_trace_csv(const std::vector<AsyncTraceRow>& trace) {
  std::string out = "tick,bus,tau_self,max_tau_neighbors,residual,rel_err\n";
  for (const auto& r : trace)
    out += std::to_string(r.tick) + "," + std::to_string(r.bus + 1) + "," + std::to_string(r.tau_self) + "," +
           std::to_string(r.max_tau_neighbors) + "," + fmt(r.residual) + "," + fmt(r.rel_err) + "\n";
  return out;
}

std::string daily_csv(const std::vector<DailyRow>& rows) {
  std::string out = "minute,mode,voltage_error,kkt_residual\n";
  for (const auto& r : rows)
    out += std::to_string(r.minute) + "," + to_string(r.mode) + "," + fmt(r.voltage_error) + "," +
           fmt(r.kkt_residual) + "\n";
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace asdvc
