#pragma once

#include "asdvc/async_engine.hpp"
#include "asdvc/cost.hpp"
#include "asdvc/feasible_set.hpp"
#include "asdvc/grid_model.hpp"
#include "asdvc/sync_solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace asdvc {

// ---- CSV ingestion (kW / kVar / kVA / ohm on disk, per-unit in memory) ----

std::vector<Line> read_feeder_csv(const std::filesystem::path& path);
/// Loads per bus (length n), converted to per-unit.
void read_loads_csv(const std::filesystem::path& path, int n, const PerUnitBase& base, Vector& p_c, Vector& q_c);
std::vector<BusLimits> read_limits_csv(const std::filesystem::path& path, int n, const PerUnitBase& base);

/// Minute-sampled profile; matrices are minutes x n, in kW / kVar.
struct DailyProfile {
  int minutes = 0;
  Matrix p_kw, q_kvar, pv_kw;
};
DailyProfile read_timeseries_csv(const std::filesystem::path& path, int n);

// ---- configuration ----

enum class MeasurementSource { Linear, AC };

struct SolverOverrides {
  std::optional<double> alpha_pq, alpha_lambda, eta, beta, kappa;
};

struct DailyConfig {
  int minutes = 1440;
  int iterations_per_step = 300;
  int chi = 25;
  std::uint64_t seed = 11;
  MeasurementSource measurement = MeasurementSource::Linear;
  bool use_controller_injections = false;
  std::optional<std::filesystem::path> timeseries;
  // Synthetic profile shape.
  double load_min_factor = 0.4;
  double load_peak_factor = 1.0;
  int load_peak_minute = 1140;
  double pv_peak_factor = 1.0;
  int pv_peak_minute = 720;
  double pv_width_minutes = 150.0;
};

struct Scenario {
  std::filesystem::path config_dir;
  std::vector<Line> lines_ohm;
  PerUnitBase base;
  double substation_voltage_pu = 1.0;
  KPolicy k_policy = KPolicy::exact();
  Vector p_c, q_c;  // per-unit
  std::vector<BusLimits> limits;
  double c_p = 1.0, c_q = 1.0;
  SolverOverrides solver;
  double sync_tol = 1e-12;
  long sync_max_iter = 20000;
  AsyncSchedule schedule;
  double async_tol = 1e-10;
  long async_max_ticks = 500000;
  DailyConfig daily;

  int n() const { return static_cast<int>(lines_ohm.size()); }
};

/// Reads a JSON scenario; file paths inside are relative to the config file.
Scenario load_scenario(const std::filesystem::path& config);

NetworkModel scenario_network(const Scenario& sc);
FeasibleRegion scenario_region(const Scenario& sc);
CostModel scenario_cost(const Scenario& sc);
/// Synthesized defaults for the given chi, with any configured overrides
/// applied, then validated.
ValidatedParams scenario_params(const Scenario& sc, const NetworkModel& model, const CostModel& cost, int chi);

DelayLaw parse_delay_law(const std::string& s);
Activation parse_activation(const std::string& s);

// ---- online estimation ----

/// Measured operating point: V_k = U_k^2 / 2 at every bus, and the bus injections.
struct MeasurementFrame {
  Vector V, p, q;
};

MeasurementFrame measure(const NetworkModel& truth, const Vector& p, const Vector& q, MeasurementSource source);

/// Estimate of varpi_a at bus j from its own injections and the voltages of
/// {j} u N_j. Throws MissingMeasurement if a needed entry is absent (NaN).
double estimate_varpi_online(const NetworkModel& model, const MeasurementFrame& frame, int j);
Vector estimate_varpi_online(const NetworkModel& model, const MeasurementFrame& frame);

// ---- daily run ----

enum class DailyMode { Sync, Async };
std::string to_string(DailyMode mode);

DailyProfile synthetic_profile(const Scenario& sc);

struct DailyRow {
  int minute;
  DailyMode mode;
  double voltage_error;  // ||V - V_ref||_2 at the true operating point
  double kkt_residual;
  long steps;            // synchronous steps, or async ticks
};

/// Quasi-static day. Sync mode emulates a barrier: each step waits for the
/// largest delay drawn in that step, so a minute affords fewer steps.
std::vector<DailyRow> run_daily(const Scenario& sc, DailyMode mode, const DailyProfile& profile);

// ---- output ----

std::string sync_trace_csv(const std::vector<SyncTraceRow>& trace);
std::string async_trace_csv(const std::vector<AsyncTraceRow>& trace);
std::string daily_csv(const std::vector<DailyRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace asdvc
