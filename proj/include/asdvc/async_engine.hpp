#pragma once

#include "asdvc/sync_solver.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace asdvc {

enum class DelayLaw { Fixed, Uniform, AdversarialMax };
enum class Activation { Uniform, RoundRobin, Simultaneous };
enum class NeighborDelay { Independent, Shared };
enum class TwoHopMode { Direct, Relayed };

/// Who wakes up and how stale each read is. Delays are counted in global ticks.
struct AsyncSchedule {
  std::uint64_t seed = 1;
  int chi = 0;
  DelayLaw delay_law = DelayLaw::Uniform;
  int fixed_delay = 0;  // used by DelayLaw::Fixed, must be <= chi
  Activation activation = Activation::Uniform;
  NeighborDelay neighbor_delay = NeighborDelay::Independent;
  TwoHopMode two_hop = TwoHopMode::Direct;
};

/// One published value of a bus, visible to reads at ticks >= stamp.
struct CacheEntry {
  long stamp;
  double p, q, lambda;
};

struct BusWorkerState {
  long t_local = 0;
  std::vector<CacheEntry> cache;  // oldest first, at most chi + 1 entries beyond the seed value
  std::vector<double> view;       // last-read multipliers, aligned with model.stencil[j]
  double V = 0.5;

  const CacheEntry& latest() const { return cache.back(); }
};

/// Delays drawn for one activation. `tau_stencil` is aligned with model.stencil[j];
/// its entry for j itself equals tau_self.
struct DelayDraw {
  int tau_self = 0;
  std::vector<int> tau_stencil;
  int self_index = -1;
  int max_neighbor() const;  // excludes the self entry
};

struct DelayedView {
  double p, q, lambda;
  std::vector<double> lam_stencil;
};

struct AsyncSim {
  const NetworkModel* model = nullptr;
  const FeasibleRegion* region = nullptr;
  const CostModel* cost = nullptr;
  SolverParams params;
  AsyncSchedule schedule;
  std::mt19937_64 rng;
  std::vector<BusWorkerState> buses;
  long global_t = 0;
};

/// Seeds every cache with `state0`. The referenced model, region and cost must outlive the sim.
AsyncSim make_async_sim(const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost,
                        const SolverParams& params, const AsyncSchedule& schedule, const PrimalDualState& state0);

/// Latest published state of every bus.
PrimalDualState current_state(const AsyncSim& sim);

/// Projects every bus's latest published (p, q) onto the current region, as an
/// inverter does when its limits shrink. Older cache entries are left alone.
void clip_published(AsyncSim& sim);
/// Value of bus k visible at tick `at`: the newest entry with stamp <= at.
const CacheEntry& read_cache(const AsyncSim& sim, int k, long at);

/// Draws the delays for activating bus j at the current tick.
DelayDraw draw_delays(AsyncSim& sim, int j);

/// Reads bus j's own delayed state and its stencil multipliers.
DelayedView delayed_view(const AsyncSim& sim, int j, const DelayDraw& delays);

struct TickInfo {
  int bus = -1;  // -1 for a simultaneous batch
  int tau_self = 0;
  int max_tau_neighbors = 0;
};

/// One global tick: activate, read, compute, write.
TickInfo asdvc_tick(AsyncSim& sim);

struct AsyncTraceRow {
  long tick;
  int bus;
  int tau_self;
  int max_tau_neighbors;
  double residual;
  double rel_err;
};

struct StopRule {
  double tol = 1e-10;          // on the synchronous fixed-point displacement of the published state
  long max_ticks = 1000000;
  std::optional<double> rel_err_tol;  // stop early once rel_err drops below this
  std::optional<Vector> w_ref;
  double level = 1e-4;  // rel_err level for AsyncResult::ticks_to_level
  bool record_trace = true;
};

struct AsyncResult {
  PrimalDualState state;
  std::vector<AsyncTraceRow> trace;
  SolveStatus status = SolveStatus::MaxIterExceeded;
  long ticks = 0;
  double residual = 0.0;
  double rel_err = 0.0;
  long ticks_to_level = -1;  // see ticks_to_level()
};

AsyncResult run_async(AsyncSim& sim, const StopRule& rule);

/// First tick after which rel_err stays below `level`; -1 if it never settles.
long ticks_to_level(const std::vector<AsyncTraceRow>& trace, double level);

}  // namespace asdvc
