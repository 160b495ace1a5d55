#include "asdvc/async_engine.hpp"

#include "asdvc/error.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <string>

namespace asdvc {

int DelayDraw::max_neighbor() const {
  int m = 0;
  for (std::size_t i = 0; i < tau_stencil.size(); ++i)
    if (static_cast<int>(i) != self_index) m = std::max(m, tau_stencil[i]);
  return m;
}

AsyncSim make_async_sim(const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost,
                        const SolverParams& params, const AsyncSchedule& schedule, const PrimalDualState& state0) {
  const int n = model.n;
  require(region.size() == n && cost.size() == n && state0.size() == n, ErrorCode::DimensionMismatch,
          "region, cost and initial state must match the network");
  require(schedule.chi >= 0, ErrorCode::InvalidInput, "chi must be nonnegative");
  require(schedule.delay_law != DelayLaw::Fixed || (schedule.fixed_delay >= 0 && schedule.fixed_delay <= schedule.chi),
          ErrorCode::InvalidInput, "fixed delay must lie in [0, chi]");
  AsyncSim sim;
  sim.model = &model;
  sim.region = &region;
  sim.cost = &cost;
  sim.params = params;
  sim.schedule = schedule;
  sim.rng.seed(schedule.seed);
  sim.buses.resize(n);
  for (int j = 0; j < n; ++j) {
    auto& b = sim.buses[j];
    b.cache.push_back({LONG_MIN, state0.p(j), state0.q(j), state0.lambda(j)});
    b.view.resize(model.stencil[j].size());
    for (std::size_t i = 0; i < b.view.size(); ++i) b.view[i] = state0.lambda(model.stencil[j][i]);
    b.V = bus_voltage(model, j, state0.lambda);
  }
  return sim;
}

PrimalDualState current_state(const AsyncSim& sim) {
  const int n = sim.model->n;
  PrimalDualState s;
  s.p.resize(n);
  s.q.resize(n);
  s.lambda.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto& e = sim.buses[j].latest();
    s.p(j) = e.p;
    s.q(j) = e.q;
    s.lambda(j) = e.lambda;
  }
  s.V = refresh_voltage(*sim.model, s.lambda);
  s.t = sim.global_t;
  return s;
}

void clip_published(AsyncSim& sim) {
  for (int j = 0; j < sim.model->n; ++j) {
    auto& e = sim.buses[j].cache.back();
    const Point2 z = project(*sim.region, j, {e.p, e.q});
    e.p = z[0];
    e.q = z[1];
  }
}

const CacheEntry& read_cache(const AsyncSim& sim, int k, long at) {
  const auto& cache = sim.buses[k].cache;
  for (auto it = cache.rbegin(); it != cache.rend(); ++it)
    if (it->stamp <= at) return *it;
  // Older than anything retained: clamp to the oldest entry.
  return cache.front();
}

namespace {

int draw_one(AsyncSim& sim) {
  const auto& sch = sim.schedule;
  int tau = 0;
  switch (sch.delay_law) {
    case DelayLaw::Fixed: tau = sch.fixed_delay; break;
    case DelayLaw::AdversarialMax: tau = sch.chi; break;
    case DelayLaw::Uniform:
      tau = sch.chi == 0 ? 0 : std::uniform_int_distribution<int>(0, sch.chi)(sim.rng);
      break;
  }
  if (tau < 0 || tau > sch.chi)
    throw Error(ErrorCode::StaleBeyondChi, "drawn delay " + std::to_string(tau) + " exceeds chi");
  return tau;
}

// Common neighbour of j and a two-hop bus k (unique on a tree).
int relay_of(const NetworkModel& m, int j, int k) {
  for (int a : m.neighbors[j])
    if (std::binary_search(m.neighbors[a].begin(), m.neighbors[a].end(), k)) return a;
  return -1;
}

void write(AsyncSim& sim, int j, const BusUpdate& u, const DelayedView& view) {
  auto& b = sim.buses[j];
  b.cache.push_back({sim.global_t + 1, u.p, u.q, u.lambda});
  const std::size_t keep = static_cast<std::size_t>(sim.schedule.chi) + 2;
  if (b.cache.size() > keep) b.cache.erase(b.cache.begin(), b.cache.end() - keep);
  b.view = view.lam_stencil;
  const auto& m = *sim.model;
  const auto& st = m.stencil[j];
  double s = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const int k = st[i];
    if (k == j)
      s += m.B(j, k) * u.lambda;
    else if (m.B(j, k) != 0.0)
      s += m.B(j, k) * view.lam_stencil[i];
  }
  b.V = m.V_ref(j) - s;
  ++b.t_local;
}

}  // namespace

DelayDraw draw_delays(AsyncSim& sim, int j) {
  const auto& st = sim.model->stencil[j];
  DelayDraw d;
  d.tau_self = draw_one(sim);
  d.tau_stencil.resize(st.size());
  const bool shared = sim.schedule.neighbor_delay == NeighborDelay::Shared;
  int shared_tau = -1;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i] == j) {
      d.self_index = static_cast<int>(i);
      d.tau_stencil[i] = d.tau_self;
    } else if (shared) {
      if (shared_tau < 0) shared_tau = draw_one(sim);
      d.tau_stencil[i] = shared_tau;
    } else {
      d.tau_stencil[i] = draw_one(sim);
    }
  }
  return d;
}

DelayedView delayed_view(const AsyncSim& sim, int j, const DelayDraw& delays) {
  const auto& m = *sim.model;
  const auto& st = m.stencil[j];
  require(delays.tau_stencil.size() == st.size(), ErrorCode::DimensionMismatch, "delay draw does not fit stencil");
  const long t = sim.global_t;
  const CacheEntry& own = read_cache(sim, j, t - delays.tau_self);
  DelayedView v{own.p, own.q, own.lambda, std::vector<double>(st.size())};
  const bool relayed = sim.schedule.two_hop == TwoHopMode::Relayed;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const int k = st[i];
    const int tau = delays.tau_stencil[i];
    if (tau > sim.schedule.chi) throw Error(ErrorCode::StaleBeyondChi, "read older than chi requested");
    if (k == j) {
      v.lam_stencil[i] = own.lambda;
    } else if (relayed && !std::binary_search(m.neighbors[j].begin(), m.neighbors[j].end(), k)) {
      // The relay forwards what it read from k; the merged delay splits into
      // the relay's read delay plus the forwarding delay.
      require(relay_of(m, j, k) >= 0, ErrorCode::NotATree, "two-hop bus without a relay");
      const int forward = tau / 2;
      const int relay_read = tau - forward;
      v.lam_stencil[i] = read_cache(sim, k, (t - forward) - relay_read).lambda;
    } else {
      v.lam_stencil[i] = read_cache(sim, k, t - tau).lambda;
    }
  }
  return v;
}

TickInfo asdvc_tick(AsyncSim& sim) {
  const auto& m = *sim.model;
  const int n = m.n;
  TickInfo info;
  if (sim.schedule.activation == Activation::Simultaneous) {
    std::vector<BusUpdate> ups(n);
    std::vector<DelayedView> views(n);
    for (int j = 0; j < n; ++j) {
      const DelayDraw d = draw_delays(sim, j);
      info.tau_self = std::max(info.tau_self, d.tau_self);
      info.max_tau_neighbors = std::max(info.max_tau_neighbors, d.max_neighbor());
      views[j] = delayed_view(sim, j, d);
      ups[j] = bus_kernel(m, *sim.region, *sim.cost, sim.params, j, views[j].p, views[j].q, views[j].lambda,
                          views[j].lam_stencil.data());
    }
    for (int j = 0; j < n; ++j) write(sim, j, ups[j], views[j]);
    ++sim.global_t;
    return info;
  }

  int j = 0;
  if (sim.schedule.activation == Activation::RoundRobin)
    j = static_cast<int>(sim.global_t % n);
  else
    j = std::uniform_int_distribution<int>(0, n - 1)(sim.rng);
  const DelayDraw d = draw_delays(sim, j);
  const DelayedView v = delayed_view(sim, j, d);
  const BusUpdate u = bus_kernel(m, *sim.region, *sim.cost, sim.params, j, v.p, v.q, v.lambda, v.lam_stencil.data());
  write(sim, j, u, v);
  ++sim.global_t;
  info.bus = j;
  info.tau_self = d.tau_self;
  info.max_tau_neighbors = d.max_neighbor();
  return info;
}

AsyncResult run_async(AsyncSim& sim, const StopRule& rule) {
  AsyncResult res;
  const bool need_residual = rule.record_trace || rule.tol > 0 || rule.rel_err_tol.has_value();
  long last_above = 0;
  bool settled = false;
  for (long k = 0; k < rule.max_ticks; ++k) {
    const TickInfo info = asdvc_tick(sim);
    res.ticks = k + 1;
    if (!need_residual) continue;
    const PrimalDualState s = current_state(sim);
    const double r = fixed_point_displacement(s, sim.params, *sim.model, *sim.region, *sim.cost);
    const double rel = rule.w_ref ? relative_error(s.stacked(), *rule.w_ref) : std::nan("");
    res.residual = r;
    res.rel_err = rel;
    if (rule.record_trace) res.trace.push_back({sim.global_t, info.bus, info.tau_self, info.max_tau_neighbors, r, rel});
    if (!std::isfinite(r) || s.stacked().norm() > 1e12) {
      res.status = SolveStatus::Diverged;
      break;
    }
    if (rule.w_ref) {
      if (!(rel < rule.level)) {
        last_above = sim.global_t;
        settled = false;
      } else {
        settled = true;
      }
    }
    if (r < rule.tol || (rule.rel_err_tol && rel < *rule.rel_err_tol)) {
      res.status = SolveStatus::Converged;
      break;
    }
  }
  res.state = current_state(sim);
  if (!need_residual)
    res.residual = fixed_point_displacement(res.state, sim.params, *sim.model, *sim.region, *sim.cost);
  res.ticks_to_level = settled ? last_above + 1 : -1;
  return res;
}

long ticks_to_level(const std::vector<AsyncTraceRow>& trace, double level) {
  long last_above = 0;
  bool settled = false;
  for (const auto& row : trace) {
    if (!(row.rel_err < level)) {
      last_above = row.tick;
      settled = false;
    } else {
      settled = true;
    }
  }
  return settled ? last_above + 1 : -1;
}

}  // namespace asdvc
