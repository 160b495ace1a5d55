#include <doctest.h>

#include "asdvc/acflow.hpp"
#include "asdvc/error.hpp"
#include "asdvc/scenario.hpp"
#include "oracles.hpp"

#include <cmath>
#include <fstream>

using namespace asdvc;
namespace fs = std::filesystem;

TEST_CASE("eight-bus scenario loads with per-unit conversion") {
  const Scenario sc = oracle::eightbus();
  REQUIRE(sc.n() == 7);
  CHECK(sc.base.base_mva == 100.0);
  CHECK(sc.p_c(4) == doctest::Approx(200.0 / 1e5));
  CHECK(sc.limits[4].p_max == doctest::Approx(170.0 / 1e5));
  CHECK(sc.limits[2].p_max == 0.0);
  CHECK(sc.limits[6].s == doctest::Approx(0.9 * std::hypot(70.0, 120.0) / 1e5));
  const NetworkModel m = scenario_network(sc);
  CHECK(m.K == doctest::Approx(2.0));
  CHECK(m.V0 == doctest::Approx(0.5));
}

TEST_CASE("malformed inputs are rejected") {
  const fs::path dir = fs::temp_directory_path() / "asdvc_scenario_test";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad_feeder.csv") << "from,to,r_ohm,x_ohm\n0,1,0.1\n";
  }
  CHECK_THROWS_AS(read_feeder_csv(dir / "bad_feeder.csv"), Error);
  {
    std::ofstream(dir / "limits.csv") << "bus,p_min,p_max,q_min,q_max,s\n1,-1,1,-1,1,1\n";
  }
  CHECK_THROWS_AS(read_limits_csv(dir / "limits.csv", 2, PerUnitBase{}), Error);
  CHECK_THROWS_AS(read_feeder_csv(dir / "missing.csv"), Error);
  {
    std::ofstream(dir / "ts.csv") << "minute,bus,p_kw,q_kvar,pv_kw\n0,1,1,1,0\n0,2,1,1,0\n1,1,1,1,0\n";
  }
  CHECK_THROWS_AS(read_timeseries_csv(dir / "ts.csv", 2), Error);
  {
    std::ofstream(dir / "ts.csv") << "minute,bus,p_kw,q_kvar,pv_kw\n0,1,1,1,0\n0,2,1,1,5\n1,1,2,1,0\n1,2,1,1,0\n";
  }
  const DailyProfile prof = read_timeseries_csv(dir / "ts.csv", 2);
  CHECK(prof.minutes == 2);
  CHECK(prof.pv_kw(0, 1) == 5.0);
  CHECK(prof.p_kw(1, 0) == 2.0);
  fs::remove_all(dir);
}

TEST_CASE("online estimate equals the constructed varpi_a on linear measurements") {
  const Scenario sc = oracle::eightbus();
  const NetworkModel m = scenario_network(sc);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 1e-3);
  for (int t = 0; t < 20; ++t) {
    Vector p(7), q(7);
    for (int j = 0; j < 7; ++j) {
      p(j) = nd(rng);
      q(j) = nd(rng);
    }
    const MeasurementFrame f = measure(m, p, q, MeasurementSource::Linear);
    CHECK((estimate_varpi_online(m, f) - m.varpi_a).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("root term appears only at buses fed from the substation") {
  const Scenario sc = oracle::eightbus();
  const NetworkModel m = scenario_network(sc);
  const MeasurementFrame f = measure(m, Vector::Zero(7), Vector::Zero(7), MeasurementSource::Linear);
  for (int j = 0; j < 7; ++j) {
    double plain = -m.K * f.p(j) - f.q(j);
    for (int k : m.b_stencil[j]) plain += m.B(j, k) * f.V(k);
    const double shift = plain - estimate_varpi_online(m, f, j);
    if (j == 0)
      CHECK(shift == doctest::Approx(1.0 / (2.0 * m.root_reactance(0))));
    else
      CHECK(shift == 0.0);
  }
}

TEST_CASE("AC measurements bias the estimate by B times the linearization gap") {
  const Scenario sc = oracle::eightbus();
  const NetworkModel m = scenario_network(sc);
  const Vector z = Vector::Zero(7);
  const MeasurementFrame lin = measure(m, z, z, MeasurementSource::Linear);
  const MeasurementFrame ac = measure(m, z, z, MeasurementSource::AC);
  const double gap = (lin.V - ac.V).lpNorm<Eigen::Infinity>();
  const double bias = (estimate_varpi_online(m, ac) - m.varpi_a).lpNorm<Eigen::Infinity>();
  CHECK(bias <= m.B.cwiseAbs().rowwise().sum().maxCoeff() * gap * (1 + 1e-9));
  CHECK(gap / ac.V.minCoeff() <= 2 * 0.02);
  CHECK(bias > 0);
}

TEST_CASE("missing measurement is reported") {
  const Scenario sc = oracle::eightbus();
  const NetworkModel m = scenario_network(sc);
  MeasurementFrame f = measure(m, Vector::Zero(7), Vector::Zero(7), MeasurementSource::Linear);
  f.V(1) = std::nan("");
  try {
    estimate_varpi_online(m, f, 0);
    FAIL("expected MissingMeasurement");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingMeasurement);
  }
  CHECK_NOTHROW(estimate_varpi_online(m, f, 4));  // bus 5 does not read bus 2
}

TEST_CASE("re-estimated varpi_a leads to the same optimum") {
  const Scenario sc = oracle::eightbus();
  const NetworkModel m = scenario_network(sc);
  const FeasibleRegion region = scenario_region(sc);
  const CostModel cost = scenario_cost(sc);
  const SolverParams p = synthesize_params(m, cost, 0);
  SyncOptions o;
  o.tol = 1e-13;
  const Vector w1 = solve_sync(PrimalDualState::zeros(7), p, m, region, cost, o).state.stacked();
  Vector op_p(7), op_q(7);
  op_p.setConstant(3e-4);
  op_q.setConstant(-2e-4);
  const NetworkModel est =
      with_varpi_a(m, estimate_varpi_online(m, measure(m, op_p, op_q, MeasurementSource::Linear)));
  const Vector w2 = solve_sync(PrimalDualState::zeros(7), p, est, region, cost, o).state.stacked();
  CHECK((w1 - w2).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("short daily run: determinism, throttling and a constant profile") {
  Scenario sc = oracle::eightbus();
  sc.daily.minutes = 20;
  const DailyProfile prof = synthetic_profile(sc);
  const auto sync_a = run_daily(sc, DailyMode::Sync, prof);
  const auto async_a = run_daily(sc, DailyMode::Async, prof);
  CHECK(daily_csv(sync_a) == daily_csv(run_daily(sc, DailyMode::Sync, prof)));
  CHECK(daily_csv(async_a) == daily_csv(run_daily(sc, DailyMode::Async, prof)));
  for (std::size_t m = 0; m < sync_a.size(); ++m) {
    // A barrier step costs at least one tick plus the worst delay.
    CHECK(sync_a[m].steps <= sc.daily.iterations_per_step);
    CHECK(sync_a[m].steps * sc.n() <= async_a[m].steps);
  }

  SUBCASE("constant profile settles on the static optimum") {
    DailyProfile flat = prof;
    for (int m = 0; m < flat.minutes; ++m) {
      for (int j = 0; j < 7; ++j) {
        flat.p_kw(m, j) = sc.base.pu_to_kw(sc.p_c(j));
        flat.q_kvar(m, j) = sc.base.pu_to_kw(sc.q_c(j));
        flat.pv_kw(m, j) = sc.base.pu_to_kw(sc.limits[j].p_max);
      }
    }
    const auto rows = run_daily(sc, DailyMode::Async, flat);
    const NetworkModel model = scenario_network(sc);
    const FeasibleRegion region = scenario_region(sc);
    const CostModel cost = scenario_cost(sc);
    SyncOptions o;
    o.tol = 1e-13;
    const PrimalDualState s =
        solve_sync(PrimalDualState::zeros(7), synthesize_params(model, cost, 0), model, region, cost, o).state;
    const double target = (linear_voltage(model, s.p, s.q) - model.V_ref).norm();
    CHECK(rows.back().voltage_error == doctest::Approx(target).epsilon(1e-6));
  }
}
