#include <doctest.h>

#include "asdvc/error.hpp"
#include "asdvc/grid_model.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

using namespace asdvc;

namespace {

NetworkModel eightbus_model() {
  const Scenario sc = oracle::eightbus();
  return scenario_network(sc);
}

}  // namespace

TEST_CASE("single line gives B = 1/x and K = r/x") {
  const NetworkModel m = build_network({{0, 1, 1.0, 0.5}}, Vector::Zero(1), Vector::Zero(1), 0.5, KPolicy::exact());
  CHECK(m.B(0, 0) == doctest::Approx(2.0));
  CHECK(m.X(0, 0) == doctest::Approx(0.5));
  CHECK(m.K == doctest::Approx(2.0));
}

TEST_CASE("eight-bus feeder structure") {
  const NetworkModel m = eightbus_model();
  REQUIRE(m.n == 7);
  CHECK(m.K == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((m.B * m.X - Matrix::Identity(7, 7)).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((m.R - m.K * m.X).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((m.ones_term - Vector::Ones(7)).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((m.B - m.B.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.B);
  CHECK(es.eigenvalues().minCoeff() > 0);
  CHECK(sigma_max(m) == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-10));
  // Only bus 1 touches the substation.
  CHECK(m.root_adjacent(0));
  for (int j = 1; j < 7; ++j) CHECK_FALSE(m.root_adjacent(j));
  // Bus 2 (zero-based 1) neighbours bus 1 and bus 3; its two-hop set is bus 4.
  CHECK(m.neighbors[1] == std::vector<int>{0, 2});
  CHECK(m.two_hop[1] == std::vector<int>{3, 4});
}

TEST_CASE("B equals Laplacian plus root shunt on random trees") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial;
    const auto lines = oracle::random_tree(n, rng, trial % 2 == 0);
    const KPolicy pol = trial % 2 == 0 ? KPolicy::exact() : KPolicy::approximate(1.0);
    const NetworkModel m = build_network(lines, Vector::Zero(n), Vector::Zero(n), 0.5, pol);
    CHECK((m.B - oracle::laplacian_plus_shunt(lines, n)).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((m.B * m.X - Matrix::Identity(n, n)).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((m.ones_term - Vector::Ones(n)).lpNorm<Eigen::Infinity>() < 1e-10);
    if (trial % 2 == 0) CHECK((m.R - m.K * m.X).lpNorm<Eigen::Infinity>() < 1e-9);
    // B^2 only couples buses within two hops.
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (std::abs(m.B2(j, k)) > 1e-12)
          CHECK(std::binary_search(m.stencil[j].begin(), m.stencil[j].end(), k));
  }
}

TEST_CASE("build_network rejects bad feeders") {
  const Vector z1 = Vector::Zero(2);
  CHECK_THROWS_AS(build_network({{0, 1, 1, 1}, {0, 1, 1, 1}}, z1, z1, 0.5, KPolicy::exact()), Error);
  try {
    build_network({{0, 1, 1, 1}, {2, 2, 1, 1}}, z1, z1, 0.5, KPolicy::exact());
    FAIL("expected NotATree");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotATree);
  }
  try {
    build_network({{0, 1, 1, 1}, {1, 2, 2, 1}}, z1, z1, 0.5, KPolicy::exact());
    FAIL("expected NonHomogeneous");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonHomogeneous);
  }
  CHECK_NOTHROW(build_network({{0, 1, 1, 1}, {1, 2, 2, 1}}, z1, z1, 0.5, KPolicy::approximate(1.5)));
  try {
    build_network({{0, 1, 1, 0}, {1, 2, 1, 1}}, z1, z1, 0.5, KPolicy::exact());
    FAIL("expected NonPositiveReactance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveReactance);
  }
  try {
    build_network({{0, 1, 1, 1}}, z1, z1, 0.5, KPolicy::exact());
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("varpi vectors") {
  const NetworkModel m = eightbus_model();
  SUBCASE("B V_ref is 1/(2 x0j) at root buses and zero elsewhere") {
    const Vector bv = m.B * m.V_ref;
    const double x0 = m.lines[m.line_of_bus[1]].x;
    CHECK(bv(0) == doctest::Approx(1.0 / (2.0 * x0)));
    for (int j = 1; j < 7; ++j) CHECK(std::abs(bv(j)) < 1e-12);
  }
  SUBCASE("0.4608 ohm root segment in ohms") {
    const NetworkModel ohm = build_network({{0, 1, 0.9216, 0.4608}}, Vector::Zero(1), Vector::Zero(1), 0.5,
                                           KPolicy::exact());
    CHECK((ohm.B * ohm.V_ref)(0) == doctest::Approx(1.0851).epsilon(1e-4));
  }
  SUBCASE("zero loads and V0 = 0.5 leave varpi_a zero off the root") {
    const Vector z = Vector::Zero(7);
    const auto vp = varpi_vectors(m, z, z);
    for (int j = 1; j < 7; ++j) CHECK(std::abs(vp.varpi_a(j)) < 1e-12);
    CHECK(std::abs(vp.varpi_a(0)) < 1e-12);
  }
  SUBCASE("varpi_s matches B times the no-control voltage") {
    const Vector v = linear_voltage(m, Vector::Zero(7), Vector::Zero(7));
    CHECK((m.B * v - m.varpi_s).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  CHECK_THROWS_AS(varpi_vectors(m, Vector::Zero(3), Vector::Zero(7)), Error);
}

TEST_CASE("linear voltage") {
  const NetworkModel m = eightbus_model();
  SUBCASE("pure load lowers every voltage") {
    const Vector v = linear_voltage(m, Vector::Zero(7), Vector::Zero(7));
    for (int j = 0; j < 7; ++j) CHECK(v(j) < m.V0);
  }
  SUBCASE("injection equal to load gives V0") {
    const Vector v = linear_voltage(m, m.p_c, m.q_c);
    CHECK((v - Vector::Constant(7, m.V0)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("identity B V = K p + q + varpi_s and R = K X form") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1e-3);
    for (int t = 0; t < 20; ++t) {
      Vector p(7), q(7);
      for (int j = 0; j < 7; ++j) {
        p(j) = nd(rng);
        q(j) = nd(rng);
      }
      const Vector v = linear_voltage(m, p, q);
      CHECK((m.B * v - m.K * p - q - m.varpi_s).lpNorm<Eigen::Infinity>() < 1e-10);
      const Vector v0 = linear_voltage(m, Vector::Zero(7), Vector::Zero(7));
      CHECK((v - v0 - m.X * (m.K * p + q)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("per-unit conversion") {
  PerUnitBase base{4.16, 100.0};
  const auto pu = to_per_unit({{0, 1, 0.9216, 0.4608}}, base);
  CHECK(pu[0].x == doctest::Approx(0.4608 / (4.16 * 4.16 / 100.0)));
  CHECK(base.kw_to_pu(170.0) == doctest::Approx(1.7e-3));
  CHECK(base.pu_to_kw(base.kw_to_pu(123.0)) == doctest::Approx(123.0));
}
