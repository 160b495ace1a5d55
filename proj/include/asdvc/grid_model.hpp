#pragma once

#include <Eigen/Dense>

#include <vector>

namespace asdvc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One feeder segment. Buses are 1..n; bus 0 is the substation.
/// Impedances are per-unit inside the library (see `to_per_unit`).
struct Line {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
};

/// Per-unit base. Powers are divided by `base_mva`, impedances by
/// base_kv^2 / base_mva.
struct PerUnitBase {
  double base_kv = 4.16;
  double base_mva = 1.0;

  double z_base_ohm() const { return base_kv * base_kv / base_mva; }
  double kw_to_pu(double kw) const { return kw / (1000.0 * base_mva); }
  double pu_to_kw(double pu) const { return pu * 1000.0 * base_mva; }
};

/// Converts segment impedances given in ohms to per-unit.
std::vector<Line> to_per_unit(std::vector<Line> lines_ohm, const PerUnitBase& base);

/// How the r/x ratio K is chosen. `exact` requires a homogeneous feeder;
/// `approximate` runs the controller with a supplied K on any feeder.
struct KPolicy {
  enum class Kind { Exact, Approximate };
  Kind kind = Kind::Exact;
  double k0 = 0.0;

  static KPolicy exact() { return {Kind::Exact, 0.0}; }
  static KPolicy approximate(double k) { return {Kind::Approximate, k}; }
};

/// Immutable radial feeder with its LinDistFlow sensitivity matrices.
///
/// Matrices follow the reduced incidence convention: column e of `M` is line
/// e (oriented away from the substation) with +1 at the upstream bus and -1 at
/// the downstream bus; row 0 of the full incidence is `m0`.
struct NetworkModel {
  int n = 0;
  std::vector<Line> lines;  // oriented parent -> child, per-unit
  double V0 = 0.5;          // U0^2 / 2
  Vector p_c, q_c;          // uncontrollable load, per-unit
  double K = 0.0;

  Matrix M;
  Vector m0;
  Matrix X, R, B, B2;
  Vector ones_term;  // -M^{-T} m0, equals 1_n on a tree
  Vector varpi_s, varpi_a;
  Vector V_ref;      // desired profile, 0.5 * 1_n

  // Tree structure (bus indices are 1-based in `parent`; 0 is the root).
  std::vector<int> parent;        // parent[j] for j in 1..n, parent[0] = -1
  std::vector<int> line_of_bus;   // index into `lines` of the segment feeding bus j
  std::vector<std::vector<int>> children;
  // Zero-based stencils over the subtree (bus 0 removed).
  std::vector<std::vector<int>> neighbors;  // N_j
  std::vector<std::vector<int>> two_hop;    // N_j^2 \ ({j} u N_j)
  std::vector<std::vector<int>> stencil;    // sorted {j} u N_j u N_j^2
  std::vector<std::vector<int>> b_stencil;  // sorted {j} u N_j

  /// Reactance of the segment joining bus j (zero-based) to the substation,
  /// or 0 when j is not adjacent to bus 0.
  double root_reactance(int j) const;
  bool root_adjacent(int j) const { return parent[j + 1] == 0; }
};

/// Builds the model. `loads_p`, `loads_q` are per-unit vectors of length n.
NetworkModel build_network(std::vector<Line> lines, const Vector& loads_p, const Vector& loads_q,
                           double V0, KPolicy policy);

struct VarpiPair {
  Vector varpi_s;
  Vector varpi_a;
};

/// Constant terms of B V = K p + q + varpi_s for the given loads.
VarpiPair varpi_vectors(const NetworkModel& model, const Vector& p_c, const Vector& q_c);

/// Copy of `model` with its loads and constant terms replaced.
NetworkModel with_loads(const NetworkModel& model, const Vector& p_c, const Vector& q_c);

/// Copy of `model` with an externally estimated varpi_a (the loads that
/// produced it are unknown to the controller).
NetworkModel with_varpi_a(const NetworkModel& model, const Vector& varpi_a);

/// LinDistFlow voltage V = R p + X q - M^{-T} m0 V0 - R p_c - X q_c.
Vector linear_voltage(const NetworkModel& model, const Vector& p, const Vector& q);

/// Largest eigenvalue of B by power iteration.
double sigma_max(const NetworkModel& model, double tol = 1e-12, int max_iter = 10000);

}  // namespace asdvc
