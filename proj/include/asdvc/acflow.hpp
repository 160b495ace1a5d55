#pragma once

#include "asdvc/grid_model.hpp"

namespace asdvc {

/// Nonlinear branch-flow solution on a radial feeder.
struct ACSolution {
  Vector U;          // per-bus voltage magnitude, p.u., zero-based buses 1..n
  Vector P, Q;       // flow at the sending end of the line feeding each bus
  bool converged = false;
  int iterations = 0;
  double balance_residual = 0.0;  // worst nodal power mismatch, p.u.
};

struct ACOptions {
  double tol = 1e-10;
  int max_sweeps = 200;
};

/// Backward/forward sweep with line losses, flat start at U0 = sqrt(2 V0).
/// p, q are controllable injections; the model's loads are subtracted.
/// Throws NotConverged if the sweep fails (the message carries the last change).
ACSolution solve_ac(const NetworkModel& model, const Vector& p, const Vector& q, const ACOptions& opts = {});

/// Same as solve_ac but returns the last iterate with converged = false instead of throwing.
ACSolution try_solve_ac(const NetworkModel& model, const Vector& p, const Vector& q, const ACOptions& opts = {});

/// max_j |U_lin - U_ac| / U_ac with U_lin = sqrt(2 V_lin).
double linearization_error(const NetworkModel& model, const Vector& p, const Vector& q);

}  // namespace asdvc
