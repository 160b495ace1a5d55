#pragma once

#include "asdvc/cost.hpp"
#include "asdvc/feasible_set.hpp"
#include "asdvc/grid_model.hpp"

#include <optional>
#include <vector>

namespace asdvc {

/// Iterate of both solvers. The stacked layout is w = [p; q; lambda].
struct PrimalDualState {
  Vector p, q, lambda;
  Vector V;  // refreshed as V_ref - B lambda
  long t = 0;

  static PrimalDualState zeros(int n);
  static PrimalDualState from_stacked(const Vector& w, const NetworkModel& model);
  Vector stacked() const;
  int size() const { return static_cast<int>(p.size()); }
};

struct SolverParams {
  double alpha_pq = 0.0;
  double alpha_lambda = 0.0;
  double eta = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  double lipschitz_theta = 0.0;
  double sigma_max = 0.0;
  int chi = 0;
  int n = 0;
};

struct ValidatedParams {
  SolverParams params;
  double eta_bound = 0.0;
};

/// Upper bound on the relaxation step for maximum delay chi.
double eta_upper_bound(double kappa, double beta, int chi, int n);

/// Default parameters: beta at its largest admissible value, kappa = 1/beta,
/// equal step sizes 0.9 / (kappa + sqrt(K^2 + 1)) and eta at 90% of its bound.
SolverParams synthesize_params(const NetworkModel& model, const CostModel& cost, int chi);

/// Checks the cocoercivity, kappa, Gamma and relaxation conditions. Throws
/// StepSizeTooLarge naming the violated condition, or GammaNotPositiveDefinite.
ValidatedParams validate_params(const SolverParams& params, const NetworkModel& model);

/// The 3n x 3n step-size matrix [[I/alpha_pq, A^T], [A, I/alpha_lambda]] with A = [K I, I].
Matrix gamma_matrix(const SolverParams& params, const NetworkModel& model);

/// Result of one bus's projected primal-dual update.
struct BusUpdate {
  double p_tilde, q_tilde, lambda_tilde;  // un-relaxed intermediate
  double p, q, lambda;                    // after relaxation
};

/// One bus's update from (possibly delayed) values. `lam_stencil[i]` is the
/// multiplier of bus model.stencil[j][i]; the entry for j itself must be `lambda`.
/// Shared by the synchronous step and the asynchronous engine.
BusUpdate bus_kernel(const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost,
                     const SolverParams& params, int j, double p, double q, double lambda,
                     const double* lam_stencil);

/// V_j = V_ref_j - sum over {j} u N_j of B_jk lambda_k.
double bus_voltage(const NetworkModel& model, int j, const Vector& lambda);
Vector refresh_voltage(const NetworkModel& model, const Vector& lambda);

/// Un-relaxed intermediate (p~, q~, lambda~) at the current iterate.
PrimalDualState sdvc_intermediate(const PrimalDualState& state, const SolverParams& params,
                                  const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost);

/// One synchronous step. Throws Diverged if the iterate blows up.
PrimalDualState sdvc_step(const PrimalDualState& state, const SolverParams& params, const NetworkModel& model,
                          const FeasibleRegion& region, const CostModel& cost);

/// Infinity norm of the fixed-point displacement w~ - w.
double fixed_point_displacement(const PrimalDualState& state, const SolverParams& params,
                                const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost);

/// ||w - w_ref||^2 / ||w_ref||^2.
double relative_error(const Vector& w, const Vector& w_ref);

struct SyncTraceRow {
  long iter;
  double residual;
  double rel_err;  // NaN when no reference is supplied
};

enum class SolveStatus { Converged, MaxIterExceeded, Diverged };

struct SyncOptions {
  double tol = 1e-10;
  long max_iter = 20000;
  std::optional<Vector> w_ref;
};

struct SyncResult {
  PrimalDualState state;
  std::vector<SyncTraceRow> trace;
  SolveStatus status = SolveStatus::MaxIterExceeded;
  long iterations = 0;
  double residual = 0.0;
};

/// Iterates until ||w~ - w||_inf < tol or max_iter steps.
SyncResult solve_sync(const PrimalDualState& state0, const SolverParams& params, const NetworkModel& model,
                      const FeasibleRegion& region, const CostModel& cost, const SyncOptions& opts);

/// First iteration after which rel_err stays below `level` for the rest of
/// the trace; -1 if it never settles.
long iterations_to_level(const std::vector<SyncTraceRow>& trace, double level);

struct KktResidual {
  double stationarity_V = 0.0;
  double stationarity_z = 0.0;
  double primal = 0.0;
  double max() const;
};

KktResidual kkt_residual(const PrimalDualState& state, const NetworkModel& model, const FeasibleRegion& region,
                         const CostModel& cost);

}  // namespace asdvc
