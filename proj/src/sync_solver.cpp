#include "asdvc/sync_solver.hpp"

#include "asdvc/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace asdvc {

PrimalDualState PrimalDualState::zeros(int n) {
  PrimalDualState s;
  s.p = Vector::Zero(n);
  s.q = Vector::Zero(n);
  s.lambda = Vector::Zero(n);
  s.V = Vector::Constant(n, 0.5);
  return s;
}

PrimalDualState PrimalDualState::from_stacked(const Vector& w, const NetworkModel& model) {
  const int n = model.n;
  require(w.size() == 3 * n, ErrorCode::DimensionMismatch, "w must have length 3n");
  PrimalDualState s;
  s.p = w.segment(0, n);
  s.q = w.segment(n, n);
  s.lambda = w.segment(2 * n, n);
  s.V = refresh_voltage(model, s.lambda);
  return s;
}

Vector PrimalDualState::stacked() const {
  const int n = size();
  Vector w(3 * n);
  w << p, q, lambda;
  return w;
}

double eta_upper_bound(double kappa, double beta, int chi, int n) {
  const double kb = kappa * beta;
  return (4.0 * kb - 1.0) / (2.0 * kb) / (1.0 + 2.0 * chi / std::sqrt(static_cast<double>(n)));
}

SolverParams synthesize_params(const NetworkModel& model, const CostModel& cost, int chi) {
  require(chi >= 0, ErrorCode::InvalidInput, "chi must be nonnegative");
  require(cost.size() == model.n, ErrorCode::DimensionMismatch, "cost has wrong bus count");
  SolverParams sp;
  sp.n = model.n;
  sp.chi = chi;
  sp.sigma_max = sigma_max(model);
  sp.lipschitz_theta = cost.lipschitz();
  const double inv_theta =
      sp.lipschitz_theta > 0 ? 1.0 / sp.lipschitz_theta : std::numeric_limits<double>::infinity();
  sp.beta = std::min(1.0 / (sp.sigma_max * sp.sigma_max), inv_theta);
  sp.kappa = 1.0 / sp.beta;
  const double alpha = 0.9 / (sp.kappa + std::sqrt(model.K * model.K + 1.0));
  sp.alpha_pq = alpha;
  sp.alpha_lambda = alpha;
  sp.eta = 0.9 * eta_upper_bound(sp.kappa, sp.beta, chi, model.n);
  return sp;
}

Matrix gamma_matrix(const SolverParams& params, const NetworkModel& model) {
  const int n = model.n;
  Matrix G = Matrix::Zero(3 * n, 3 * n);
  G.topLeftCorner(2 * n, 2 * n).diagonal().setConstant(1.0 / params.alpha_pq);
  G.bottomRightCorner(n, n).diagonal().setConstant(1.0 / params.alpha_lambda);
  for (int j = 0; j < n; ++j) {
    G(2 * n + j, j) = model.K;
    G(2 * n + j, n + j) = 1.0;
    G(j, 2 * n + j) = model.K;
    G(n + j, 2 * n + j) = 1.0;
  }
  return G;
}

ValidatedParams validate_params(const SolverParams& params, const NetworkModel& model) {
  require(params.n == model.n, ErrorCode::DimensionMismatch, "parameters were built for a different bus count");
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::StepSizeTooLarge, msg); };
  if (!(params.alpha_pq > 0 && params.alpha_lambda > 0)) fail("step sizes alpha_pq, alpha_lambda must be positive");
  if (!(params.beta > 0)) fail("beta must be positive");
  if (params.chi < 0) fail("chi must be nonnegative");

  const double sigma = sigma_max(model);
  double beta_cap = 1.0 / (sigma * sigma);
  if (params.lipschitz_theta > 0) beta_cap = std::min(beta_cap, 1.0 / params.lipschitz_theta);
  if (params.beta > beta_cap * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "beta=" << params.beta << " exceeds min(1/sigma_max^2, 1/theta)=" << beta_cap;
    fail(os.str());
  }
  if (!(params.kappa > 1.0 / (2.0 * params.beta))) {
    std::ostringstream os;
    os << "kappa=" << params.kappa << " must exceed 1/(2 beta)=" << 1.0 / (2.0 * params.beta);
    fail(os.str());
  }

  const Matrix G = gamma_matrix(params, model);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const double gmin = es.eigenvalues().minCoeff();
  if (!(gmin > 0)) {
    std::ostringstream os;
    os << "Gamma has smallest eigenvalue " << gmin;
    throw Error(ErrorCode::GammaNotPositiveDefinite, os.str());
  }
  if (gmin - params.kappa < -1e-10) {
    std::ostringstream os;
    os << "Gamma - kappa I is not positive semidefinite (smallest eigenvalue " << gmin - params.kappa
       << "); reduce alpha_pq/alpha_lambda or kappa";
    fail(os.str());
  }

  ValidatedParams out;
  out.params = params;
  out.eta_bound = eta_upper_bound(params.kappa, params.beta, params.chi, params.n);
  if (!(params.eta > 0 && params.eta < out.eta_bound)) {
    std::ostringstream os;
    os << "eta=" << params.eta << " violates the delay-dependent convergence bound 0 < eta < " << out.eta_bound
       << " (chi=" << params.chi << ", n=" << params.n << ", kappa*beta=" << params.kappa * params.beta << ")";
    fail(os.str());
  }
  return out;
}

BusUpdate bus_kernel(const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost,
                     const SolverParams& params, int j, double p, double q, double lambda,
                     const double* lam_stencil) {
  const double K = model.K;
  const double a = params.alpha_pq;
  const Point2 zt = project(region.bus(j), {p - a * (cost.grad_p(j, p) - K * lambda),
                                            q - a * (cost.grad_q(j, q) - lambda)});
  const auto& st = model.stencil[j];
  double b2 = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) b2 += model.B2(j, st[i]) * lam_stencil[i];
  const double lt = lambda + params.alpha_lambda * (-b2 - 2.0 * (K * zt[0] + zt[1]) + (K * p + q) -
                                                    model.varpi_a(j));
  const double eta = params.eta;
  return {zt[0], zt[1], lt, p + eta * (zt[0] - p), q + eta * (zt[1] - q), lambda + eta * (lt - lambda)};
}

double bus_voltage(const NetworkModel& model, int j, const Vector& lambda) {
  double s = 0.0;
  for (int k : model.b_stencil[j]) s += model.B(j, k) * lambda(k);
  return model.V_ref(j) - s;
}

Vector refresh_voltage(const NetworkModel& model, const Vector& lambda) {
  Vector V(model.n);
  for (int j = 0; j < model.n; ++j) V(j) = bus_voltage(model, j, lambda);
  return V;
}

namespace {

// Runs the kernel at every bus against the same snapshot; fills both the
// intermediate and the relaxed iterate.
void sweep(const PrimalDualState& s, const SolverParams& params, const NetworkModel& model,
           const FeasibleRegion& region, const CostModel& cost, PrimalDualState* tilde, PrimalDualState* next) {
  const int n = model.n;
  require(s.size() == n && region.size() == n && cost.size() == n, ErrorCode::DimensionMismatch,
          "state, region and cost must match the network");
  std::vector<double> buf;
  for (PrimalDualState* out : {tilde, next}) {
    if (!out) continue;
    out->p.resize(n);
    out->q.resize(n);
    out->lambda.resize(n);
  }
  for (int j = 0; j < n; ++j) {
    const auto& st = model.stencil[j];
    buf.resize(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) buf[i] = s.lambda(st[i]);
    const BusUpdate u = bus_kernel(model, region, cost, params, j, s.p(j), s.q(j), s.lambda(j), buf.data());
    if (tilde) {
      tilde->p(j) = u.p_tilde;
      tilde->q(j) = u.q_tilde;
      tilde->lambda(j) = u.lambda_tilde;
    }
    if (next) {
      next->p(j) = u.p;
      next->q(j) = u.q;
      next->lambda(j) = u.lambda;
    }
  }
  if (tilde) {
    tilde->V = refresh_voltage(model, tilde->lambda);
    tilde->t = s.t;
  }
  if (next) {
    next->V = refresh_voltage(model, next->lambda);
    next->t = s.t + 1;
  }
}

double inf_norm_diff(const PrimalDualState& a, const PrimalDualState& b) {
  return std::max({(a.p - b.p).lpNorm<Eigen::Infinity>(), (a.q - b.q).lpNorm<Eigen::Infinity>(),
                   (a.lambda - b.lambda).lpNorm<Eigen::Infinity>()});
}

constexpr double kDivergence = 1e12;

}  // namespace

PrimalDualState sdvc_intermediate(const PrimalDualState& state, const SolverParams& params,
                                  const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost) {
  PrimalDualState tilde;
  sweep(state, params, model, region, cost, &tilde, nullptr);
  return tilde;
}

PrimalDualState sdvc_step(const PrimalDualState& state, const SolverParams& params, const NetworkModel& model,
                          const FeasibleRegion& region, const CostModel& cost) {
  PrimalDualState next;
  sweep(state, params, model, region, cost, nullptr, &next);
  const double norm = next.stacked().norm();
  if (!(norm <= kDivergence)) throw Error(ErrorCode::Diverged, "iterate norm exceeded 1e12");
  return next;
}

double fixed_point_displacement(const PrimalDualState& state, const SolverParams& params,
                                const NetworkModel& model, const FeasibleRegion& region, const CostModel& cost) {
  return inf_norm_diff(sdvc_intermediate(state, params, model, region, cost), state);
}

double relative_error(const Vector& w, const Vector& w_ref) {
  return (w - w_ref).squaredNorm() / w_ref.squaredNorm();
}

SyncResult solve_sync(const PrimalDualState& state0, const SolverParams& params, const NetworkModel& model,
                      const FeasibleRegion& region, const CostModel& cost, const SyncOptions& opts) {
  require(opts.tol > 0, ErrorCode::InvalidInput, "tol must be positive");
  SyncResult res;
  PrimalDualState s = state0;
  s.V = refresh_voltage(model, s.lambda);
  for (long it = 0; it < opts.max_iter; ++it) {
    PrimalDualState tilde, next;
    sweep(s, params, model, region, cost, &tilde, &next);
    const double r = inf_norm_diff(tilde, s);
    if (!(next.stacked().norm() <= kDivergence) || !std::isfinite(r)) {
      res.status = SolveStatus::Diverged;
      res.state = s;
      res.iterations = it;
      res.residual = r;
      return res;
    }
    s = std::move(next);
    const double rel = opts.w_ref ? relative_error(s.stacked(), *opts.w_ref) : std::nan("");
    res.trace.push_back({it + 1, r, rel});
    res.residual = r;
    res.iterations = it + 1;
    if (r < opts.tol) {
      res.status = SolveStatus::Converged;
      break;
    }
  }
  res.state = s;
  return res;
}

long iterations_to_level(const std::vector<SyncTraceRow>& trace, double level) {
  long last_above = 0;
  bool settled = false;
  for (const auto& row : trace) {
    if (!(row.rel_err < level)) {
      last_above = row.iter;
      settled = false;
    } else {
      settled = true;
    }
  }
  return settled ? last_above + 1 : -1;
}

double KktResidual::max() const { return std::max({stationarity_V, stationarity_z, primal}); }

KktResidual kkt_residual(const PrimalDualState& state, const NetworkModel& model, const FeasibleRegion& region,
                         const CostModel& cost) {
  const int n = model.n;
  require(state.size() == n && state.V.size() == n, ErrorCode::DimensionMismatch, "state has wrong size");
  KktResidual r;
  r.stationarity_V = ((state.V - model.V_ref) + model.B.transpose() * state.lambda).lpNorm<Eigen::Infinity>();
  Vector z(2 * n);
  z << state.p, state.q;
  Vector dual(2 * n);
  dual << model.K * state.lambda, state.lambda;
  const Vector step = z - (cost.gradient(z) - dual);
  r.stationarity_z = (z - project_all(region, step)).lpNorm<Eigen::Infinity>();
  r.primal = (model.B * state.V - model.K * state.p - state.q - model.varpi_s).lpNorm<Eigen::Infinity>();
  return r;
}

}  // namespace asdvc
