#include "asdvc/acflow.hpp"

#include "asdvc/error.hpp"

#include <cmath>
#include <sstream>

namespace asdvc {

namespace {

// Buses in breadth-first order from the root (1-based, root excluded).
std::vector<int> bfs_order(const NetworkModel& m) {
  std::vector<int> order;
  order.reserve(m.n);
  std::vector<int> frontier{0};
  for (std::size_t i = 0; i < frontier.size(); ++i)
    for (int c : m.children[frontier[i]]) frontier.push_back(c);
  order.assign(frontier.begin() + 1, frontier.end());
  return order;
}

}  // namespace

ACSolution try_solve_ac(const NetworkModel& model, const Vector& p, const Vector& q, const ACOptions& opts) {
  const int n = model.n;
  require(p.size() == n && q.size() == n, ErrorCode::DimensionMismatch, "p and q must have one entry per bus");
  const double U0 = std::sqrt(2.0 * model.V0);
  const std::vector<int> order = bfs_order(model);
  const Vector net_p = p - model.p_c, net_q = q - model.q_c;

  // Index 0 is the substation; U[b] for bus b.
  Vector U = Vector::Constant(n + 1, U0);
  Vector Pr = Vector::Zero(n + 1), Qr = Vector::Zero(n + 1);  // receiving end of the line into b
  Vector Ps = Vector::Zero(n + 1), Qs = Vector::Zero(n + 1);  // sending end
  ACSolution sol;
  double change = 0.0;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int b = *it;
      double P = -net_p(b - 1), Q = -net_q(b - 1);
      for (int c : model.children[b]) {
        P += Ps(c);
        Q += Qs(c);
      }
      const auto& l = model.lines[model.line_of_bus[b]];
      const double loss = (P * P + Q * Q) / (U(b) * U(b));
      Pr(b) = P;
      Qr(b) = Q;
      Ps(b) = P + l.r * loss;
      Qs(b) = Q + l.x * loss;
    }
    change = 0.0;
    for (int b : order) {
      const int a = model.parent[b];
      const auto& l = model.lines[model.line_of_bus[b]];
      const double Ua2 = U(a) * U(a);
      const double u2 = Ua2 - 2.0 * (l.r * Ps(b) + l.x * Qs(b)) +
                        (l.r * l.r + l.x * l.x) * (Ps(b) * Ps(b) + Qs(b) * Qs(b)) / Ua2;
      if (!(u2 > 0.0)) {
        sol.iterations = sweep;
        sol.converged = false;
        sol.U = U.tail(n);
        return sol;
      }
      const double u = std::sqrt(u2);
      change = std::max(change, std::abs(u - U(b)));
      U(b) = u;
    }
    sol.iterations = sweep;
    if (change < opts.tol) {
      sol.converged = true;
      break;
    }
  }

  // Nodal balance at the final voltages: receiving-end flow plus injection
  // must equal the sending-end flows to the children. The squared current seen
  // from the two ends of a line must also agree; the forward update alone has
  // spurious fixed points under infeasible loading.
  double worst = 0.0;
  for (int b : order) {
    const auto& l = model.lines[model.line_of_bus[b]];
    const double loss = (Pr(b) * Pr(b) + Qr(b) * Qr(b)) / (U(b) * U(b));
    const double Ua = U(model.parent[b]);
    const double loss_sending = (Ps(b) * Ps(b) + Qs(b) * Qs(b)) / (Ua * Ua);
    worst = std::max(worst, std::abs(loss - loss_sending) * std::max(l.r, l.x));
    const double pin = Ps(b) - l.r * loss, qin = Qs(b) - l.x * loss;
    double pout = 0.0, qout = 0.0;
    for (int c : model.children[b]) {
      pout += Ps(c);
      qout += Qs(c);
    }
    worst = std::max({worst, std::abs(pin + net_p(b - 1) - pout), std::abs(qin + net_q(b - 1) - qout)});
  }
  sol.balance_residual = worst;
  sol.converged = sol.converged && worst < 1e-8;
  sol.U = U.tail(n);
  sol.P = Ps.tail(n);
  sol.Q = Qs.tail(n);
  return sol;
}

ACSolution solve_ac(const NetworkModel& model, const Vector& p, const Vector& q, const ACOptions& opts) {
  ACSolution sol = try_solve_ac(model, p, q, opts);
  if (!sol.converged) {
    std::ostringstream os;
    os << "sweep did not converge in " << sol.iterations << " iterations";
    throw Error(ErrorCode::NotConverged, os.str());
  }
  return sol;
}

double linearization_error(const NetworkModel& model, const Vector& p, const Vector& q) {
  const ACSolution ac = solve_ac(model, p, q);
  const Vector V = linear_voltage(model, p, q);
  double worst = 0.0;
  for (int j = 0; j < model.n; ++j) {
    require(V(j) > 0.0, ErrorCode::NotConverged, "linear model predicts a nonpositive voltage");
    worst = std::max(worst, std::abs(std::sqrt(2.0 * V(j)) - ac.U(j)) / ac.U(j));
  }
  return worst;
}

}  // namespace asdvc
