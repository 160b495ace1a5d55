#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace oracle {

asdvc::Point2 dykstra(const asdvc::BusLimits& lim, asdvc::Point2 x, double tol, int max_iter) {
  auto box = [&](asdvc::Point2 v) -> asdvc::Point2 {
    return {std::clamp(v[0], lim.p_min, lim.p_max), std::clamp(v[1], lim.q_min, lim.q_max)};
  };
  auto disk = [&](asdvc::Point2 v) -> asdvc::Point2 {
    const double r = std::hypot(v[0], v[1]);
    if (r <= lim.s) return v;
    return {v[0] * lim.s / r, v[1] * lim.s / r};
  };
  asdvc::Point2 y = x, p{0, 0}, q{0, 0};
  for (int it = 0; it < max_iter; ++it) {
    const asdvc::Point2 a = box({y[0] + p[0], y[1] + p[1]});
    p = {y[0] + p[0] - a[0], y[1] + p[1] - a[1]};
    const asdvc::Point2 b = disk({a[0] + q[0], a[1] + q[1]});
    q = {a[0] + q[0] - b[0], a[1] + q[1] - b[1]};
    const double change = std::hypot(b[0] - y[0], b[1] - y[1]);
    y = b;
    if (change < tol && std::hypot(a[0] - b[0], a[1] - b[1]) < tol) break;
  }
  return y;
}

asdvc::BusLimits random_limits(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 1.5);
  for (;;) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    asdvc::BusLimits lim{std::min(a, b), std::max(a, b), std::min(c, d), std::max(c, d), pos(rng)};
    const double p0 = std::clamp(0.0, lim.p_min, lim.p_max), q0 = std::clamp(0.0, lim.q_min, lim.q_max);
    if (p0 * p0 + q0 * q0 <= lim.s * lim.s) return lim;
  }
}

std::vector<asdvc::Line> random_tree(int n, std::mt19937_64& rng, bool homogeneous) {
  std::uniform_real_distribution<double> xs(0.05, 2.0), ks(0.3, 3.0);
  const double k = ks(rng);
  std::vector<asdvc::Line> lines;
  for (int j = 1; j <= n; ++j) {
    const int parent = std::uniform_int_distribution<int>(0, j - 1)(rng);
    const double x = xs(rng);
    const double r = (homogeneous ? k : ks(rng)) * x;
    // Alternate orientation so the builder has to re-orient.
    if (j % 2)
      lines.push_back({parent, j, r, x});
    else
      lines.push_back({j, parent, r, x});
  }
  std::shuffle(lines.begin(), lines.end(), rng);
  return lines;
}

Matrix laplacian_plus_shunt(const std::vector<asdvc::Line>& lines, int n) {
  Matrix B = Matrix::Zero(n, n);
  for (const auto& l : lines) {
    const double w = 1.0 / l.x;
    const int a = l.from, b = l.to;
    if (a > 0 && b > 0) {
      B(a - 1, a - 1) += w;
      B(b - 1, b - 1) += w;
      B(a - 1, b - 1) -= w;
      B(b - 1, a - 1) -= w;
    } else {
      const int other = a == 0 ? b : a;
      B(other - 1, other - 1) += w;
    }
  }
  return B;
}

Vector reduced_primal_optimum(const asdvc::NetworkModel& model, const asdvc::FeasibleRegion& region,
                              const asdvc::CostModel& cost, int max_iter) {
  const int n = model.n;
  // V(z) = H z + c with H = [K X, X].
  Matrix H(n, 2 * n);
  H << model.K * model.X, model.X;
  const Vector c = model.ones_term * model.V0 - model.R * model.p_c - model.X * model.q_c;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H.transpose() * H, Eigen::EigenvaluesOnly);
  const double L = es.eigenvalues().maxCoeff() + cost.lipschitz();
  auto grad = [&](const Vector& z) -> Vector {
    return H.transpose() * (H * z + c - model.V_ref) + cost.gradient(z);
  };
  Vector z = Vector::Zero(2 * n), y = z, z_prev = z;
  double t = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    z = asdvc::project_all(region, y - grad(y) / L);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Adaptive restart keeps the momentum from overshooting near the optimum.
    if ((y - z).dot(z - z_prev) > 0) {
      t = 1.0;
      y = z;
    } else {
      y = z + ((t - 1.0) / t_next) * (z - z_prev);
      t = t_next;
    }
    const double change = (z - z_prev).lpNorm<Eigen::Infinity>();
    z_prev = z;
    if (it > 10 && change < 1e-17) break;
  }
  const Vector V = H * z + c;
  Vector w(3 * n);
  w << z, model.X * (model.V_ref - V);
  return w;
}

double two_bus_voltage(double r, double x, double U0, double P, double Q) {
  // U1^4 - (U0^2 - 2(rP + xQ)) U1^2 + (r^2 + x^2)(P^2 + Q^2) = 0, larger root.
  const double b = U0 * U0 - 2.0 * (r * P + x * Q);
  const double disc = b * b - 4.0 * (r * r + x * x) * (P * P + Q * Q);
  return std::sqrt(0.5 * (b + std::sqrt(disc)));
}

asdvc::Scenario eightbus() { return asdvc::load_scenario(std::string(ASDVC_DATA_DIR) + "/eightbus/eightbus.json"); }

}  // namespace oracle
