#include "asdvc/grid_model.hpp"

#include "asdvc/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

namespace asdvc {

std::vector<Line> to_per_unit(std::vector<Line> lines_ohm, const PerUnitBase& base) {
  require(base.base_kv > 0 && base.base_mva > 0, ErrorCode::InvalidInput, "per-unit base must be positive");
  const double zb = base.z_base_ohm();
  for (auto& l : lines_ohm) {
    l.r /= zb;
    l.x /= zb;
  }
  return lines_ohm;
}

double NetworkModel::root_reactance(int j) const {
  if (!root_adjacent(j)) return 0.0;
  return lines[line_of_bus[j + 1]].x;
}

namespace {

// Orients every line away from bus 0 and fills the tree bookkeeping.
void orient_tree(NetworkModel& m) {
  const int n = m.n;
  std::vector<std::vector<std::pair<int, int>>> adj(n + 1);  // (other bus, line)
  for (int e = 0; e < n; ++e) {
    const auto& l = m.lines[e];
    require(l.from >= 0 && l.from <= n && l.to >= 0 && l.to <= n, ErrorCode::NotATree,
            "line " + std::to_string(e) + " references a bus outside 0.." + std::to_string(n));
    require(l.from != l.to, ErrorCode::NotATree, "self loop at bus " + std::to_string(l.from));
    adj[l.from].push_back({l.to, e});
    adj[l.to].push_back({l.from, e});
  }
  m.parent.assign(n + 1, -2);
  m.line_of_bus.assign(n + 1, -1);
  m.children.assign(n + 1, {});
  m.parent[0] = -1;
  std::queue<int> bfs;
  bfs.push(0);
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (auto [v, e] : adj[u]) {
      if (e == m.line_of_bus[u]) continue;
      require(m.parent[v] == -2, ErrorCode::NotATree, "cycle through bus " + std::to_string(v));
      m.parent[v] = u;
      m.line_of_bus[v] = e;
      m.children[u].push_back(v);
      if (m.lines[e].from != u) std::swap(m.lines[e].from, m.lines[e].to);
      bfs.push(v);
    }
  }
  for (int j = 1; j <= n; ++j)
    require(m.parent[j] != -2, ErrorCode::NotATree, "bus " + std::to_string(j) + " is not connected to bus 0");
}

void build_stencils(NetworkModel& m) {
  const int n = m.n;
  m.neighbors.assign(n, {});
  for (int j = 1; j <= n; ++j) {
    int p = m.parent[j];
    if (p > 0) {
      m.neighbors[j - 1].push_back(p - 1);
      m.neighbors[p - 1].push_back(j - 1);
    }
  }
  m.two_hop.assign(n, {});
  m.stencil.assign(n, {});
  m.b_stencil.assign(n, {});
  for (int j = 0; j < n; ++j) {
    std::sort(m.neighbors[j].begin(), m.neighbors[j].end());
    std::set<int> one(m.neighbors[j].begin(), m.neighbors[j].end());
    one.insert(j);
    std::set<int> two;
    for (int k : m.neighbors[j])
      for (int l : m.neighbors[k])
        if (!one.count(l)) two.insert(l);
    m.two_hop[j].assign(two.begin(), two.end());
    m.b_stencil[j].assign(one.begin(), one.end());
    std::set<int> all = one;
    all.insert(two.begin(), two.end());
    m.stencil[j].assign(all.begin(), all.end());
  }
}

}  // namespace

NetworkModel build_network(std::vector<Line> lines, const Vector& loads_p, const Vector& loads_q, double V0,
                           KPolicy policy) {
  NetworkModel m;
  m.n = static_cast<int>(lines.size());
  require(m.n >= 1, ErrorCode::NotATree, "feeder has no lines");
  require(loads_p.size() == m.n && loads_q.size() == m.n, ErrorCode::DimensionMismatch,
          "load vectors must have one entry per bus");
  for (const auto& l : lines)
    require(l.x > 0.0, ErrorCode::NonPositiveReactance,
            "line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has x <= 0");
  m.lines = std::move(lines);
  m.V0 = V0;
  orient_tree(m);

  const int n = m.n;
  if (policy.kind == KPolicy::Kind::Exact) {
    const double k = m.lines[0].r / m.lines[0].x;
    for (const auto& l : m.lines)
      require(std::abs(l.r / l.x - k) <= 1e-9 * std::max(1.0, k), ErrorCode::NonHomogeneous,
              "r/x ratios differ; use an approximate K policy");
    m.K = k;
  } else {
    m.K = policy.k0;
  }

  m.M = Matrix::Zero(n, n);
  m.m0 = Vector::Zero(n);
  Vector r(n), x(n);
  for (int e = 0; e < n; ++e) {
    const auto& l = m.lines[e];
    if (l.from == 0)
      m.m0(e) = 1.0;
    else
      m.M(l.from - 1, e) = 1.0;
    m.M(l.to - 1, e) = -1.0;
    r(e) = l.r;
    x(e) = l.x;
  }

  Eigen::PartialPivLU<Matrix> lu(m.M);
  require(std::abs(lu.determinant()) > 0.5, ErrorCode::SingularSystem, "incidence matrix is singular");
  const Matrix Minv = lu.inverse();
  m.X = Minv.transpose() * x.asDiagonal() * Minv;
  m.R = Minv.transpose() * r.asDiagonal() * Minv;
  m.B = m.M * x.cwiseInverse().asDiagonal() * m.M.transpose();
  m.B2 = m.B * m.B;
  m.ones_term = -(Minv.transpose() * m.m0);
  m.V_ref = Vector::Constant(n, 0.5);
  build_stencils(m);

  m.p_c = loads_p;
  m.q_c = loads_q;
  auto vp = varpi_vectors(m, loads_p, loads_q);
  m.varpi_s = vp.varpi_s;
  m.varpi_a = vp.varpi_a;
  return m;
}

VarpiPair varpi_vectors(const NetworkModel& model, const Vector& p_c, const Vector& q_c) {
  require(p_c.size() == model.n && q_c.size() == model.n, ErrorCode::DimensionMismatch,
          "load vectors must have one entry per bus");
  const Vector v_nc = model.ones_term * model.V0 - model.R * p_c - model.X * q_c;
  VarpiPair out;
  out.varpi_s = model.B * v_nc;
  out.varpi_a = out.varpi_s - model.B * model.V_ref;
  return out;
}

NetworkModel with_loads(const NetworkModel& model, const Vector& p_c, const Vector& q_c) {
  NetworkModel m = model;
  auto vp = varpi_vectors(model, p_c, q_c);
  m.p_c = p_c;
  m.q_c = q_c;
  m.varpi_s = vp.varpi_s;
  m.varpi_a = vp.varpi_a;
  return m;
}

NetworkModel with_varpi_a(const NetworkModel& model, const Vector& varpi_a) {
  require(varpi_a.size() == model.n, ErrorCode::DimensionMismatch, "varpi_a must have one entry per bus");
  NetworkModel m = model;
  m.varpi_a = varpi_a;
  m.varpi_s = varpi_a + model.B * model.V_ref;
  return m;
}

Vector linear_voltage(const NetworkModel& model, const Vector& p, const Vector& q) {
  require(p.size() == model.n && q.size() == model.n, ErrorCode::DimensionMismatch,
          "p and q must have one entry per bus");
  return model.R * (p - model.p_c) + model.X * (q - model.q_c) + model.ones_term * model.V0;
}

double sigma_max(const NetworkModel& model, double tol, int max_iter) {
  const int n = model.n;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + i);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = model.B * v;
    const double next = v.dot(w);
    v = w.normalized();
    if (it > 0 && std::abs(next - lam) <= tol * std::abs(next)) return next;
    lam = next;
  }
  return lam;
}

}  // namespace asdvc
