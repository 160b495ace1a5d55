#include "asdvc/operator_lab.hpp"

#include "asdvc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace asdvc {

OperatorContext make_operator_context(const NetworkModel& model, const FeasibleRegion& region,
                                      const CostModel& cost, const SolverParams& params) {
  require(region.size() == model.n && cost.size() == model.n && params.n == model.n, ErrorCode::DimensionMismatch,
          "region, cost and params must match the network");
  OperatorContext ctx;
  ctx.model = &model;
  ctx.region = &region;
  ctx.cost = &cost;
  ctx.params = params;
  ctx.beta = params.beta;
  ctx.kappa = params.kappa;
  ctx.Gamma = gamma_matrix(params, model);
  ctx.llt.compute(ctx.Gamma);
  require(ctx.llt.info() == Eigen::Success, ErrorCode::GammaNotPositiveDefinite, "Cholesky of Gamma failed");
  Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.Gamma, Eigen::EigenvaluesOnly);
  const double shifted = es.eigenvalues().minCoeff() - ctx.kappa;
  if (shifted < -1e-9) {
    std::ostringstream os;
    os << "Gamma - kappa I has eigenvalue " << shifted;
    throw Error(ErrorCode::GammaNotPositiveDefinite, os.str());
  }
  return ctx;
}

namespace {

struct Blocks {
  Vector z, lambda;
};

Blocks split(const OperatorContext& ctx, const Vector& w) {
  const int n = ctx.model->n;
  require(w.size() == 3 * n, ErrorCode::DimensionMismatch, "w must have length 3n");
  return {w.head(2 * n), w.tail(n)};
}

// A z = K p + q.
Vector apply_A(const OperatorContext& ctx, const Vector& z) {
  const int n = ctx.model->n;
  return ctx.model->K * z.head(n) + z.tail(n);
}

// A^T lambda = [K lambda; lambda].
Vector apply_At(const OperatorContext& ctx, const Vector& lambda) {
  const int n = ctx.model->n;
  Vector out(2 * n);
  out << ctx.model->K * lambda, lambda;
  return out;
}

Vector stack(const Vector& z, const Vector& lambda) {
  Vector w(z.size() + lambda.size());
  w << z, lambda;
  return w;
}

}  // namespace

Vector apply_C(const OperatorContext& ctx, const Vector& w) {
  const Blocks b = split(ctx, w);
  return stack(ctx.cost->gradient(b.z), ctx.model->varpi_a + ctx.model->B2 * b.lambda);
}

Vector apply_S2(const OperatorContext& ctx, const Vector& w) { return w - ctx.llt.solve(apply_C(ctx, w)); }

Vector resolvent_D(const OperatorContext& ctx, const Vector& v) {
  const Blocks b = split(ctx, v);
  const Vector zt = project_all(*ctx.region, b.z + ctx.params.alpha_pq * apply_At(ctx, b.lambda));
  const Vector lt = b.lambda + ctx.params.alpha_lambda * (apply_A(ctx, b.z) - 2.0 * apply_A(ctx, zt));
  return stack(zt, lt);
}

Vector apply_S(const OperatorContext& ctx, const Vector& w) { return resolvent_D(ctx, apply_S2(ctx, w)); }

Vector apply_T(const OperatorContext& ctx, const Vector& w) {
  const double kb = ctx.kappa * ctx.beta;
  return w + ((4.0 * kb - 1.0) / (2.0 * kb)) * (apply_S(ctx, w) - w);
}

double gamma_inner(const OperatorContext& ctx, const Vector& a, const Vector& b) { return a.dot(ctx.Gamma * b); }

double gamma_norm(const OperatorContext& ctx, const Vector& a) { return std::sqrt(gamma_inner(ctx, a, a)); }

double averaged_constant(const OperatorContext& ctx, OperatorTag tag) {
  const double kb = ctx.kappa * ctx.beta;
  switch (tag) {
    case OperatorTag::S1: return 0.5;
    case OperatorTag::S2: return 1.0 / (2.0 * kb);
    case OperatorTag::S: return 2.0 * kb / (4.0 * kb - 1.0);
  }
  return 1.0;
}

std::string to_string(OperatorTag tag) {
  switch (tag) {
    case OperatorTag::S1: return "S1";
    case OperatorTag::S2: return "S2";
    case OperatorTag::S: return "S";
  }
  return "?";
}

PairSampler::PairSampler(const OperatorContext& ctx, std::uint64_t seed) : ctx_(ctx), rng_(seed) {}

Vector PairSampler::draw(double scale_z, double scale_l) {
  const int n = ctx_.model->n;
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector w(3 * n);
  for (int i = 0; i < 2 * n; ++i) w(i) = scale_z * nd(rng_);
  for (int i = 2 * n; i < 3 * n; ++i) w(i) = scale_l * nd(rng_);
  return w;
}

std::pair<Vector, Vector> PairSampler::next() {
  double s_max = 0.0;
  for (const auto& b : ctx_.region->buses()) s_max = std::max(s_max, b.s);
  if (s_max == 0.0) s_max = 1.0;
  static constexpr double kScales[] = {1e-2, 1.0, 1e2};
  std::uniform_int_distribution<int> pick(0, 2);
  const double sz = s_max * kScales[pick(rng_)];
  const double sl = kScales[pick(rng_)];
  Vector a = draw(sz, sl);
  Vector b = std::uniform_int_distribution<int>(0, 1)(rng_) == 0 ? draw(sz, sl) : Vector(a + draw(1e-3 * sz, 1e-3 * sl));
  return {a, b};
}

void PairSampler::feasible_with_normal(Vector& z, Vector& normal) {
  double s_max = 0.0;
  for (const auto& b : ctx_.region->buses()) s_max = std::max(s_max, b.s);
  const int n = ctx_.model->n;
  std::normal_distribution<double> nd(0.0, 2.0 * s_max);
  Vector y(2 * n);
  for (int i = 0; i < 2 * n; ++i) y(i) = nd(rng_);
  z = project_all(*ctx_.region, y);
  normal = y - z;
}

namespace {

void track(PropertyReport& rep, double margin, const Vector& a, const Vector& b) {
  if (rep.samples == 0 || margin < rep.worst_margin) {
    rep.worst_margin = margin;
    rep.witness_a = a;
    rep.witness_b = b;
  }
  ++rep.samples;
}

}  // namespace

PropertyReport check_averaged(const OperatorContext& ctx, OperatorTag tag, long samples, std::uint64_t seed) {
  const double alpha = averaged_constant(ctx, tag);
  PropertyReport rep;
  rep.name = "averaged_" + to_string(tag);
  PairSampler sampler(ctx, seed);
  auto op = [&](const Vector& w) -> Vector {
    switch (tag) {
      case OperatorTag::S1: return resolvent_D(ctx, w);
      case OperatorTag::S2: return apply_S2(ctx, w);
      case OperatorTag::S: return apply_S(ctx, w);
    }
    return w;
  };
  for (long i = 0; i < samples; ++i) {
    auto [x, y] = sampler.next();
    const Vector tx = op(x), ty = op(y);
    const Vector d = x - y, td = tx - ty, rd = d - td;
    const double margin = gamma_inner(ctx, d, d) - ((1.0 - alpha) / alpha) * gamma_inner(ctx, rd, rd) -
                          gamma_inner(ctx, td, td);
    track(rep, margin, x, y);
  }
  return rep;
}

PropertyReport check_cocoercive_C(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "cocoercive_C";
  PairSampler sampler(ctx, seed);
  for (long i = 0; i < samples; ++i) {
    auto [x, y] = sampler.next();
    const Vector dc = apply_C(ctx, x) - apply_C(ctx, y);
    track(rep, dc.dot(x - y) - ctx.beta * dc.squaredNorm(), x, y);
  }
  return rep;
}

PropertyReport check_cocoercive_F(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "cocoercive_F";
  const double theta = ctx.cost->lipschitz();
  const int n = ctx.model->n;
  PairSampler sampler(ctx, seed);
  for (long i = 0; i < samples; ++i) {
    auto [x, y] = sampler.next();
    const Vector zx = x.head(2 * n), zy = y.head(2 * n);
    const Vector df = ctx.cost->gradient(zx) - ctx.cost->gradient(zy);
    const double rhs = theta > 0 ? df.squaredNorm() / theta : 0.0;
    track(rep, df.dot(zx - zy) - rhs, x, y);
  }
  return rep;
}

PropertyReport check_firmly_nonexpansive_resolvent(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "firmly_nonexpansive_resolvent";
  PairSampler sampler(ctx, seed);
  for (long i = 0; i < samples; ++i) {
    auto [x, y] = sampler.next();
    const Vector d = x - y, rd = resolvent_D(ctx, x) - resolvent_D(ctx, y), qd = d - rd;
    track(rep, gamma_inner(ctx, d, d) - gamma_inner(ctx, rd, rd) - gamma_inner(ctx, qd, qd), x, y);
  }
  return rep;
}

PropertyReport check_monotone_D(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "monotone_D";
  const int n = ctx.model->n;
  PairSampler sampler(ctx, seed);
  auto d_hat = [&](const Vector& z, const Vector& normal, const Vector& lambda) {
    return stack(normal - apply_At(ctx, lambda), apply_A(ctx, z));
  };
  for (long i = 0; i < samples; ++i) {
    Vector z1, n1, z2, n2;
    sampler.feasible_with_normal(z1, n1);
    sampler.feasible_with_normal(z2, n2);
    auto [a, b] = sampler.next();
    const Vector l1 = a.tail(n), l2 = b.tail(n);
    const Vector w1 = stack(z1, l1), w2 = stack(z2, l2);
    track(rep, (d_hat(z1, n1, l1) - d_hat(z2, n2, l2)).dot(w1 - w2), w1, w2);
  }
  return rep;
}

PropertyReport check_lipschitz_grad_f(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "lipschitz_B2";
  const int n = ctx.model->n;
  const double s2 = ctx.params.sigma_max * ctx.params.sigma_max;
  PairSampler sampler(ctx, seed);
  for (long i = 0; i < samples; ++i) {
    auto [x, y] = sampler.next();
    const Vector dl = x.tail(n) - y.tail(n);
    track(rep, s2 * dl.norm() - (ctx.model->B2 * dl).norm(), x, y);
  }
  return rep;
}

std::vector<PropertyReport> run_property_suite(const OperatorContext& ctx, long samples, std::uint64_t seed) {
  return {
      check_cocoercive_C(ctx, samples, seed),
      check_cocoercive_F(ctx, samples, seed + 1),
      check_firmly_nonexpansive_resolvent(ctx, samples, seed + 2),
      check_monotone_D(ctx, samples, seed + 3),
      check_lipschitz_grad_f(ctx, samples, seed + 4),
      check_averaged(ctx, OperatorTag::S1, samples, seed + 5),
      check_averaged(ctx, OperatorTag::S2, samples, seed + 6),
      check_averaged(ctx, OperatorTag::S, samples, seed + 7),
  };
}

void enforce(const PropertyReport& report) {
  if (report.passed()) return;
  std::ostringstream os;
  os << report.name << " violated: worst margin " << report.worst_margin << " over " << report.samples
     << " samples";
  throw Error(ErrorCode::PropertyViolated, os.str());
}

double fixed_point_residual(const OperatorContext& ctx, const Vector& w) {
  return gamma_norm(ctx, apply_S(ctx, w) - w);
}

InclusionResidual inclusion_residual(const OperatorContext& ctx, const Vector& w) {
  const Blocks b = split(ctx, w);
  const Blocks t = split(ctx, apply_S(ctx, w));
  const double a = ctx.params.alpha_pq;
  const Vector u = -ctx.cost->gradient(b.z) + apply_At(ctx, b.lambda) - (t.z - b.z) / a;
  InclusionResidual r;
  r.z_block = (project_all(*ctx.region, t.z + a * u) - t.z).lpNorm<Eigen::Infinity>();
  const Vector lam = -(ctx.model->varpi_a + ctx.model->B2 * b.lambda) - apply_A(ctx, t.z) -
                     apply_A(ctx, t.z - b.z) - (t.lambda - b.lambda) / ctx.params.alpha_lambda;
  r.lambda_block = lam.lpNorm<Eigen::Infinity>();
  return r;
}

}  // namespace asdvc
