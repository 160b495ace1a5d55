#pragma once

#include "asdvc/sync_solver.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace asdvc {

/// Everything needed to evaluate the splitting operators on stacked w = [p; q; lambda].
struct OperatorContext {
  const NetworkModel* model = nullptr;
  const FeasibleRegion* region = nullptr;
  const CostModel* cost = nullptr;
  SolverParams params;
  Matrix Gamma;
  Eigen::LLT<Matrix> llt;
  double beta = 0.0;
  double kappa = 0.0;
};

/// Builds Gamma and its Cholesky factor. Throws GammaNotPositiveDefinite if
/// Gamma - kappa I is not PSD (slack 1e-9).
OperatorContext make_operator_context(const NetworkModel& model, const FeasibleRegion& region,
                                      const CostModel& cost, const SolverParams& params);

/// C(w) = [grad g(z); varpi_a + B^2 lambda].
Vector apply_C(const OperatorContext& ctx, const Vector& w);
/// S2 = Id - Gamma^{-1} C.
Vector apply_S2(const OperatorContext& ctx, const Vector& w);
/// S1 = (Id + Gamma^{-1} D)^{-1}, D = skew coupling plus the normal cone of Omega.
Vector resolvent_D(const OperatorContext& ctx, const Vector& v);
/// S = S1 o S2; equals the un-relaxed synchronous intermediate.
Vector apply_S(const OperatorContext& ctx, const Vector& w);
/// T = Id + ((4 kappa beta - 1) / (2 kappa beta)) (S - Id), the nonexpansive part of S.
Vector apply_T(const OperatorContext& ctx, const Vector& w);

double gamma_inner(const OperatorContext& ctx, const Vector& a, const Vector& b);
double gamma_norm(const OperatorContext& ctx, const Vector& a);

enum class OperatorTag { S1, S2, S };
/// Averagedness constant: 1/2 for S1, 1/(2 beta kappa) for S2, 2 kappa beta / (4 kappa beta - 1) for S.
double averaged_constant(const OperatorContext& ctx, OperatorTag tag);
std::string to_string(OperatorTag tag);

/// Outcome of a sampled inequality. `worst_margin` is the smallest
/// (right side - left side) seen; negative means violated.
struct PropertyReport {
  std::string name;
  long samples = 0;
  double worst_margin = 0.0;
  double tolerance = 1e-9;
  Vector witness_a, witness_b;
  bool passed() const { return worst_margin >= -tolerance; }
};

/// Random pair generator shared by the checks. Pairs mix independent draws at
/// several magnitudes with close pairs near the feasible region.
class PairSampler {
 public:
  PairSampler(const OperatorContext& ctx, std::uint64_t seed);
  std::pair<Vector, Vector> next();
  /// Feasible z with a normal-cone element (via a projection certificate).
  void feasible_with_normal(Vector& z, Vector& normal);

 private:
  const OperatorContext& ctx_;
  std::mt19937_64 rng_;
  Vector draw(double scale_z, double scale_l);
};

PropertyReport check_averaged(const OperatorContext& ctx, OperatorTag tag, long samples, std::uint64_t seed);
PropertyReport check_cocoercive_C(const OperatorContext& ctx, long samples, std::uint64_t seed);
PropertyReport check_cocoercive_F(const OperatorContext& ctx, long samples, std::uint64_t seed);
PropertyReport check_firmly_nonexpansive_resolvent(const OperatorContext& ctx, long samples, std::uint64_t seed);
PropertyReport check_monotone_D(const OperatorContext& ctx, long samples, std::uint64_t seed);
PropertyReport check_lipschitz_grad_f(const OperatorContext& ctx, long samples, std::uint64_t seed);

/// Every check above, in a fixed order.
std::vector<PropertyReport> run_property_suite(const OperatorContext& ctx, long samples, std::uint64_t seed);

/// Throws PropertyViolated carrying the worst margin if the report failed.
void enforce(const PropertyReport& report);

/// ||S(w) - w||_Gamma.
double fixed_point_residual(const OperatorContext& ctx, const Vector& w);

/// Residual of -C(w) in D(w~) + Gamma (w~ - w) at w~ = S(w). The lambda block is
/// an equation; the z block is a normal-cone membership checked through the
/// projection certificate P(z~ + alpha u) = z~.
struct InclusionResidual {
  double z_block = 0.0;
  double lambda_block = 0.0;
};
InclusionResidual inclusion_residual(const OperatorContext& ctx, const Vector& w);

}  // namespace asdvc
