#pragma once
// Independent reference implementations used only by tests.

#include "asdvc/cost.hpp"
#include "asdvc/feasible_set.hpp"
#include "asdvc/grid_model.hpp"
#include "asdvc/scenario.hpp"

#include <random>
#include <vector>

namespace oracle {

using asdvc::Matrix;
using asdvc::Vector;

/// Dykstra's alternating projection between the box and the disk.
asdvc::Point2 dykstra(const asdvc::BusLimits& lim, asdvc::Point2 x, double tol = 1e-13, int max_iter = 200000);

/// Random region that is guaranteed nonempty.
asdvc::BusLimits random_limits(std::mt19937_64& rng);

/// Random tree on buses 0..n with each bus attached to an earlier one. With
/// `homogeneous` every line shares one r/x ratio.
std::vector<asdvc::Line> random_tree(int n, std::mt19937_64& rng, bool homogeneous);

/// B assembled edge by edge: weighted Laplacian of the subtree plus 1/x on
/// buses that touch the substation.
Matrix laplacian_plus_shunt(const std::vector<asdvc::Line>& lines, int n);

/// Optimum of the voltage problem with V eliminated: minimise
/// 1/2 ||X (K p + q) + v_nc - V_ref||^2 + g(p, q) over Omega by accelerated
/// projected gradient, then recover lambda = X (V_ref - V). Requires R = K X.
Vector reduced_primal_optimum(const asdvc::NetworkModel& model, const asdvc::FeasibleRegion& region,
                              const asdvc::CostModel& cost, int max_iter = 2000000);

/// Receiving-end |U1| of a single line feeding load (P, Q) at the far end.
double two_bus_voltage(double r, double x, double U0, double P, double Q);

/// The 8-bus benchmark scenario shipped in data/.
asdvc::Scenario eightbus();

}  // namespace oracle
