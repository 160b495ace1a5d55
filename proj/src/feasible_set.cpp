#include "asdvc/feasible_set.hpp"

#include "asdvc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace asdvc {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double sq_dist(Point2 a, Point2 b) {
  const double dp = a[0] - b[0], dq = a[1] - b[1];
  return dp * dp + dq * dq;
}

}  // namespace

FeasibleRegion::FeasibleRegion(std::vector<BusLimits> buses) : buses_(std::move(buses)) {
  for (std::size_t j = 0; j < buses_.size(); ++j) {
    const auto& b = buses_[j];
    const std::string who = "bus " + std::to_string(j + 1);
    require(b.p_min <= b.p_max && b.q_min <= b.q_max && b.s >= 0.0, ErrorCode::InvalidInput,
            who + " has inverted bounds or negative s");
    // The box point nearest the origin is the best chance of touching the disk.
    const double p0 = clamp(0.0, b.p_min, b.p_max), q0 = clamp(0.0, b.q_min, b.q_max);
    require(p0 * p0 + q0 * q0 <= b.s * b.s * (1.0 + 1e-12), ErrorCode::EmptyRegion,
            who + ": box does not intersect the capacity disk");
  }
}

double violation(const BusLimits& lim, Point2 pt) {
  const double p = pt[0], q = pt[1];
  double v = 0.0;
  v = std::max(v, lim.p_min - p);
  v = std::max(v, p - lim.p_max);
  v = std::max(v, lim.q_min - q);
  v = std::max(v, q - lim.q_max);
  v = std::max(v, std::hypot(p, q) - lim.s);
  return v;
}

Point2 project(const BusLimits& lim, Point2 pt) {
  const Point2 boxed{clamp(pt[0], lim.p_min, lim.p_max), clamp(pt[1], lim.q_min, lim.q_max)};
  const double s2 = lim.s * lim.s;
  if (boxed[0] * boxed[0] + boxed[1] * boxed[1] <= s2) return boxed;

  // The disk is active. The minimiser lies on the circle inside the box, or on
  // one of the four box edges clipped to the disk.
  Point2 best{};
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](Point2 c) {
    const double d = sq_dist(c, pt);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  };

  const double rho = std::hypot(pt[0], pt[1]);
  if (rho > 0.0) {
    const Point2 radial{pt[0] * lim.s / rho, pt[1] * lim.s / rho};
    if (radial[0] >= lim.p_min && radial[0] <= lim.p_max && radial[1] >= lim.q_min && radial[1] <= lim.q_max)
      consider(radial);
  }
  for (double v : {lim.p_min, lim.p_max}) {
    if (std::abs(v) > lim.s) continue;
    const double h = std::sqrt(s2 - v * v);
    const double lo = std::max(lim.q_min, -h), hi = std::min(lim.q_max, h);
    if (lo <= hi) consider({v, clamp(pt[1], lo, hi)});
  }
  for (double v : {lim.q_min, lim.q_max}) {
    if (std::abs(v) > lim.s) continue;
    const double h = std::sqrt(s2 - v * v);
    const double lo = std::max(lim.p_min, -h), hi = std::min(lim.p_max, h);
    if (lo <= hi) consider({clamp(pt[0], lo, hi), v});
  }
  if (!std::isfinite(best_d)) {
    // Box and disk touch only within rounding; the box point nearest the
    // origin is then the whole region.
    const Point2 touch{clamp(0.0, lim.p_min, lim.p_max), clamp(0.0, lim.q_min, lim.q_max)};
    require(touch[0] * touch[0] + touch[1] * touch[1] <= s2 * (1.0 + 1e-12), ErrorCode::EmptyRegion,
            "projection onto an empty region");
    return touch;
  }
  return best;
}

Point2 project(const FeasibleRegion& region, int j, Point2 pt) { return project(region.bus(j), pt); }

Vector project_all(const FeasibleRegion& region, const Vector& z) {
  const int n = region.size();
  require(z.size() == 2 * n, ErrorCode::DimensionMismatch, "z must stack p and q for every bus");
  Vector out(2 * n);
  for (int j = 0; j < n; ++j) {
    const Point2 r = project(region.bus(j), {z(j), z(n + j)});
    out(j) = r[0];
    out(n + j) = r[1];
  }
  return out;
}

}  // namespace asdvc
