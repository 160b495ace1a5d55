#pragma once

#include "asdvc/grid_model.hpp"

#include <array>
#include <vector>

namespace asdvc {

/// Limits of one bus: a box on (p, q) intersected with the disk p^2 + q^2 <= s^2.
struct BusLimits {
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  double s = 0.0;
};

using Point2 = std::array<double, 2>;

/// Product of per-bus regions. Construction rejects empty or malformed buses.
class FeasibleRegion {
 public:
  FeasibleRegion() = default;
  explicit FeasibleRegion(std::vector<BusLimits> buses);

  int size() const { return static_cast<int>(buses_.size()); }
  const BusLimits& bus(int j) const { return buses_[j]; }
  const std::vector<BusLimits>& buses() const { return buses_; }

 private:
  std::vector<BusLimits> buses_;
};

/// Exact Euclidean projection onto one bus's box-and-disk region.
Point2 project(const BusLimits& lim, Point2 pt);
Point2 project(const FeasibleRegion& region, int j, Point2 pt);

/// Projects a stacked z = [p; q] (length 2n) bus by bus.
Vector project_all(const FeasibleRegion& region, const Vector& z);

/// Largest constraint violation of (p, q) at one bus; 0 when feasible.
double violation(const BusLimits& lim, Point2 pt);

}  // namespace asdvc
