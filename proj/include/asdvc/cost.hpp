#pragma once

#include "asdvc/grid_model.hpp"

namespace asdvc {

/// Separable quadratic cost g_j(p, q) = c_p/2 p^2 + c_q/2 q^2, per bus.
/// Zero coefficients give g = 0.
class CostModel {
 public:
  CostModel() = default;
  CostModel(Vector c_p, Vector c_q);
  static CostModel uniform(int n, double c_p, double c_q);

  int size() const { return static_cast<int>(c_p_.size()); }
  double grad_p(int j, double p) const { return c_p_(j) * p; }
  double grad_q(int j, double q) const { return c_q_(j) * q; }

  /// Stacked gradient over z = [p; q].
  Vector gradient(const Vector& z) const;
  double value(const Vector& z) const;

  /// Lipschitz constant of the stacked gradient.
  double lipschitz() const;

  const Vector& c_p() const { return c_p_; }
  const Vector& c_q() const { return c_q_; }

 private:
  Vector c_p_, c_q_;
};

}  // namespace asdvc
