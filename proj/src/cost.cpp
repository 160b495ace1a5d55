#include "asdvc/cost.hpp"

#include "asdvc/error.hpp"

namespace asdvc {

CostModel::CostModel(Vector c_p, Vector c_q) : c_p_(std::move(c_p)), c_q_(std::move(c_q)) {
  require(c_p_.size() == c_q_.size(), ErrorCode::DimensionMismatch, "cost coefficient vectors differ in length");
  require(c_p_.minCoeff() >= 0.0 && c_q_.minCoeff() >= 0.0, ErrorCode::InvalidInput,
          "cost coefficients must be nonnegative");
}

CostModel CostModel::uniform(int n, double c_p, double c_q) {
  return CostModel(Vector::Constant(n, c_p), Vector::Constant(n, c_q));
}

Vector CostModel::gradient(const Vector& z) const {
  const int n = size();
  require(z.size() == 2 * n, ErrorCode::DimensionMismatch, "z must have length 2n");
  Vector g(2 * n);
  g.head(n) = c_p_.cwiseProduct(z.head(n));
  g.tail(n) = c_q_.cwiseProduct(z.tail(n));
  return g;
}

double CostModel::value(const Vector& z) const {
  const int n = size();
  require(z.size() == 2 * n, ErrorCode::DimensionMismatch, "z must have length 2n");
  return 0.5 * (c_p_.dot(z.head(n).cwiseAbs2()) + c_q_.dot(z.tail(n).cwiseAbs2()));
}

double CostModel::lipschitz() const {
  if (size() == 0) return 0.0;
  return std::max(c_p_.maxCoeff(), c_q_.maxCoeff());
}

}  // namespace asdvc
