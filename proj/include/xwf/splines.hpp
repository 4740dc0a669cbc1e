#pragma once

#include <Eigen/Dense>

#include "xwf/error.hpp"

namespace xwf {

// Cubic B-spline basis (order 4) with clamped uniform knots on [lo, hi].
// Inputs outside the range are clamped, matching how prediction treats
// feature values beyond the training range.
class BSplineBasis {
 public:
  BSplineBasis(double lo, double hi, int basis_size);

  int size() const { return basis_size_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  Eigen::VectorXd eval(double x) const;
  Eigen::MatrixXd design(const Eigen::VectorXd& xs) const;

 private:
  double lo_, hi_;
  int basis_size_;
  Eigen::VectorXd knots_;  // basis_size + 4 entries, clamped at both ends
};

// S = D'D for the difference operator of the given order; penalizes
// order-th differences of spline coefficients. Null space holds coefficient
// sequences polynomial of degree < order.
Eigen::MatrixXd difference_penalty(int basis_size, int order);

}  // namespace xwf
