#include "xwf/splines.hpp"

#include <algorithm>
#include <cmath>

namespace xwf {

BSplineBasis::BSplineBasis(double lo, double hi, int basis_size)
    : lo_(lo), hi_(hi), basis_size_(basis_size) {
  if (!(hi > lo)) {
    throw Error(ErrorKind::validation, "spline basis: need hi > lo");
  }
  if (basis_size < 4) {
    throw Error(ErrorKind::validation, "spline basis: need at least 4 functions");
  }
  // Uniform knots extending three spacings past each end, so coefficient
  // sequences linear in index represent exactly linear functions on
  // [lo, hi]; the difference penalty's null space is then the lines.
  int m = basis_size + 4;
  knots_.resize(m);
  double h = (hi - lo) / (basis_size - 3);
  for (int k = 0; k < m; ++k) {
    knots_(k) = lo + (k - 3) * h;
  }
}

Eigen::VectorXd BSplineBasis::eval(double x) const {
  x = std::clamp(x, lo_, hi_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis_size_);

  // Knot span index i: knots_(i) <= x < knots_(i+1), with the last span
  // treated as closed so x = hi lands in it.
  int i = 3;
  while (i < basis_size_ - 1 && x >= knots_(i + 1)) ++i;

  // de Boor-Cox recursion for the 4 nonzero cubic basis values on span i.
  double vals[4] = {1.0, 0.0, 0.0, 0.0};
  for (int deg = 1; deg <= 3; ++deg) {
    double saved = 0.0;
    for (int r = 0; r < deg; ++r) {
      double left = knots_(i - deg + 1 + r);
      double right = knots_(i + 1 + r);
      double term = vals[r] / (right - left);
      vals[r] = saved + (right - x) * term;
      saved = (x - left) * term;
    }
    vals[deg] = saved;
  }
  for (int r = 0; r <= 3; ++r) out(i - 3 + r) = vals[r];
  return out;
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::VectorXd& xs) const {
  Eigen::MatrixXd B(xs.size(), basis_size_);
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    B.row(k) = eval(xs(k)).transpose();
  }
  return B;
}

Eigen::MatrixXd difference_penalty(int basis_size, int order) {
  if (order < 1 || order >= basis_size) {
    throw Error(ErrorKind::validation, "difference penalty: bad order");
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(basis_size, basis_size);
  for (int pass = 0; pass < order; ++pass) {
    int rows = static_cast<int>(D.rows()) - 1;
    Eigen::MatrixXd next(rows, basis_size);
    for (int r = 0; r < rows; ++r) {
      next.row(r) = D.row(r + 1) - D.row(r);
    }
    D = std::move(next);
  }
  return D.transpose() * D;
}

}  // namespace xwf
