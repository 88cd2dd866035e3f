#include "sosvi/oracles/finite_difference.hpp"

#include <algorithm>
#include <cmath>

#include "sosvi/errors.hpp"

namespace sosvi::oracles {

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    Vector hi = x;
    Vector lo = x;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  Matrix jac;
  for (Index j = 0; j < x.size(); ++j) {
    Vector hi = x;
    Vector lo = x;
    hi[j] += h;
    lo[j] -= h;
    const Vector col = (f(hi) - f(lo)) / (2.0 * h);
    if (j == 0) jac.resize(col.size(), x.size());
    jac.col(j) = col;
  }
  return jac;
}

double max_relative_error(const Matrix& a, const Matrix& b, double scale) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("relative error operands", b.size(), a.size());
  }
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const double denom = std::max(scale, std::abs(b(i, j)));
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

}  // namespace sosvi::oracles
