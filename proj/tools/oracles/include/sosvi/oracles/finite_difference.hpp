#pragma once

#include <functional>

#include "sosvi/common.hpp"

namespace sosvi::oracles {

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5);

/// Column j holds the central difference of f along coordinate j.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h = 1e-5);

/// Largest |a_ij - b_ij| / max(scale, |b_ij|).
double max_relative_error(const Matrix& a, const Matrix& b, double scale = 1.0);

}  // namespace sosvi::oracles
