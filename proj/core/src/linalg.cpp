#include "sosvi/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sosvi/errors.hpp"

namespace sosvi::linalg {

namespace {

void check_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionMismatch(what, a.rows(), a.cols());
}

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a, const std::string& what) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > kSingularRcond)) {
    throw SingularMatrix(what + " is numerically singular (rcond " + std::to_string(rcond) + ")");
  }
  return lu;
}

}  // namespace

CurvatureOperator::CurvatureOperator(Index dim, ApplyFn apply) : dim_(dim), apply_(std::move(apply)) {
  if (dim_ <= 0) throw InvalidArgument("curvature operator dimension must be positive");
  if (!apply_) throw InvalidArgument("curvature operator has no matvec");
}

CurvatureOperator CurvatureOperator::damped(est::StructuredHessian h, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("damping must be non-negative");
  const Index d = h.dim();
  return CurvatureOperator(d, [h = std::move(h), lambda](const Vector& v) {
    Vector out = h.apply(v);
    out = lambda * v - out;
    return out;
  });
}

CurvatureOperator CurvatureOperator::damped(est::PerSampleCurvature x, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("damping must be non-negative");
  const Index d = x.dim();
  return CurvatureOperator(d, [x = std::move(x), lambda](const Vector& v) {
    Vector out = x.apply(v);
    out = lambda * v - out;
    return out;
  });
}

CurvatureOperator CurvatureOperator::from_structured(est::StructuredMatrix k) {
  const Index d = k.dim();
  return CurvatureOperator(d, [k = std::move(k)](const Vector& v) { return k.apply(v); });
}

CurvatureOperator CurvatureOperator::from_dense(Matrix k) {
  check_square(k, "dense curvature operator");
  const Index d = k.rows();
  return CurvatureOperator(d, [k = std::move(k)](const Vector& v) -> Vector { return k * v; });
}

Vector CurvatureOperator::apply(const Vector& v) const {
  if (v.size() != dim_) throw DimensionMismatch("curvature operator argument", dim_, v.size());
  return apply_(v);
}

Matrix sherman_morrison_update(const Matrix& a_inv, const Vector& u, const Vector& v,
                               double denominator_floor) {
  check_square(a_inv, "Sherman-Morrison base inverse");
  if (u.size() != a_inv.rows()) throw DimensionMismatch("Sherman-Morrison u", a_inv.rows(), u.size());
  if (v.size() != a_inv.rows()) throw DimensionMismatch("Sherman-Morrison v", a_inv.rows(), v.size());
  const Vector a_inv_u = a_inv * u;
  const double denom = 1.0 + v.dot(a_inv_u);
  if (!(std::abs(denom) > denominator_floor)) throw SingularUpdate(0, denom);
  const Vector v_a_inv = a_inv.transpose() * v;
  Matrix out = a_inv;
  out.noalias() -= (a_inv_u / denom) * v_a_inv.transpose();
  return out;
}

Matrix invert_structured(const est::StructuredMatrix& k, const InvertOptions& options) {
  const BlockDiagonal& diag = k.diag_blocks();
  const Index d = k.dim();
  Matrix inv = Matrix::Zero(d, d);
  // Number of negative eigenvalues of the current partial sum, tracked only
  // when positive definiteness is requested.
  Index negative = 0;
  for (std::size_t b = 0; b < diag.block_count(); ++b) {
    const Matrix& block = diag.block(b);
    const Index off = diag.offset(b);
    const Index n = block.rows();
    if (options.require_positive_definite) {
      const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(block, Eigen::EigenvaluesOnly).eigenvalues();
      negative += (eig.array() < 0.0).count();
    }
    inv.block(off, off, n, n) = checked_lu(block, "diagonal block " + std::to_string(b)).inverse();
  }

  // K_i = K_{i-1} + w_i u_i u_i'. With symmetric K_{i-1}^{-1}, A^{-1}u and
  // v'A^{-1} share the vector a = K_{i-1}^{-1} u_i.
  Vector a(d);
  for (Index i = 0; i < k.rank(); ++i) {
    const double w = k.weight(i);
    if (w == 0.0) continue;
    a.noalias() = inv * k.direction(i);
    const double denom = 1.0 + w * k.direction(i).dot(a);
    if (!(std::abs(denom) > options.denominator_floor)) {
      throw SingularUpdate(static_cast<std::size_t>(i), denom);
    }
    // det K_i = det K_{i-1} * denom, and a rank-one term moves at most one
    // eigenvalue across zero, in the direction of sign(w).
    if (denom < 0.0) negative += w > 0.0 ? -1 : 1;
    inv.noalias() -= (w / denom) * a * a.transpose();
  }
  if (options.require_positive_definite && negative != 0) {
    throw IndefiniteCurvature("curvature has " + std::to_string(negative) +
                              " negative eigenvalues; raise the damping");
  }
  return inv;
}

CgResult conjugate_gradient(const CurvatureOperator& op, const Vector& b, double tol,
                            std::size_t max_iters, const IterateObserver& observer) {
  if (b.size() != op.dim()) throw DimensionMismatch("CG right-hand side", op.dim(), b.size());
  if (!(tol > 0.0)) throw InvalidArgument("CG tolerance must be positive");
  if (max_iters == 0) throw InvalidArgument("CG max_iters must be at least 1");

  CgResult out;
  out.solution = Vector::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }
  const double target = tol * b_norm;
  Vector r = b;
  Vector p = r;
  double rs = r.squaredNorm();
  for (std::size_t k = 1; k <= max_iters; ++k) {
    const Vector kp = op.apply(p);
    const double pkp = p.dot(kp);
    if (!(pkp > 0.0)) {
      throw IndefiniteCurvature("CG found a direction with p'Kp = " + std::to_string(pkp) +
                                "; raise the damping");
    }
    const double alpha = rs / pkp;
    out.solution.noalias() += alpha * p;
    r.noalias() -= alpha * kp;
    const double rs_next = r.squaredNorm();
    out.iterations = k;
    if (observer) observer(k, out.solution);
    if (std::sqrt(rs_next) <= target) {
      out.converged = true;
      break;
    }
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  out.residual_norm = (op.apply(out.solution) - b).norm();
  return out;
}

NeumannResult neumann_inverse_apply(const CurvatureSource& source, const Vector& g,
                                    const NeumannOptions& options) {
  if (!source) throw InvalidArgument("Neumann recursion needs a curvature source");
  if (!(options.c0 > 0.0)) throw InvalidArgument("C0 must be positive");
  if (!(options.tol >= 0.0)) throw InvalidArgument("Neumann tolerance must be non-negative");
  if (options.max_steps == 0) throw InvalidArgument("Neumann T_max must be at least 1");

  const double inv_c0 = 1.0 / options.c0;
  const double limit = options.divergence_factor * g.norm();
  NeumannResult out;
  Vector y = g;
  Vector next(g.size());
  for (std::size_t j = 1; j <= options.max_steps; ++j) {
    const CurvatureOperator k = source();
    if (k.dim() != g.size()) throw DimensionMismatch("Neumann curvature draw", g.size(), k.dim());
    const Vector ky = k.apply(y);
    if (options.literal_update) {
      next = g + inv_c0 * y - inv_c0 * ky;
    } else {
      next = g + y - inv_c0 * ky;
    }
    const double change = (next - y).norm();
    y.swap(next);
    out.steps = j;
    if (!std::isfinite(change) || y.norm() > limit) {
      throw NeumannDiverged(j, g.norm() > 0.0 ? y.norm() / g.norm() : y.norm());
    }
    if (options.observer) options.observer(j, inv_c0 * y);
    if (change <= options.tol) {
      out.converged = true;
      break;
    }
  }
  out.solution = inv_c0 * y;
  return out;
}

Vector dense_solve(const Matrix& a, const Vector& b) {
  check_square(a, "dense solve matrix");
  if (b.size() != a.rows()) throw DimensionMismatch("dense solve right-hand side", a.rows(), b.size());
  return checked_lu(a, "matrix").solve(b);
}

Matrix dense_invert(const Matrix& a) {
  check_square(a, "dense inverse matrix");
  return checked_lu(a, "matrix").inverse();
}

double power_iteration_norm(const std::function<Vector(const Vector&)>& apply, Index dim, int steps) {
  if (dim <= 0) throw InvalidArgument("power iteration dimension must be positive");
  if (steps <= 0) throw InvalidArgument("power iteration needs at least one step");
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double estimate = 0.0;
  for (int s = 0; s < steps; ++s) {
    Vector w = apply(v);
    estimate = w.norm();
    if (estimate == 0.0) return 0.0;
    v = w / estimate;
  }
  return estimate;
}

}  // namespace sosvi::linalg
