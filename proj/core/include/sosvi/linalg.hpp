#pragma once

#include <cstddef>
#include <functional>

#include "sosvi/common.hpp"
#include "sosvi/estimators.hpp"

namespace sosvi::linalg {

inline constexpr double kDenominatorFloor = 1e-12;
inline constexpr double kNeumannDivergenceFactor = 1e6;

/// A symmetric linear map v -> K v known only through matrix-vector products.
///
/// The factories build K = lambda I - H for the curvature estimates the
/// optimizer produces; solvers never need anything but `apply`.
class CurvatureOperator {
 public:
  using ApplyFn = std::function<Vector(const Vector&)>;

  CurvatureOperator(Index dim, ApplyFn apply);

  /// lambda I - H, applied through the structured matvec.
  static CurvatureOperator damped(est::StructuredHessian h, double lambda);
  static CurvatureOperator damped(est::PerSampleCurvature x, double lambda);
  /// K itself, given in structured form.
  static CurvatureOperator from_structured(est::StructuredMatrix k);
  static CurvatureOperator from_dense(Matrix k);

  Index dim() const { return dim_; }
  Vector apply(const Vector& v) const;
  Vector operator()(const Vector& v) const { return apply(v); }

 private:
  Index dim_;
  ApplyFn apply_;
};

/// (A + u v')^{-1} from A^{-1} in O(d^2). Throws SingularUpdate (term 0) when
/// |1 + v' A^{-1} u| <= floor.
Matrix sherman_morrison_update(const Matrix& a_inv, const Vector& u, const Vector& v,
                               double denominator_floor = kDenominatorFloor);

struct InvertOptions {
  double denominator_floor = kDenominatorFloor;
  /// Also certify K is positive definite by tracking its inertia through the
  /// cascade. Raises IndefiniteCurvature otherwise.
  bool require_positive_definite = false;
};

/// Dense K^{-1} for K = D + sum_i w_i u_i u_i': blockwise inverse of D, then
/// one Sherman-Morrison update per rank term in index order.
Matrix invert_structured(const est::StructuredMatrix& k, const InvertOptions& options = {});

using IterateObserver = std::function<void(std::size_t step, const Vector& iterate)>;

struct CgResult {
  Vector solution;
  std::size_t iterations = 0;
  double residual_norm = 0.0;  ///< ||K y - b||, recomputed at exit
  bool converged = false;
};

/// Plain conjugate gradient on an SPD operator, starting from zero.
///
/// Stops when the recurrence residual drops to tol * ||b|| or after
/// max_iters iterations. Throws IndefiniteCurvature when p' K p <= 0.
/// The observer sees each iterate after it is formed.
CgResult conjugate_gradient(const CurvatureOperator& op, const Vector& b, double tol,
                            std::size_t max_iters, const IterateObserver& observer = {});

/// Yields one curvature operator lambda I - X_j per call.
using CurvatureSource = std::function<CurvatureOperator()>;

struct NeumannOptions {
  double c0 = 1.0;
  /// Absolute tolerance on ||y_j - y_{j-1}|| (unscaled iterates).
  double tol = 1e-10;
  std::size_t max_steps = 200;
  /// Reproduce the alternative update y_j = g + y_{j-1}/C0 - K_j y_{j-1}/C0
  /// instead of y_j = g + (I - K_j/C0) y_{j-1}. Only for comparison runs.
  bool literal_update = false;
  double divergence_factor = kNeumannDivergenceFactor;
  /// Receives y_j / C0, the running estimate of K^{-1} g.
  IterateObserver observer;
};

struct NeumannResult {
  Vector solution;  ///< y / C0
  std::size_t steps = 0;
  bool converged = false;
};

/// Stochastic truncated Neumann series for K^{-1} g with one fresh curvature
/// draw per step. Throws NeumannDiverged when ||y_j|| > factor * ||g||.
NeumannResult neumann_inverse_apply(const CurvatureSource& source, const Vector& g,
                                    const NeumannOptions& options);

/// Threshold on the reciprocal condition estimate below which dense solves
/// report SingularMatrix.
inline constexpr double kSingularRcond = 1e-14;

Vector dense_solve(const Matrix& a, const Vector& b);
Matrix dense_invert(const Matrix& a);

/// Largest |eigenvalue| of a symmetric operator by power iteration from a
/// fixed, non-random start vector.
double power_iteration_norm(const std::function<Vector(const Vector&)>& apply, Index dim,
                            int steps = 20);

}  // namespace sosvi::linalg
