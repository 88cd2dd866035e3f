#pragma once

#include <cstdint>

#include "sosvi/block_diagonal.hpp"
#include "sosvi/common.hpp"
#include "sosvi/model.hpp"
#include "sosvi/var_family.hpp"

namespace sosvi::est {

/// What multiplies the score terms in the gradient and Hessian estimators.
///
/// `log_posterior` subtracts the model's log-evidence from the log-joint when
/// the model provides one (and falls back to the log-joint otherwise). The
/// shift is constant in the variational parameters, so expectations are
/// unchanged; only the Monte Carlo variance differs.
enum class ScoreWeight {
  log_joint,
  log_posterior,
};

struct EstimatorConfig {
  std::size_t grad_samples = 1000;  ///< T
  std::size_t hess_samples = 1000;  ///< S
  std::uint64_t seed = 0;
  ScoreWeight weight = ScoreWeight::log_posterior;

  void validate() const;
};

/// Constant subtracted from ln p(theta, X) before weighting score terms.
double weight_offset(const model::LogJointModel& model, ScoreWeight weight);

struct GradientEstimate {
  Vector value;
  Vector per_sample_logjoint;
  std::size_t sample_count = 0;
};

/// Symmetric matrix D + sum_i w_i u_i u_i' with D block-diagonal.
///
/// Directions are stored column-wise; the matrix-vector product costs
/// O(S d) and never forms a d x d intermediate.
class StructuredMatrix {
 public:
  StructuredMatrix(BlockDiagonal diag_blocks, Vector weights, Matrix directions);
  explicit StructuredMatrix(BlockDiagonal diag_blocks);

  Index dim() const { return diag_.dim(); }
  Index rank() const { return weights_.size(); }
  const BlockDiagonal& diag_blocks() const { return diag_; }
  BlockDiagonal& diag_blocks() { return diag_; }
  const Vector& weights() const { return weights_; }
  const Matrix& directions() const { return directions_; }
  double weight(Index i) const { return weights_[i]; }
  auto direction(Index i) const { return directions_.col(i); }

  Vector apply(const Vector& v) const;
  Matrix densify() const;
  /// lambda I - (*this)
  StructuredMatrix damped_negation(double lambda) const;

 private:
  BlockDiagonal diag_;
  Vector weights_;
  Matrix directions_;
};

/// Diagonal blocks hold (1/S) sum_i ell_i H_logq(theta_i) + H_entropy; rank
/// terms are w_i = ell_i / S with u_i the score at theta_i.
using StructuredHessian = StructuredMatrix;

/// One unbiased Hessian draw: ell u u' + ell H_logq(theta) + H_entropy.
struct PerSampleCurvature {
  double log_weight = 0.0;  ///< ell = weighted log-joint at the draw
  Vector direction;         ///< score at the draw
  BlockDiagonal diag_blocks;

  Index dim() const { return direction.size(); }
  Vector apply(const Vector& v) const;
  Matrix densify() const;
};

Vector structured_matvec(const StructuredMatrix& h, const Vector& v);
Vector structured_matvec(const PerSampleCurvature& x, const Vector& v);

/// Largest parameter dimension `estimate_hessian_dense` will materialize.
inline constexpr Index kMaxDenseDim = 2000;

/// (1/n) sum ln p(theta_i, X) + H(q), always on the unshifted log-joint.
double estimate_elbo(const model::LogJointModel& model, const family::VariationalFamily& family,
                     const Vector& params, std::size_t samples, Rng& rng);
double estimate_elbo(const model::LogJointModel& model, const family::VariationalFamily& family,
                     const Vector& params, const EstimatorConfig& cfg);

GradientEstimate estimate_gradient(const model::LogJointModel& model,
                                   const family::VariationalFamily& family, const Vector& params,
                                   const EstimatorConfig& cfg, Rng& rng);
GradientEstimate estimate_gradient(const model::LogJointModel& model,
                                   const family::VariationalFamily& family, const Vector& params,
                                   const EstimatorConfig& cfg);

StructuredHessian estimate_hessian_structured(const model::LogJointModel& model,
                                              const family::VariationalFamily& family,
                                              const Vector& params, const EstimatorConfig& cfg,
                                              Rng& rng);
StructuredHessian estimate_hessian_structured(const model::LogJointModel& model,
                                              const family::VariationalFamily& family,
                                              const Vector& params, const EstimatorConfig& cfg);

/// Densified and symmetrized rendering of `estimate_hessian_structured`.
Matrix estimate_hessian_dense(const model::LogJointModel& model,
                              const family::VariationalFamily& family, const Vector& params,
                              const EstimatorConfig& cfg, Rng& rng);
Matrix estimate_hessian_dense(const model::LogJointModel& model,
                              const family::VariationalFamily& family, const Vector& params,
                              const EstimatorConfig& cfg);

PerSampleCurvature sample_curvature(const model::LogJointModel& model,
                                    const family::VariationalFamily& family, const Vector& params,
                                    Rng& rng, ScoreWeight weight = ScoreWeight::log_posterior);

}  // namespace sosvi::est
