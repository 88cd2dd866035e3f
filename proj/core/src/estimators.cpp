#include "sosvi/estimators.hpp"

#include <cmath>

#include "sosvi/errors.hpp"

namespace sosvi::est {

namespace {

void check_consistent(const model::LogJointModel& model, const family::VariationalFamily& family,
                      const Vector& params) {
  family.check_params(params);
  if (model.latent_dim() != family.latent_dim()) {
    throw DimensionMismatch("model latent dimension", family.latent_dim(), model.latent_dim());
  }
}

double checked_log_joint(const model::LogJointModel& model, const Vector& theta) {
  const double value = model.log_joint(theta);
  if (!std::isfinite(value)) throw NonFiniteLogJoint(theta, value);
  return value;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (grad_samples == 0) throw InvalidArgument("grad_samples must be at least 1");
  if (hess_samples == 0) throw InvalidArgument("hess_samples must be at least 1");
}

double weight_offset(const model::LogJointModel& model, ScoreWeight weight) {
  if (weight == ScoreWeight::log_posterior && model.log_evidence()) return *model.log_evidence();
  return 0.0;
}

StructuredMatrix::StructuredMatrix(BlockDiagonal diag_blocks, Vector weights, Matrix directions)
    : diag_(std::move(diag_blocks)), weights_(std::move(weights)), directions_(std::move(directions)) {
  if (directions_.cols() != weights_.size()) {
    throw DimensionMismatch("rank-one weights", directions_.cols(), weights_.size());
  }
  if (weights_.size() > 0 && directions_.rows() != diag_.dim()) {
    throw DimensionMismatch("rank-one directions", diag_.dim(), directions_.rows());
  }
  if (weights_.size() == 0) directions_.resize(diag_.dim(), 0);
}

StructuredMatrix::StructuredMatrix(BlockDiagonal diag_blocks)
    : StructuredMatrix(std::move(diag_blocks), Vector(0), Matrix(0, 0)) {}

Vector StructuredMatrix::apply(const Vector& v) const {
  if (v.size() != dim()) throw DimensionMismatch("structured matvec", dim(), v.size());
  Vector out = diag_.apply(v);
  if (rank() > 0) {
    const Vector projections = (directions_.transpose() * v).cwiseProduct(weights_);
    out.noalias() += directions_ * projections;
  }
  return out;
}

Matrix StructuredMatrix::densify() const {
  Matrix m = diag_.densify();
  for (Index i = 0; i < rank(); ++i) {
    m.selfadjointView<Eigen::Lower>().rankUpdate(directions_.col(i), weights_[i]);
  }
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  return m;
}

StructuredMatrix StructuredMatrix::damped_negation(double lambda) const {
  BlockDiagonal diag = diag_;
  diag *= -1.0;
  diag.shift_diagonal(lambda);
  return StructuredMatrix(std::move(diag), -weights_, directions_);
}

Vector PerSampleCurvature::apply(const Vector& v) const {
  if (v.size() != dim()) throw DimensionMismatch("per-sample curvature matvec", dim(), v.size());
  Vector out = diag_blocks.apply(v);
  out.noalias() += (log_weight * direction.dot(v)) * direction;
  return out;
}

Matrix PerSampleCurvature::densify() const {
  Matrix m = diag_blocks.densify();
  m.selfadjointView<Eigen::Lower>().rankUpdate(direction, log_weight);
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  return m;
}

Vector structured_matvec(const StructuredMatrix& h, const Vector& v) { return h.apply(v); }

Vector structured_matvec(const PerSampleCurvature& x, const Vector& v) { return x.apply(v); }

double estimate_elbo(const model::LogJointModel& model, const family::VariationalFamily& family,
                     const Vector& params, std::size_t samples, Rng& rng) {
  check_consistent(model, family, params);
  if (samples == 0) throw InvalidArgument("ELBO sample count must be at least 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    sum += checked_log_joint(model, family.sample_one(params, rng));
  }
  return sum / static_cast<double>(samples) + family.entropy(params);
}

double estimate_elbo(const model::LogJointModel& model, const family::VariationalFamily& family,
                     const Vector& params, const EstimatorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  return estimate_elbo(model, family, params, cfg.grad_samples, rng);
}

GradientEstimate estimate_gradient(const model::LogJointModel& model,
                                   const family::VariationalFamily& family, const Vector& params,
                                   const EstimatorConfig& cfg, Rng& rng) {
  cfg.validate();
  check_consistent(model, family, params);
  const std::size_t t = cfg.grad_samples;
  const double offset = weight_offset(model, cfg.weight);
  GradientEstimate out;
  out.sample_count = t;
  out.per_sample_logjoint.resize(static_cast<Index>(t));
  Vector acc = Vector::Zero(family.param_dim());
  for (std::size_t i = 0; i < t; ++i) {
    const Vector theta = family.sample_one(params, rng);
    const double lj = checked_log_joint(model, theta);
    out.per_sample_logjoint[static_cast<Index>(i)] = lj;
    acc.noalias() += (lj - offset) * family.score(params, theta);
  }
  out.value = acc / static_cast<double>(t) + family.entropy_grad(params);
  return out;
}

GradientEstimate estimate_gradient(const model::LogJointModel& model,
                                   const family::VariationalFamily& family, const Vector& params,
                                   const EstimatorConfig& cfg) {
  Rng rng(cfg.seed);
  return estimate_gradient(model, family, params, cfg, rng);
}

StructuredHessian estimate_hessian_structured(const model::LogJointModel& model,
                                              const family::VariationalFamily& family,
                                              const Vector& params, const EstimatorConfig& cfg,
                                              Rng& rng) {
  cfg.validate();
  check_consistent(model, family, params);
  const std::size_t s = cfg.hess_samples;
  const double inv_s = 1.0 / static_cast<double>(s);
  const double offset = weight_offset(model, cfg.weight);

  BlockDiagonal diag = BlockDiagonal::zeros(family.descriptor().block_sizes());
  Vector weights(static_cast<Index>(s));
  Matrix directions(family.param_dim(), static_cast<Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    const Vector theta = family.sample_one(params, rng);
    const double ell = checked_log_joint(model, theta) - offset;
    family.add_score_hessian_blocks(params, theta, ell, diag);
    weights[static_cast<Index>(i)] = ell * inv_s;
    directions.col(static_cast<Index>(i)) = family.score(params, theta);
  }
  diag *= inv_s;
  diag.add_scaled(family.entropy_hessian_blocks(params), 1.0);
  return StructuredHessian(std::move(diag), std::move(weights), std::move(directions));
}

StructuredHessian estimate_hessian_structured(const model::LogJointModel& model,
                                              const family::VariationalFamily& family,
                                              const Vector& params, const EstimatorConfig& cfg) {
  Rng rng(cfg.seed);
  return estimate_hessian_structured(model, family, params, cfg, rng);
}

Matrix estimate_hessian_dense(const model::LogJointModel& model,
                              const family::VariationalFamily& family, const Vector& params,
                              const EstimatorConfig& cfg, Rng& rng) {
  if (family.param_dim() > kMaxDenseDim) {
    throw InvalidArgument("parameter dimension " + std::to_string(family.param_dim()) +
                          " exceeds the dense Hessian limit of " + std::to_string(kMaxDenseDim));
  }
  const Matrix m = estimate_hessian_structured(model, family, params, cfg, rng).densify();
  return 0.5 * (m + m.transpose());
}

Matrix estimate_hessian_dense(const model::LogJointModel& model,
                              const family::VariationalFamily& family, const Vector& params,
                              const EstimatorConfig& cfg) {
  Rng rng(cfg.seed);
  return estimate_hessian_dense(model, family, params, cfg, rng);
}

PerSampleCurvature sample_curvature(const model::LogJointModel& model,
                                    const family::VariationalFamily& family, const Vector& params,
                                    Rng& rng, ScoreWeight weight) {
  check_consistent(model, family, params);
  const Vector theta = family.sample_one(params, rng);
  PerSampleCurvature x;
  x.log_weight = checked_log_joint(model, theta) - weight_offset(model, weight);
  x.direction = family.score(params, theta);
  x.diag_blocks = family.entropy_hessian_blocks(params);
  family.add_score_hessian_blocks(params, theta, x.log_weight, x.diag_blocks);
  return x;
}

}  // namespace sosvi::est
