#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "sosvi/common.hpp"
#include "sosvi/var_family.hpp"

namespace sosvi::model {

struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

/// A black-box log-joint ln p(theta, X), optionally with its exact Gaussian
/// posterior and log-evidence when the model is conjugate.
///
/// Immutable after construction; `log_joint` is pure and thread-safe.
class LogJointModel {
 public:
  using LogJointFn = std::function<double(const Vector&)>;

  LogJointModel(std::string name, Index latent_dim, LogJointFn log_joint,
                std::optional<GaussianPosterior> exact_posterior = std::nullopt,
                std::optional<double> log_evidence = std::nullopt);

  const std::string& name() const { return name_; }
  Index latent_dim() const { return latent_dim_; }
  double log_joint(const Vector& theta) const;
  const std::optional<GaussianPosterior>& exact_posterior() const { return exact_posterior_; }
  std::optional<double> log_evidence() const { return log_evidence_; }

 private:
  std::string name_;
  Index latent_dim_;
  LogJointFn log_joint_;
  std::optional<GaussianPosterior> exact_posterior_;
  std::optional<double> log_evidence_;
};

/// Observed data: rows are data points.
struct Dataset {
  Matrix observations;
  std::optional<Vector> targets;

  Index rows() const { return observations.rows(); }
  void validate() const;
};

/// Reads comma-separated reals. A first row that does not parse as numbers is
/// treated as a header. With `last_column_is_target` the final column becomes
/// `targets`.
Dataset read_csv_dataset(std::istream& in, bool last_column_is_target);
Dataset load_csv_dataset(const std::string& path, bool last_column_is_target);

/// Scalar theta with prior N(prior_mean, prior_var) and x_j ~ N(theta, noise_var).
LogJointModel conjugate_gaussian(std::span<const double> data, double prior_mean, double prior_var,
                                 double noise_var);

/// w ~ N(0, I / prior_precision), y_j ~ N(x_j' w, noise_var).
LogJointModel bayes_linreg(const Matrix& design, const Vector& targets, double prior_precision,
                           double noise_var);

/// w ~ N(0, I / prior_precision), y_j ~ Bernoulli(logistic(x_j' w)). No exact posterior.
LogJointModel bayes_logreg(const Matrix& design, const Vector& labels, double prior_precision);

/// Closed-form KL(q || p(theta | X)) for a mean-field Gaussian q and the
/// model's (possibly correlated) Gaussian posterior.
double exact_kl_to_posterior(const family::VariationalFamily& family, const Vector& params,
                             const LogJointModel& model);

/// ln(1 + e^z) without overflow.
double softplus(double z);

}  // namespace sosvi::model
