#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sosvi/common.hpp"
#include "sosvi/errors.hpp"
#include "sosvi/estimators.hpp"
#include "sosvi/linalg.hpp"
#include "sosvi/model.hpp"
#include "sosvi/var_family.hpp"

namespace sosvi::opt {

enum class Scheme {
  first_order,
  dense_newton,
  scheme1_sm,
  scheme1_cg,
  scheme2,
};

std::string_view scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);
std::vector<Scheme> all_schemes();

/// The ELBO L(params) seen through its estimators. Every draw comes from the
/// caller's stream, so a step is replayable from the stream state.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual Vector gradient(const Vector& params, Rng& rng) const = 0;
  virtual Matrix dense_hessian(const Vector& params, Rng& rng) const = 0;
  virtual est::StructuredHessian structured_hessian(const Vector& params, Rng& rng) const = 0;
  /// One curvature draw as the operator lambda I - X.
  virtual linalg::CurvatureOperator curvature_sample(const Vector& params, double damping,
                                                     Rng& rng) const = 0;
  /// Scale of the curvature draws; C0 is a multiple of it.
  virtual double curvature_scale(const Vector& params, Rng& rng) const = 0;
  virtual double elbo(const Vector& params, Rng& rng) const = 0;
  virtual std::optional<double> kl_to_posterior(const Vector& /*params*/) const {
    return std::nullopt;
  }
};

/// Monte Carlo estimates of the ELBO of `model` under `family`. Holds
/// references; both must outlive the objective.
class MonteCarloObjective : public Objective {
 public:
  MonteCarloObjective(const model::LogJointModel& model, const family::VariationalFamily& family,
                      est::EstimatorConfig cfg, std::size_t elbo_samples = 0);

  Index dim() const override { return family_.param_dim(); }
  Vector gradient(const Vector& params, Rng& rng) const override;
  Matrix dense_hessian(const Vector& params, Rng& rng) const override;
  est::StructuredHessian structured_hessian(const Vector& params, Rng& rng) const override;
  linalg::CurvatureOperator curvature_sample(const Vector& params, double damping,
                                             Rng& rng) const override;
  /// Draws `hess_samples` pilot curvatures X_i and returns the larger of the
  /// spectral norm of their mean and the RMS of the per-draw norm bounds
  /// |ell_i| ||u_i||^2 + max_b ||B_b||_F.
  double curvature_scale(const Vector& params, Rng& rng) const override;
  double elbo(const Vector& params, Rng& rng) const override;
  std::optional<double> kl_to_posterior(const Vector& params) const override;

  const est::EstimatorConfig& config() const { return cfg_; }

 private:
  const model::LogJointModel& model_;
  const family::VariationalFamily& family_;
  est::EstimatorConfig cfg_;
  std::size_t elbo_samples_;
};

/// L(x) = -1/2 (x - optimum)' A (x - optimum) with SPD A in structured form.
/// Every estimate is exact; the curvature source always returns lambda I + A.
class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(Vector optimum, est::StructuredMatrix a);

  Index dim() const override { return optimum_.size(); }
  Vector gradient(const Vector& params, Rng& rng) const override;
  Matrix dense_hessian(const Vector& params, Rng& rng) const override;
  est::StructuredHessian structured_hessian(const Vector& params, Rng& rng) const override;
  linalg::CurvatureOperator curvature_sample(const Vector& params, double damping,
                                             Rng& rng) const override;
  double curvature_scale(const Vector& params, Rng& rng) const override;
  double elbo(const Vector& params, Rng& rng) const override;

  const Vector& optimum() const { return optimum_; }

 private:
  Vector optimum_;
  est::StructuredMatrix a_;
};

struct StepControl {
  /// Required for first-order steps; second-order steps default to 1.
  std::optional<double> step_size;
  double damping = 0.0;
  /// First non-zero damping tried when escalating from zero.
  double damping_floor = 1e-3;
  double max_damping = 1e6;
  /// Scheme II scaling constant; empty means resolve it every step.
  std::optional<double> c0;
  double c0_factor = 10.0;
  double max_step_norm = 1.0;
  /// Neumann stopping tolerance relative to ||g||.
  double neumann_rel_tol = 1e-6;
  std::size_t neumann_max_steps = 200;
  bool neumann_literal_update = false;
  double cg_rel_tol = 1e-10;
  /// Zero means 2 * dim.
  std::size_t cg_max_iters = 0;

  void validate(Scheme scheme) const;
  double second_order_step_size() const { return step_size.value_or(1.0); }
};

struct ConvergenceCriterion {
  std::optional<double> grad_norm_tol = 1e-3;
  std::size_t grad_norm_window = 5;
  std::optional<double> param_tol = 1e-8;
  std::size_t max_iterations = 1000;

  void validate() const;
};

struct StepDiagnostics {
  double damping = 0.0;
  std::size_t escalations = 0;
  std::size_t cg_iterations = 0;
  std::size_t neumann_steps = 0;
  std::optional<double> c0;
};

struct StepResult {
  Vector params;
  Vector gradient;
  double step_norm = 0.0;
  StepDiagnostics diagnostics;
};

StepResult step_first_order(const Objective& objective, const Vector& params, Rng& rng,
                            const StepControl& ctl);
StepResult step_dense_newton(const Objective& objective, const Vector& params, Rng& rng,
                             const StepControl& ctl);

enum class Scheme1Option { sherman_morrison, conjugate_gradient };

StepResult step_scheme1(const Objective& objective, const Vector& params, Rng& rng,
                        const StepControl& ctl, Scheme1Option option);
StepResult step_scheme2(const Objective& objective, const Vector& params, Rng& rng,
                        const StepControl& ctl);
StepResult step(Scheme scheme, const Objective& objective, const Vector& params, Rng& rng,
                const StepControl& ctl);

struct TraceRecord {
  std::size_t iteration = 0;
  double elbo_estimate = 0.0;
  double grad_norm = 0.0;
  std::optional<double> kl_exact;
  double step_norm = 0.0;
  double wallclock_ms = 0.0;
  StepDiagnostics diagnostics;
};

enum class StopReason { max_iterations, grad_norm, param_change };

std::string_view stop_reason_name(StopReason reason);

struct RunOptions {
  std::uint64_t seed = 0;
  /// When false every wallclock_ms is written as 0 so traces are reproducible.
  bool record_wallclock = true;
};

struct RunResult {
  Vector params;
  std::vector<TraceRecord> trace;
  StopReason reason = StopReason::max_iterations;
};

/// A step failed; carries everything recorded before the failure.
class RunAborted : public Error {
 public:
  RunAborted(RunResult partial, const std::string& cause);
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

/// Iterates `scheme` from `initial` until a criterion fires. Steps draw from
/// a stream seeded with `options.seed`; trace ELBO estimates use a second,
/// independent stream so they do not perturb the optimization.
RunResult run(Scheme scheme, const Objective& objective, const Vector& initial,
              const StepControl& ctl, const ConvergenceCriterion& criterion,
              const RunOptions& options = {});

}  // namespace sosvi::opt
