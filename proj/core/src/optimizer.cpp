#include "sosvi/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

#include <Eigen/Cholesky>

namespace sosvi::opt {

namespace {

struct SchemeEntry {
  Scheme scheme;
  std::string_view name;
};

constexpr SchemeEntry kSchemes[] = {
    {Scheme::first_order, "first-order"},  {Scheme::dense_newton, "dense-newton"},
    {Scheme::scheme1_sm, "scheme1-sm"},    {Scheme::scheme1_cg, "scheme1-cg"},
    {Scheme::scheme2, "scheme2"},
};

void check_gradient(const Vector& g) {
  if (!g.allFinite()) throw Error("gradient estimate is not finite");
}

/// params + step_size * direction, with the increment clipped to max_step_norm.
StepResult take_step(const Vector& params, Vector gradient, const Vector& direction,
                     double step_size, const StepControl& ctl, StepDiagnostics diag) {
  Vector delta = step_size * direction;
  if (!delta.allFinite()) throw Error("step direction is not finite");
  double norm = delta.norm();
  if (norm > ctl.max_step_norm) {
    delta *= ctl.max_step_norm / norm;
    norm = ctl.max_step_norm;
  }
  StepResult out;
  out.params = params + delta;
  out.gradient = std::move(gradient);
  out.step_norm = norm;
  out.diagnostics = diag;
  return out;
}

double next_damping(double lambda, const StepControl& ctl) {
  return lambda == 0.0 ? ctl.damping_floor : lambda * 10.0;
}

/// Runs `solve(lambda)` starting from ctl.damping, raising lambda on
/// indefinite or singular curvature until it would exceed ctl.max_damping.
template <typename Solve>
Vector with_damping_escalation(const StepControl& ctl, StepDiagnostics& diag, Solve&& solve) {
  double lambda = ctl.damping;
  while (true) {
    diag.damping = lambda;
    const bool last = next_damping(lambda, ctl) > ctl.max_damping;
    try {
      return solve(lambda);
    } catch (const IndefiniteCurvature&) {
      if (last) throw;
    } catch (const SingularMatrix&) {
      if (last) throw;
    } catch (const SingularUpdate&) {
      if (last) throw;
    }
    lambda = next_damping(lambda, ctl);
    ++diag.escalations;
  }
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  for (const auto& e : kSchemes) {
    if (e.scheme == scheme) return e.name;
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (const auto& e : kSchemes) {
    if (e.name == name) return e.scheme;
  }
  return std::nullopt;
}

std::vector<Scheme> all_schemes() {
  std::vector<Scheme> out;
  for (const auto& e : kSchemes) out.push_back(e.scheme);
  return out;
}

MonteCarloObjective::MonteCarloObjective(const model::LogJointModel& model,
                                         const family::VariationalFamily& family,
                                         est::EstimatorConfig cfg, std::size_t elbo_samples)
    : model_(model), family_(family), cfg_(cfg), elbo_samples_(elbo_samples) {
  cfg_.validate();
  if (model_.latent_dim() != family_.latent_dim()) {
    throw DimensionMismatch("model latent dimension", family_.latent_dim(), model_.latent_dim());
  }
  if (elbo_samples_ == 0) elbo_samples_ = cfg_.grad_samples;
}

Vector MonteCarloObjective::gradient(const Vector& params, Rng& rng) const {
  return est::estimate_gradient(model_, family_, params, cfg_, rng).value;
}

Matrix MonteCarloObjective::dense_hessian(const Vector& params, Rng& rng) const {
  return est::estimate_hessian_dense(model_, family_, params, cfg_, rng);
}

est::StructuredHessian MonteCarloObjective::structured_hessian(const Vector& params, Rng& rng) const {
  return est::estimate_hessian_structured(model_, family_, params, cfg_, rng);
}

linalg::CurvatureOperator MonteCarloObjective::curvature_sample(const Vector& params, double damping,
                                                                Rng& rng) const {
  return linalg::CurvatureOperator::damped(
      est::sample_curvature(model_, family_, params, rng, cfg_.weight), damping);
}

double MonteCarloObjective::curvature_scale(const Vector& params, Rng& rng) const {
  const std::size_t s = cfg_.hess_samples;
  std::vector<est::PerSampleCurvature> pilot;
  pilot.reserve(s);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    pilot.push_back(est::sample_curvature(model_, family_, params, rng, cfg_.weight));
    const auto& x = pilot.back();
    double block_norm = 0.0;
    for (std::size_t b = 0; b < x.diag_blocks.block_count(); ++b) {
      block_norm = std::max(block_norm, x.diag_blocks.block(b).norm());
    }
    const double bound = std::abs(x.log_weight) * x.direction.squaredNorm() + block_norm;
    sum_sq += bound * bound;
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(s));
  const double inv_s = 1.0 / static_cast<double>(s);
  const double mean_norm = linalg::power_iteration_norm(
      [&](const Vector& v) {
        Vector out = Vector::Zero(v.size());
        for (const auto& x : pilot) out.noalias() += x.apply(v);
        return Vector(out * inv_s);
      },
      dim());
  return std::max(mean_norm, rms);
}

double MonteCarloObjective::elbo(const Vector& params, Rng& rng) const {
  return est::estimate_elbo(model_, family_, params, elbo_samples_, rng);
}

std::optional<double> MonteCarloObjective::kl_to_posterior(const Vector& params) const {
  if (!model_.exact_posterior() || !family_.descriptor().all_gaussian()) return std::nullopt;
  return model::exact_kl_to_posterior(family_, params, model_);
}

QuadraticObjective::QuadraticObjective(Vector optimum, est::StructuredMatrix a)
    : optimum_(std::move(optimum)), a_(std::move(a)) {
  if (a_.dim() != optimum_.size()) throw DimensionMismatch("quadratic form", optimum_.size(), a_.dim());
}

Vector QuadraticObjective::gradient(const Vector& params, Rng&) const {
  return -a_.apply(params - optimum_);
}

Matrix QuadraticObjective::dense_hessian(const Vector&, Rng&) const { return -a_.densify(); }

est::StructuredHessian QuadraticObjective::structured_hessian(const Vector&, Rng&) const {
  return a_.damped_negation(0.0);
}

linalg::CurvatureOperator QuadraticObjective::curvature_sample(const Vector&, double damping,
                                                               Rng&) const {
  est::StructuredMatrix k = a_;
  k.diag_blocks().shift_diagonal(damping);
  return linalg::CurvatureOperator::from_structured(std::move(k));
}

double QuadraticObjective::curvature_scale(const Vector&, Rng&) const {
  return linalg::power_iteration_norm([this](const Vector& v) { return a_.apply(v); }, dim());
}

double QuadraticObjective::elbo(const Vector& params, Rng&) const {
  const Vector diff = params - optimum_;
  return -0.5 * diff.dot(a_.apply(diff));
}

void StepControl::validate(Scheme scheme) const {
  if (scheme == Scheme::first_order && !step_size) {
    throw InvalidArgument("step_size is required for first-order steps");
  }
  if (step_size && !(*step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  if (!(damping >= 0.0)) throw InvalidArgument("damping must be non-negative");
  if (!(damping_floor > 0.0)) throw InvalidArgument("damping_floor must be positive");
  if (!(max_damping >= damping)) throw InvalidArgument("max_damping must be at least damping");
  if (c0 && !(*c0 > 0.0)) throw InvalidArgument("c0 must be positive");
  if (!(c0_factor > 0.0)) throw InvalidArgument("c0_factor must be positive");
  if (!(max_step_norm > 0.0)) throw InvalidArgument("max_step_norm must be positive");
  if (!(neumann_rel_tol >= 0.0)) throw InvalidArgument("neumann_rel_tol must be non-negative");
  if (neumann_max_steps == 0) throw InvalidArgument("neumann_max_steps must be at least 1");
  if (!(cg_rel_tol > 0.0)) throw InvalidArgument("cg_rel_tol must be positive");
}

void ConvergenceCriterion::validate() const {
  if (grad_norm_tol && !(*grad_norm_tol > 0.0)) throw InvalidArgument("grad_norm_tol must be positive");
  if (grad_norm_tol && grad_norm_window == 0) throw InvalidArgument("grad_norm_window must be at least 1");
  if (param_tol && !(*param_tol > 0.0)) throw InvalidArgument("param_tol must be positive");
}

StepResult step_first_order(const Objective& objective, const Vector& params, Rng& rng,
                            const StepControl& ctl) {
  ctl.validate(Scheme::first_order);
  Vector g = objective.gradient(params, rng);
  check_gradient(g);
  const Vector direction = g;
  return take_step(params, std::move(g), direction, *ctl.step_size, ctl, {});
}

StepResult step_dense_newton(const Objective& objective, const Vector& params, Rng& rng,
                             const StepControl& ctl) {
  ctl.validate(Scheme::dense_newton);
  Vector g = objective.gradient(params, rng);
  check_gradient(g);
  const Matrix h = objective.dense_hessian(params, rng);
  StepDiagnostics diag;
  const Vector y = with_damping_escalation(ctl, diag, [&](double lambda) {
    Matrix k = -h;
    k.diagonal().array() += lambda;
    if (Eigen::LLT<Matrix>(k).info() != Eigen::Success) {
      throw IndefiniteCurvature("dense curvature is not positive definite");
    }
    return linalg::dense_solve(k, g);
  });
  return take_step(params, std::move(g), y, ctl.second_order_step_size(), ctl, diag);
}

StepResult step_scheme1(const Objective& objective, const Vector& params, Rng& rng,
                        const StepControl& ctl, Scheme1Option option) {
  const Scheme scheme =
      option == Scheme1Option::sherman_morrison ? Scheme::scheme1_sm : Scheme::scheme1_cg;
  ctl.validate(scheme);
  Vector g = objective.gradient(params, rng);
  check_gradient(g);
  const est::StructuredHessian h = objective.structured_hessian(params, rng);
  StepDiagnostics diag;
  Vector y;
  if (option == Scheme1Option::sherman_morrison) {
    y = with_damping_escalation(ctl, diag, [&](double lambda) {
      linalg::InvertOptions opts;
      opts.require_positive_definite = true;
      const Matrix k_inv = linalg::invert_structured(h.damped_negation(lambda), opts);
      return Vector(k_inv * g);
    });
  } else {
    const std::size_t max_iters =
        ctl.cg_max_iters > 0 ? ctl.cg_max_iters : static_cast<std::size_t>(2 * h.dim());
    y = with_damping_escalation(ctl, diag, [&](double lambda) {
      const auto op = linalg::CurvatureOperator::damped(h, lambda);
      const linalg::CgResult r = linalg::conjugate_gradient(op, g, ctl.cg_rel_tol, max_iters);
      diag.cg_iterations = r.iterations;
      return r.solution;
    });
  }
  return take_step(params, std::move(g), y, ctl.second_order_step_size(), ctl, diag);
}

StepResult step_scheme2(const Objective& objective, const Vector& params, Rng& rng,
                        const StepControl& ctl) {
  ctl.validate(Scheme::scheme2);
  Vector g = objective.gradient(params, rng);
  check_gradient(g);
  const double lambda = ctl.damping;
  double c0 = ctl.c0 ? *ctl.c0 : ctl.c0_factor * objective.curvature_scale(params, rng) + lambda;
  if (!(c0 > 0.0) || !std::isfinite(c0)) {
    throw Error("could not resolve C0 from the curvature scale; set it explicitly");
  }

  StepDiagnostics diag;
  diag.damping = lambda;
  linalg::NeumannOptions opts;
  opts.tol = ctl.neumann_rel_tol * g.norm();
  opts.max_steps = ctl.neumann_max_steps;
  opts.literal_update = ctl.neumann_literal_update;
  const linalg::CurvatureSource source = [&] {
    return objective.curvature_sample(params, lambda, rng);
  };
  linalg::NeumannResult r;
  for (int attempt = 0;; ++attempt) {
    opts.c0 = c0;
    try {
      r = linalg::neumann_inverse_apply(source, g, opts);
      break;
    } catch (const NeumannDiverged&) {
      if (attempt >= 1) throw;
      c0 *= 10.0;
      ++diag.escalations;
    }
  }
  diag.c0 = c0;
  diag.neumann_steps = r.steps;
  return take_step(params, std::move(g), r.solution, ctl.second_order_step_size(), ctl, diag);
}

StepResult step(Scheme scheme, const Objective& objective, const Vector& params, Rng& rng,
                const StepControl& ctl) {
  switch (scheme) {
    case Scheme::first_order:
      return step_first_order(objective, params, rng, ctl);
    case Scheme::dense_newton:
      return step_dense_newton(objective, params, rng, ctl);
    case Scheme::scheme1_sm:
      return step_scheme1(objective, params, rng, ctl, Scheme1Option::sherman_morrison);
    case Scheme::scheme1_cg:
      return step_scheme1(objective, params, rng, ctl, Scheme1Option::conjugate_gradient);
    case Scheme::scheme2:
      return step_scheme2(objective, params, rng, ctl);
  }
  throw InvalidArgument("unknown scheme");
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::max_iterations:
      return "max-iterations";
    case StopReason::grad_norm:
      return "grad-norm";
    case StopReason::param_change:
      return "param-change";
  }
  return "unknown";
}

RunAborted::RunAborted(RunResult partial, const std::string& cause)
    : Error("run aborted after " + std::to_string(partial.trace.size()) + " iterations: " + cause),
      partial_(std::move(partial)) {}

RunResult run(Scheme scheme, const Objective& objective, const Vector& initial,
              const StepControl& ctl, const ConvergenceCriterion& criterion,
              const RunOptions& options) {
  ctl.validate(scheme);
  criterion.validate();
  if (initial.size() != objective.dim()) {
    throw DimensionMismatch("initial parameters", objective.dim(), initial.size());
  }

  Rng rng(options.seed);
  std::seed_seq elbo_seed{static_cast<std::uint32_t>(options.seed),
                          static_cast<std::uint32_t>(options.seed >> 32), 0x454c424fu};
  Rng elbo_rng(elbo_seed);

  RunResult result;
  result.params = initial;
  std::deque<double> recent;
  double recent_sum = 0.0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t it = 1; it <= criterion.max_iterations; ++it) {
    StepResult s;
    TraceRecord rec;
    try {
      s = step(scheme, objective, result.params, rng, ctl);
      rec.elbo_estimate = objective.elbo(s.params, elbo_rng);
      rec.kl_exact = objective.kl_to_posterior(s.params);
    } catch (const Error& e) {
      throw RunAborted(std::move(result), e.what());
    }
    result.params = s.params;
    rec.iteration = it;
    rec.grad_norm = s.gradient.norm();
    rec.step_norm = s.step_norm;
    rec.diagnostics = s.diagnostics;
    if (options.record_wallclock) {
      rec.wallclock_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.trace.push_back(rec);

    if (criterion.grad_norm_tol) {
      recent.push_back(rec.grad_norm);
      recent_sum += rec.grad_norm;
      if (recent.size() > criterion.grad_norm_window) {
        recent_sum -= recent.front();
        recent.pop_front();
      }
      if (recent.size() == criterion.grad_norm_window &&
          recent_sum / static_cast<double>(recent.size()) <= *criterion.grad_norm_tol) {
        result.reason = StopReason::grad_norm;
        return result;
      }
    }
    if (criterion.param_tol && rec.step_norm <= *criterion.param_tol) {
      result.reason = StopReason::param_change;
      return result;
    }
  }
  result.reason = StopReason::max_iterations;
  return result;
}

}  // namespace sosvi::opt
