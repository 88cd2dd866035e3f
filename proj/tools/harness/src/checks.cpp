#include "sosvi/harness/checks.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "sosvi/errors.hpp"
#include "sosvi/estimators.hpp"
#include "sosvi/linalg.hpp"
#include "sosvi/oracles/finite_difference.hpp"
#include "sosvi/oracles/fixtures.hpp"
#include "sosvi/oracles/quadrature.hpp"
#include "sosvi/oracles/random_instances.hpp"
#include "sosvi/optimizer.hpp"

namespace sosvi::harness {

namespace {

using family::GaussianMeanField;

CheckResult result(std::string name, double value, double limit, std::string detail = {}) {
  return CheckResult{std::move(name), value <= limit, value, limit, std::move(detail)};
}

Vector gaussian_params(std::initializer_list<double> means, std::initializer_list<double> log_scales) {
  return GaussianMeanField::make_params(Eigen::Map<const Vector>(means.begin(), means.size()),
                                        Eigen::Map<const Vector>(log_scales.begin(), log_scales.size()));
}

// Largest |z| of the componentwise mean of `draws` against `target`.
double max_abs_z(const std::vector<Vector>& draws, const Vector& target) {
  const auto n = static_cast<double>(draws.size());
  Vector mean = Vector::Zero(target.size());
  for (const auto& g : draws) mean += g;
  mean /= n;
  Vector var = Vector::Zero(target.size());
  for (const auto& g : draws) var += (g - mean).cwiseAbs2();
  var /= (n - 1.0);
  double worst = 0.0;
  for (Index i = 0; i < target.size(); ++i) {
    const double se = std::sqrt(var[i] / n);
    const double diff = mean[i] - target[i];
    const double z = se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : INFINITY);
    worst = std::max(worst, z);
  }
  return worst;
}

CheckResult score_identity(const CheckContext& ctx) {
  const auto fam = ctx.family_factory(3);
  const Vector params = gaussian_params({0.5, -1.0, 2.0}, {0.0, -0.7, 0.4});
  Rng rng(11);
  std::vector<Vector> scores;
  for (int i = 0; i < 20000; ++i) scores.push_back(fam->score(params, fam->sample_one(params, rng)));
  const double z = max_abs_z(scores, Vector::Zero(params.size()));
  return result("score-identity", z, 5.0, "max |z| of E_q[score] = 0 over 20000 draws");
}

CheckResult derivative_consistency(const CheckContext& ctx) {
  const auto fam = ctx.family_factory(3);
  const Vector params = gaussian_params({0.3, -0.2, 1.1}, {0.1, -0.4, 0.25});
  Rng rng(12);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector theta = fam->sample_one(params, rng);
    const Vector fd_score = oracles::fd_gradient(
        [&](const Vector& p) { return fam->log_density(p, theta); }, params);
    worst = std::max(worst, oracles::max_relative_error(fam->score(params, theta), fd_score));
    const Matrix fd_hess = oracles::fd_jacobian(
        [&](const Vector& p) { return fam->score(p, theta); }, params);
    const BlockDiagonal blocks = fam->score_hessian_blocks(params, theta);
    for (std::size_t b = 0; b < blocks.block_count(); ++b) {
      const Index off = blocks.offset(b);
      const Index n = blocks.block(b).rows();
      worst = std::max(worst, oracles::max_relative_error(blocks.block(b),
                                                          fd_hess.block(off, off, n, n)));
    }
  }
  const Vector fd_entropy =
      oracles::fd_gradient([&](const Vector& p) { return fam->entropy(p); }, params);
  worst = std::max(worst, oracles::max_relative_error(fam->entropy_grad(params), fd_entropy));
  return result("derivative-consistency", worst, 1e-6,
                "score, score Hessian blocks and entropy gradient vs central differences");
}

CheckResult block_sparsity(const CheckContext& ctx) {
  const auto fam = ctx.family_factory(3);
  const Vector params = gaussian_params({0.0, 1.0, -1.0}, {0.2, 0.0, -0.3});
  Rng rng(13);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector theta = fam->sample_one(params, rng);
    const Matrix h = oracles::fd_jacobian([&](const Vector& p) { return fam->score(p, theta); }, params);
    const auto& desc = fam->descriptor();
    for (Index a = 0; a < desc.factor_count(); ++a) {
      for (Index b = 0; b < desc.factor_count(); ++b) {
        if (a == b) continue;
        const Matrix cross = h.block(desc.block_offset(a), desc.block_offset(b), desc.block_size(a),
                                     desc.block_size(b));
        worst = std::max(worst, cross.cwiseAbs().maxCoeff());
      }
    }
  }
  return result("block-sparsity", worst, 1e-8, "largest off-block entry of the log q Hessian");
}

CheckResult gradient_consistency(const CheckContext& ctx) {
  const auto model = oracles::conjugate_fixture();
  const auto fam = ctx.family_factory(1);
  const std::vector<Vector> points = {gaussian_params({0.0}, {0.0}), gaussian_params({1.0}, {-1.0}),
                                      gaussian_params({0.5}, {-1.8})};
  est::EstimatorConfig cfg;
  cfg.grad_samples = 200;
  Rng rng(14);
  double worst = 0.0;
  for (const auto& p : points) {
    std::vector<Vector> draws;
    for (int r = 0; r < 100; ++r) draws.push_back(est::estimate_gradient(model, *fam, p, cfg, rng).value);
    worst = std::max(worst, max_abs_z(draws, oracles::quadrature_gradient(model, p)));
  }
  return result("gradient-consistency", worst, 4.0,
                "max |z| of the mean gradient estimate vs quadrature, 3 points x 100 x T=200");
}

CheckResult hessian_unbiasedness(const CheckContext& ctx) {
  const auto model = oracles::conjugate_fixture();
  const auto fam = ctx.family_factory(1);
  const std::vector<Vector> points = {gaussian_params({0.9}, {-1.5}), gaussian_params({1.2}, {-2.0})};
  est::EstimatorConfig cfg;
  cfg.hess_samples = 1000;
  Rng rng(15);
  double worst = 0.0;
  for (const auto& p : points) {
    std::vector<Vector> draws;
    for (int r = 0; r < 50; ++r) {
      const Matrix h = est::estimate_hessian_dense(model, *fam, p, cfg, rng);
      draws.push_back(Eigen::Map<const Vector>(h.data(), h.size()));
    }
    const Matrix ref = oracles::fd_quadrature_hessian(model, p);
    worst = std::max(worst, max_abs_z(draws, Eigen::Map<const Vector>(ref.data(), ref.size())));
  }
  return result("hessian-unbiasedness", worst, 4.0,
                "max |z| of the mean Hessian estimate vs quadrature, 2 points x 50 x S=1000");
}

CheckResult structure_equivalence(const CheckContext& ctx) {
  const auto model = oracles::linreg_fixture();
  const auto fam = ctx.family_factory(model.latent_dim());
  const Vector params = GaussianMeanField::make_params(Vector::Constant(5, 0.1), Vector::Constant(5, -1.0));
  est::EstimatorConfig cfg;
  cfg.hess_samples = 8;
  cfg.seed = 16;
  const auto structured = est::estimate_hessian_structured(model, *fam, params, cfg);
  const Matrix dense = est::estimate_hessian_dense(model, *fam, params, cfg);
  const double bit_diff = (structured.densify() - dense).cwiseAbs().maxCoeff();
  Rng rng(17);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vector v = oracles::random_vector(params.size(), rng);
    const Vector ref = dense * v;
    worst = std::max(worst, (structured.apply(v) - ref).norm() / ref.norm());
  }
  return result("structure-equivalence", std::max(bit_diff, worst), 1e-10,
                "densify vs dense estimate (exact) and matvec relative error");
}

CheckResult sherman_morrison(const CheckContext&) {
  Rng rng(18);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto kmat = oracles::random_spd_structured(20, 5, rng);
    const Matrix ref = linalg::dense_invert(kmat.densify());
    worst = std::max(worst, (linalg::invert_structured(kmat) - ref).norm() / ref.norm());
  }
  return result("sherman-morrison", worst, 1e-8, "cascade inverse vs dense inverse, relative Frobenius");
}

CheckResult cg_agreement(const CheckContext&) {
  Rng rng(19);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto kmat = oracles::random_spd_structured(50, 4, rng);
    const Vector b = oracles::random_vector(50, rng);
    const Vector ref = linalg::dense_solve(kmat.densify(), b);
    const auto cg = linalg::conjugate_gradient(linalg::CurvatureOperator::from_structured(kmat), b,
                                               1e-12, 200);
    worst = std::max(worst, (cg.solution - ref).norm() / ref.norm());
  }
  return result("cg-agreement", worst, 1e-8, "CG vs dense solve, relative error");
}

CheckResult neumann_agreement(const CheckContext&) {
  Rng rng(20);
  const Matrix k = oracles::random_spd(10, 1.0, 4.0, rng);
  const Vector g = oracles::random_vector(10, rng);
  linalg::NeumannOptions opts;
  opts.c0 = 5.0;
  opts.tol = 0.0;
  opts.max_steps = 500;
  const auto op = linalg::CurvatureOperator::from_dense(k);
  const auto r = linalg::neumann_inverse_apply([&] { return op; }, g, opts);
  const Vector ref = linalg::dense_solve(k, g);
  return result("neumann-agreement", (r.solution - ref).norm() / ref.norm(), 1e-6,
                "deterministic-source series vs dense solve, T_max = 500");
}

CheckResult evidence_identity(const CheckContext& ctx) {
  const auto model = oracles::conjugate_fixture();
  const auto& post = *model.exact_posterior();
  const double m = post.mean[0];
  const double sd = std::sqrt(post.covariance(0, 0));
  const double quad = oracles::quadrature_log_evidence(model, m, sd);
  double worst = std::abs(quad - *model.log_evidence());
  const auto fam = ctx.family_factory(1);
  for (const Vector& p : {gaussian_params({0.0}, {0.0}), gaussian_params({m}, {std::log(sd)})}) {
    const double kl = model::exact_kl_to_posterior(*fam, p, model);
    worst = std::max(worst, std::abs(kl - (quad - oracles::quadrature_elbo(model, p))));
  }
  return result("evidence-identity", worst, 1e-8,
                "closed-form log evidence and KL = ln p(X) - ELBO vs quadrature");
}

CheckResult newton_exactness(const CheckContext&) {
  Rng rng(21);
  const Index d = 10;
  const opt::QuadraticObjective q(oracles::random_vector(d, rng), oracles::random_spd_structured(d, 3, rng));
  const Vector start = q.optimum() + oracles::random_vector(d, rng);
  opt::StepControl ctl;
  ctl.max_step_norm = 1e12;
  ctl.neumann_rel_tol = 0.0;
  ctl.neumann_max_steps = 5000;
  double worst = 0.0;
  for (opt::Scheme s : {opt::Scheme::dense_newton, opt::Scheme::scheme1_sm, opt::Scheme::scheme1_cg,
                        opt::Scheme::scheme2}) {
    Rng step_rng(0);
    const auto r = opt::step(s, q, start, step_rng, ctl);
    worst = std::max(worst, (r.params - q.optimum()).norm());
  }
  return result("newton-exactness", worst, 1e-6, "distance to the optimum after one step, all second-order schemes");
}

}  // namespace

const std::vector<Check>& check_registry() {
  static const std::vector<Check> checks = {
      {"score-identity", score_identity},
      {"derivative-consistency", derivative_consistency},
      {"block-sparsity", block_sparsity},
      {"gradient-consistency", gradient_consistency},
      {"hessian-unbiasedness", hessian_unbiasedness},
      {"structure-equivalence", structure_equivalence},
      {"sherman-morrison", sherman_morrison},
      {"cg-agreement", cg_agreement},
      {"neumann-agreement", neumann_agreement},
      {"evidence-identity", evidence_identity},
      {"newton-exactness", newton_exactness},
  };
  return checks;
}

std::vector<CheckResult> run_checks(const CheckContext& ctx) {
  std::vector<CheckResult> out;
  for (const auto& c : check_registry()) {
    try {
      CheckResult r = c.run(ctx);
      if (!std::isfinite(r.value)) r.passed = false;
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.push_back(CheckResult{c.name, false, NAN, NAN, std::string("threw: ") + e.what()});
    }
  }
  return out;
}

void print_check_table(std::ostream& out, const std::vector<CheckResult>& results, bool verbose) {
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << r.name
        << (r.passed ? "PASS" : "FAIL");
    if (verbose) {
      out << "  value=" << format_double(r.value) << " limit=" << format_double(r.limit);
      if (r.passed && r.limit > 0.0) out << " margin=" << format_double(r.limit - r.value);
      if (!r.detail.empty()) out << "  (" << r.detail << ")";
    } else if (!r.passed && !r.detail.empty()) {
      out << "  " << r.detail;
    }
    out << '\n';
  }
}

int run_check_command(std::ostream& out, bool verbose, const CheckContext& ctx) {
  const auto results = run_checks(ctx);
  print_check_table(out, results, verbose);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  return ok ? exit_ok : exit_check_failure;
}

}  // namespace sosvi::harness
