#pragma once

#include <functional>

#include "sosvi/common.hpp"
#include "sosvi/model.hpp"

// Deterministic reference values for scalar-latent models under a Gaussian
// q(theta) = N(mu, exp(rho)^2), params = (mu, rho). Nothing here touches the
// variational-family or estimator code, so they can serve as oracles for it.
namespace sosvi::oracles {

/// E[f(mean + sd z)] for z ~ N(0, 1) by adaptive Gauss-Kronrod on |z| <= 12.
double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd);

/// E_q[ln p(theta, X)] + H(q).
double quadrature_elbo(const model::LogJointModel& model, const Vector& params);

/// Gradient of the ELBO written as E_q[score * ln p] + grad H, each component
/// integrated separately with a closed-form Gaussian score.
Vector quadrature_gradient(const model::LogJointModel& model, const Vector& params);

/// Central differences of `quadrature_elbo`; an independent cross-check of
/// `quadrature_gradient`.
Vector fd_quadrature_gradient(const model::LogJointModel& model, const Vector& params,
                              double h = 1e-4);

/// Symmetrized central-difference Jacobian of `quadrature_gradient`.
Matrix fd_quadrature_hessian(const model::LogJointModel& model, const Vector& params,
                             double h = 1e-4);

/// ln of the integral of exp(ln p(theta, X)) over theta, integrating on
/// center +- 30 scale.
double quadrature_log_evidence(const model::LogJointModel& model, double center, double scale);

}  // namespace sosvi::oracles
