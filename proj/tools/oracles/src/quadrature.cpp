#include "sosvi/oracles/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sosvi/errors.hpp"

namespace sosvi::oracles {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kHalfLog2PiE = 1.41893853320467274178;
constexpr double kZMax = 12.0;

double integrate(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

void check_scalar(const model::LogJointModel& model, const Vector& params) {
  if (model.latent_dim() != 1) {
    throw InvalidArgument("quadrature oracles need a scalar latent variable");
  }
  if (params.size() != 2) throw DimensionMismatch("quadrature parameters", 2, params.size());
}

double lj(const model::LogJointModel& model, double t) {
  return model.log_joint(Vector::Constant(1, t));
}

}  // namespace

double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd) {
  return integrate(
      [&](double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z) * f(mean + sd * z); }, -kZMax,
      kZMax);
}

double quadrature_elbo(const model::LogJointModel& model, const Vector& params) {
  check_scalar(model, params);
  const double mu = params[0];
  const double rho = params[1];
  return gaussian_expectation([&](double t) { return lj(model, t); }, mu, std::exp(rho)) + rho +
         kHalfLog2PiE;
}

Vector quadrature_gradient(const model::LogJointModel& model, const Vector& params) {
  check_scalar(model, params);
  const double mu = params[0];
  const double sd = std::exp(params[1]);
  // In z = (theta - mu) / sd the score is (z / sd, z^2 - 1).
  const auto weighted = [&](auto&& score) {
    return integrate(
        [&](double z) {
          return kInvSqrt2Pi * std::exp(-0.5 * z * z) * score(z) * lj(model, mu + sd * z);
        },
        -kZMax, kZMax);
  };
  Vector g(2);
  g[0] = weighted([&](double z) { return z / sd; });
  g[1] = weighted([](double z) { return z * z - 1.0; }) + 1.0;
  return g;
}

Vector fd_quadrature_gradient(const model::LogJointModel& model, const Vector& params, double h) {
  check_scalar(model, params);
  Vector g(2);
  for (Index j = 0; j < 2; ++j) {
    Vector hi = params;
    Vector lo = params;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (quadrature_elbo(model, hi) - quadrature_elbo(model, lo)) / (2.0 * h);
  }
  return g;
}

Matrix fd_quadrature_hessian(const model::LogJointModel& model, const Vector& params, double h) {
  check_scalar(model, params);
  Matrix m(2, 2);
  for (Index j = 0; j < 2; ++j) {
    Vector hi = params;
    Vector lo = params;
    hi[j] += h;
    lo[j] -= h;
    m.col(j) = (quadrature_gradient(model, hi) - quadrature_gradient(model, lo)) / (2.0 * h);
  }
  return 0.5 * (m + m.transpose());
}

double quadrature_log_evidence(const model::LogJointModel& model, double center, double scale) {
  if (model.latent_dim() != 1) {
    throw InvalidArgument("quadrature oracles need a scalar latent variable");
  }
  if (!(scale > 0.0)) throw InvalidArgument("integration scale must be positive");
  const double peak = lj(model, center);
  const double mass = integrate([&](double t) { return std::exp(lj(model, t) - peak); },
                                center - 30.0 * scale, center + 30.0 * scale);
  return peak + std::log(mass);
}

}  // namespace sosvi::oracles
