#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include <gtest/gtest.h>

#include "sosvi/errors.hpp"
#include "sosvi/model.hpp"
#include "sosvi/oracles/finite_difference.hpp"
#include "sosvi/oracles/fixtures.hpp"
#include "sosvi/oracles/quadrature.hpp"
#include "sosvi/var_family.hpp"

namespace sosvi {
namespace {

using family::GaussianMeanField;

Vector vec1(double x) { return Vector::Constant(1, x); }
Vector params1(double mu, double rho) { return (Vector(2) << mu, rho).finished(); }

TEST(ConjugateGaussian, EmptyDataGivesPrior) {
  const std::vector<double> none;
  const auto m = model::conjugate_gaussian(none, 0.0, 1.0, 1.0);
  ASSERT_TRUE(m.exact_posterior());
  EXPECT_EQ(m.latent_dim(), 1);
  EXPECT_NEAR(m.exact_posterior()->mean[0], 0.0, 1e-15);
  EXPECT_NEAR(m.exact_posterior()->covariance(0, 0), 1.0, 1e-15);
  ASSERT_TRUE(m.log_evidence());
  EXPECT_NEAR(*m.log_evidence(), 0.0, 1e-14);
}

TEST(ConjugateGaussian, SinglePointUpdateMatchesQuadrature) {
  const std::vector<double> data = {2.0};
  const auto m = model::conjugate_gaussian(data, 0.0, 1.0, 1.0);
  EXPECT_NEAR(m.exact_posterior()->mean[0], 1.0, 1e-14);
  EXPECT_NEAR(m.exact_posterior()->covariance(0, 0), 0.5, 1e-14);

  // Posterior moments by quadrature of the unnormalized log-joint, using a
  // wide Gaussian as the integration measure.
  const double sd = 3.0;
  const auto ratio = [&](double t, double power) {
    const double log_w = m.log_joint(vec1(t)) + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sd) +
                         0.5 * t * t / (sd * sd);
    return std::pow(t, power) * std::exp(log_w);
  };
  const double z = oracles::gaussian_expectation([&](double t) { return ratio(t, 0); }, 0.0, sd);
  const double m1 = oracles::gaussian_expectation([&](double t) { return ratio(t, 1); }, 0.0, sd) / z;
  const double m2 = oracles::gaussian_expectation([&](double t) { return ratio(t, 2); }, 0.0, sd) / z;
  EXPECT_NEAR(m1, 1.0, 1e-9);
  EXPECT_NEAR(m2 - m1 * m1, 0.5, 1e-9);
  EXPECT_NEAR(std::log(z), *m.log_evidence(), 1e-9);
}

TEST(ConjugateGaussian, LogEvidenceMatchesQuadrature) {
  const auto m = oracles::conjugate_fixture();
  const double mean = m.exact_posterior()->mean[0];
  const double sd = std::sqrt(m.exact_posterior()->covariance(0, 0));
  const double quad = oracles::quadrature_log_evidence(m, mean, sd);
  EXPECT_LE(std::abs(quad - *m.log_evidence()), 1e-6 * std::abs(*m.log_evidence()));
}

TEST(ConjugateGaussian, RejectsNonPositiveVariances) {
  const std::vector<double> data = {1.0};
  EXPECT_THROW(model::conjugate_gaussian(data, 0.0, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(model::conjugate_gaussian(data, 0.0, 1.0, -1.0), InvalidArgument);
}

TEST(BayesLinreg, IdentityDesign) {
  const auto m = model::bayes_linreg(Matrix::Identity(2, 2), Vector::Zero(2), 1.0, 1.0);
  const auto& post = *m.exact_posterior();
  EXPECT_NEAR(post.mean.norm(), 0.0, 1e-15);
  EXPECT_NEAR((post.covariance - 0.5 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(BayesLinreg, PosteriorSolvesNormalEquations) {
  Rng rng(11);
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix x(30, 4);
  Vector y(30);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 4; ++j) x(i, j) = n01(rng);
    y[i] = n01(rng);
  }
  const double prec = 0.7, noise = 1.9;
  const auto m = model::bayes_linreg(x, y, prec, noise);
  Matrix a = x.transpose() * x / noise;
  a.diagonal().array() += prec;
  const Vector residual = a * m.exact_posterior()->mean - x.transpose() * y / noise;
  EXPECT_LE(residual.norm(), 1e-10);
  EXPECT_LE((a * m.exact_posterior()->covariance - Matrix::Identity(4, 4)).norm(), 1e-10);

  // Evidence: ln p(X) = ln p(w, X) - ln p(w | X) at an arbitrary w.
  const Vector w = Vector::LinSpaced(4, -1.0, 1.0);
  const Vector diff = w - m.exact_posterior()->mean;
  const double log_post = -0.5 * (4.0 * std::log(2.0 * std::numbers::pi) -
                                  std::log(a.determinant()) + diff.dot(a * diff));
  EXPECT_NEAR(*m.log_evidence(), m.log_joint(w) - log_post, 1e-9);
}

TEST(BayesLinreg, RejectsBadInputs) {
  EXPECT_THROW(model::bayes_linreg(Matrix(3, 0), Vector::Zero(3), 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(model::bayes_linreg(Matrix::Ones(3, 2), Vector::Zero(4), 1.0, 1.0), DimensionMismatch);
  EXPECT_THROW(model::bayes_linreg(Matrix::Ones(3, 2), Vector::Zero(3), 0.0, 1.0), InvalidArgument);
}

TEST(BayesLogreg, ZeroWeightsGiveHalfLikelihood) {
  Matrix x(5, 2);
  x << 1, 2, -1, 0.5, 3, 3, 0, 1, -2, -2;
  const Vector y = (Vector(5) << 1, 0, 0, 1, 1).finished();
  const double prec = 2.0;
  const auto m = model::bayes_logreg(x, y, prec);
  EXPECT_FALSE(m.exact_posterior());
  const double log_prior0 = std::log(prec / (2.0 * std::numbers::pi));  // d/2 ln(prec / 2 pi), d = 2
  EXPECT_NEAR(m.log_joint(Vector::Zero(2)) - log_prior0, 5.0 * std::log(0.5), 1e-12);
}

TEST(BayesLogreg, FiniteAtLargeWeights) {
  const auto m = oracles::logreg_fixture();
  Vector w = Vector::Ones(m.latent_dim());
  w *= 50.0 / w.norm();
  EXPECT_TRUE(std::isfinite(m.log_joint(w)));
  EXPECT_TRUE(std::isfinite(m.log_joint(-w)));
}

TEST(BayesLogreg, GradientMatchesIndependentReference) {
  Matrix x(4, 3);
  x << 1.0, -0.5, 2.0, 0.3, 1.2, -1.0, -2.0, 0.4, 0.5, 1.5, 1.5, 1.5;
  const Vector y = (Vector(4) << 1, 0, 1, 0).finished();
  const auto m = model::bayes_logreg(x, y, 2.0);
  const Vector w = (Vector(3) << 0.4, -0.7, 0.2).finished();
  // Reference values from a separate numpy evaluation of the same model.
  EXPECT_NEAR(m.log_joint(w), -4.937226267916895, 1e-12);
  const Vector reference = (Vector(3) << -2.793069949905449, 0.534794039867819, 0.03563493658697725).finished();
  const Vector fd = oracles::fd_gradient([&](const Vector& v) { return m.log_joint(v); }, w);
  EXPECT_LE((fd - reference).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BayesLogreg, RejectsNonBinaryLabels) {
  EXPECT_THROW(model::bayes_logreg(Matrix::Ones(2, 1), (Vector(2) << 0, 2).finished(), 1.0),
               InvalidArgument);
}

TEST(ExactKl, ZeroAtPosterior) {
  const auto m = oracles::conjugate_fixture();
  GaussianMeanField q(1);
  const double mean = m.exact_posterior()->mean[0];
  const double var = m.exact_posterior()->covariance(0, 0);
  EXPECT_NEAR(model::exact_kl_to_posterior(q, params1(mean, 0.5 * std::log(var)), m), 0.0, 1e-12);
}

TEST(ExactKl, UnitShiftMatchesQuadrature) {
  const std::vector<double> none;
  const auto m = model::conjugate_gaussian(none, 1.0, 1.0, 1.0);  // posterior N(1, 1)
  GaussianMeanField q(1);
  const Vector p = params1(0.0, 0.0);
  EXPECT_NEAR(model::exact_kl_to_posterior(q, p, m), 0.5, 1e-14);
  const double quad = oracles::gaussian_expectation(
      [&](double t) { return q.log_density(p, vec1(t)) - (m.log_joint(vec1(t)) - *m.log_evidence()); }, 0.0,
      1.0);
  EXPECT_NEAR(quad, 0.5, 1e-10);
}

TEST(ExactKl, EvidenceIdentity) {
  const auto m = oracles::conjugate_fixture();
  GaussianMeanField q(1);
  Rng rng(12);
  std::uniform_real_distribution<double> mu(-1.0, 2.0), rho(-2.5, 0.5);
  for (int i = 0; i < 10; ++i) {
    const Vector p = params1(mu(rng), rho(rng));
    const double sum = oracles::quadrature_elbo(m, p) + model::exact_kl_to_posterior(q, p, m);
    EXPECT_NEAR(sum, *m.log_evidence(), 1e-6) << "point " << i;
  }
}

TEST(ExactKl, CorrelatedPosteriorIsPositive) {
  const auto m = oracles::linreg_fixture();
  GaussianMeanField q(m.latent_dim());
  const Vector p = GaussianMeanField::make_params(m.exact_posterior()->mean,
                                                 Vector::Constant(m.latent_dim(), -1.0));
  EXPECT_GT(model::exact_kl_to_posterior(q, p, m), 0.0);
}

TEST(ExactKl, RequiresPosterior) {
  GaussianMeanField q(3);
  EXPECT_THROW(model::exact_kl_to_posterior(q, Vector::Zero(6), oracles::logreg_fixture()), InvalidArgument);
}

TEST(LogJointModel, Deterministic) {
  const auto m = oracles::linreg_fixture();
  const Vector w = Vector::LinSpaced(m.latent_dim(), -0.3, 0.4);
  EXPECT_EQ(m.log_joint(w), m.log_joint(w));
  EXPECT_THROW(m.log_joint(Vector::Zero(m.latent_dim() + 1)), DimensionMismatch);
}

TEST(Dataset, CsvWithAndWithoutHeader) {
  std::istringstream with_header("x1,x2,y\n1,2,3\n4,5,6\n");
  const auto a = model::read_csv_dataset(with_header, true);
  EXPECT_EQ(a.rows(), 2);
  EXPECT_EQ(a.observations.cols(), 2);
  ASSERT_TRUE(a.targets);
  EXPECT_EQ((*a.targets)[1], 6.0);

  std::istringstream bare("1.5\n-2\n");
  const auto b = model::read_csv_dataset(bare, false);
  EXPECT_EQ(b.rows(), 2);
  EXPECT_FALSE(b.targets);
  EXPECT_EQ(b.observations(1, 0), -2.0);
}

TEST(Dataset, CsvErrors) {
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(model::read_csv_dataset(ragged, false), InvalidArgument);
  std::istringstream junk("1,2\n3,abc\n");
  EXPECT_THROW(model::read_csv_dataset(junk, false), InvalidArgument);
  std::istringstream one_col("1\n2\n");
  EXPECT_THROW(model::read_csv_dataset(one_col, true), InvalidArgument);
  EXPECT_THROW(model::load_csv_dataset("/nonexistent/file.csv", false), InvalidArgument);
}

TEST(Fixtures, BundledDatasetsLoad) {
  EXPECT_EQ(oracles::conjugate_fixture().latent_dim(), 1);
  const auto lin = oracles::linreg_fixture();
  EXPECT_EQ(lin.latent_dim(), 5);
  EXPECT_EQ(oracles::logreg_fixture().latent_dim(), 3);
}

}  // namespace
}  // namespace sosvi
