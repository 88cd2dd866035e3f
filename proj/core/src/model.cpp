#include "sosvi/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>

#include "sosvi/errors.hpp"

namespace sosvi::model {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    double v = 0.0;
    if (!parse_double(rest.substr(0, comma), v)) return false;
    row.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return true;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

LogJointModel::LogJointModel(std::string name, Index latent_dim, LogJointFn log_joint,
                             std::optional<GaussianPosterior> exact_posterior,
                             std::optional<double> log_evidence)
    : name_(std::move(name)),
      latent_dim_(latent_dim),
      log_joint_(std::move(log_joint)),
      exact_posterior_(std::move(exact_posterior)),
      log_evidence_(log_evidence) {
  if (latent_dim_ <= 0) throw InvalidArgument("latent dimension must be positive");
  if (!log_joint_) throw InvalidArgument("log-joint evaluator is empty");
  if (exact_posterior_) {
    const auto& post = *exact_posterior_;
    if (post.mean.size() != latent_dim_) {
      throw DimensionMismatch("posterior mean", latent_dim_, post.mean.size());
    }
    if (post.covariance.rows() != latent_dim_ || post.covariance.cols() != latent_dim_) {
      throw DimensionMismatch("posterior covariance", latent_dim_, post.covariance.rows());
    }
  }
}

double LogJointModel::log_joint(const Vector& theta) const {
  if (theta.size() != latent_dim_) throw DimensionMismatch("log-joint argument", latent_dim_, theta.size());
  return log_joint_(theta);
}

void Dataset::validate() const {
  if (targets && targets->size() != observations.rows()) {
    throw DimensionMismatch("dataset targets", observations.rows(), targets->size());
  }
}

Dataset read_csv_dataset(std::istream& in, bool last_column_is_target) {
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const bool header_allowed = first_content;
    first_content = false;
    if (!parse_row(line, row)) {
      if (header_allowed) continue;
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": expected comma-separated reals");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": expected " +
                            std::to_string(width) + " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(row);
  }
  if (last_column_is_target && width < 2 && !rows.empty()) {
    throw InvalidArgument("dataset needs at least one feature column plus a target column");
  }
  const Index n = static_cast<Index>(rows.size());
  const Index features = static_cast<Index>(last_column_is_target ? width - 1 : width);
  Dataset ds;
  ds.observations.resize(n, features);
  if (last_column_is_target) ds.targets = Vector(n);
  for (Index r = 0; r < n; ++r) {
    const auto& src = rows[static_cast<std::size_t>(r)];
    for (Index c = 0; c < features; ++c) ds.observations(r, c) = src[static_cast<std::size_t>(c)];
    if (last_column_is_target) (*ds.targets)[r] = src.back();
  }
  return ds;
}

Dataset load_csv_dataset(const std::string& path, bool last_column_is_target) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset '" + path + "'");
  return read_csv_dataset(in, last_column_is_target);
}

LogJointModel conjugate_gaussian(std::span<const double> data, double prior_mean, double prior_var,
                                 double noise_var) {
  if (!(prior_var > 0.0)) throw InvalidArgument("prior_var must be positive");
  if (!(noise_var > 0.0)) throw InvalidArgument("noise_var must be positive");

  const double n = static_cast<double>(data.size());
  double sum = 0.0;
  for (double x : data) sum += x;
  const double mean = data.empty() ? 0.0 : sum / n;
  double centered_ss = 0.0;
  for (double x : data) centered_ss += (x - mean) * (x - mean);

  auto log_joint = [=](const Vector& theta) {
    const double t = theta[0];
    const double prior = -0.5 * (kLog2Pi + std::log(prior_var)) -
                         (t - prior_mean) * (t - prior_mean) / (2.0 * prior_var);
    // sum_j (x_j - t)^2 = centered_ss + n (mean - t)^2
    const double ss = centered_ss + n * (mean - t) * (mean - t);
    const double lik = -0.5 * n * (kLog2Pi + std::log(noise_var)) - ss / (2.0 * noise_var);
    return prior + lik;
  };

  const double post_prec = 1.0 / prior_var + n / noise_var;
  const double post_var = 1.0 / post_prec;
  const double post_mean = post_var * (prior_mean / prior_var + sum / noise_var);
  GaussianPosterior post{Vector::Constant(1, post_mean), Matrix::Constant(1, 1, post_var)};
  // p(X) = p(theta, X) / p(theta | X) at any theta; evaluate at the posterior mean.
  const double log_evidence =
      log_joint(post.mean) + 0.5 * (kLog2Pi + std::log(post_var));
  return LogJointModel("conjugate-gaussian", 1, log_joint, std::move(post), log_evidence);
}

LogJointModel bayes_linreg(const Matrix& design, const Vector& targets, double prior_precision,
                           double noise_var) {
  if (design.cols() == 0) throw InvalidArgument("design matrix has no columns");
  if (design.rows() != targets.size()) {
    throw DimensionMismatch("regression targets", design.rows(), targets.size());
  }
  if (!(prior_precision > 0.0)) throw InvalidArgument("prior_precision must be positive");
  if (!(noise_var > 0.0)) throw InvalidArgument("noise_var must be positive");

  const Index d = design.cols();
  const double n = static_cast<double>(design.rows());
  auto x = std::make_shared<const Matrix>(design);
  auto y = std::make_shared<const Vector>(targets);

  auto log_joint = [=](const Vector& w) {
    const double prior = -0.5 * static_cast<double>(d) * (kLog2Pi - std::log(prior_precision)) -
                         0.5 * prior_precision * w.squaredNorm();
    const double rss = (*y - *x * w).squaredNorm();
    const double lik = -0.5 * n * (kLog2Pi + std::log(noise_var)) - rss / (2.0 * noise_var);
    return prior + lik;
  };

  Matrix precision = design.transpose() * design / noise_var;
  precision.diagonal().array() += prior_precision;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw SingularMatrix("posterior precision is not positive definite");
  Matrix cov = llt.solve(Matrix::Identity(d, d));
  cov = 0.5 * (cov + cov.transpose());
  Vector mean = llt.solve(design.transpose() * targets / noise_var);
  const double log_det_precision = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_evidence =
      log_joint(mean) + 0.5 * (static_cast<double>(d) * kLog2Pi - log_det_precision);
  return LogJointModel("bayes-linreg", d, log_joint, GaussianPosterior{std::move(mean), std::move(cov)},
                       log_evidence);
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

LogJointModel bayes_logreg(const Matrix& design, const Vector& labels, double prior_precision) {
  if (design.cols() == 0) throw InvalidArgument("design matrix has no columns");
  if (design.rows() != labels.size()) {
    throw DimensionMismatch("classification labels", design.rows(), labels.size());
  }
  if (!(prior_precision > 0.0)) throw InvalidArgument("prior_precision must be positive");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw InvalidArgument("label at row " + std::to_string(i) + " is not 0 or 1");
    }
  }

  const Index d = design.cols();
  auto x = std::make_shared<const Matrix>(design);
  auto y = std::make_shared<const Vector>(labels);
  auto log_joint = [=](const Vector& w) {
    const double prior = -0.5 * static_cast<double>(d) * (kLog2Pi - std::log(prior_precision)) -
                         0.5 * prior_precision * w.squaredNorm();
    const Vector z = *x * w;
    double lik = 0.0;
    // y log s(z) + (1 - y) log(1 - s(z)) = y z - softplus(z)
    for (Index j = 0; j < z.size(); ++j) lik += (*y)[j] * z[j] - softplus(z[j]);
    return prior + lik;
  };
  return LogJointModel("bayes-logreg", d, log_joint);
}

double exact_kl_to_posterior(const family::VariationalFamily& family, const Vector& params,
                             const LogJointModel& model) {
  if (!model.exact_posterior()) {
    throw InvalidArgument("model '" + model.name() + "' has no exact posterior");
  }
  if (!family.descriptor().all_gaussian()) {
    throw InvalidArgument("closed-form KL requires a mean-field Gaussian family");
  }
  family.check_params(params);
  if (family.latent_dim() != model.latent_dim()) {
    throw DimensionMismatch("family latent dimension", model.latent_dim(), family.latent_dim());
  }
  const auto& post = *model.exact_posterior();
  const Index d = model.latent_dim();
  const Vector mu = family::GaussianMeanField::means(params);
  const Vector rho = family::GaussianMeanField::log_scales(params);

  Eigen::LLT<Matrix> llt(post.covariance);
  if (llt.info() != Eigen::Success) throw SingularMatrix("posterior covariance is not positive definite");
  const Matrix precision = llt.solve(Matrix::Identity(d, d));
  const Vector diff = post.mean - mu;
  const double log_det_cov = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double trace_term = 0.0;
  for (Index i = 0; i < d; ++i) trace_term += precision(i, i) * std::exp(2.0 * rho[i]);
  const double quad = diff.dot(precision * diff);
  const double kl = 0.5 * (trace_term + quad - static_cast<double>(d) + log_det_cov - 2.0 * rho.sum());
  return kl < 0.0 ? 0.0 : kl;
}

}  // namespace sosvi::model
