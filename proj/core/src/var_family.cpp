#include "sosvi/var_family.hpp"

#include <cmath>

#include "sosvi/errors.hpp"

namespace sosvi::family {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)
constexpr double kHalfLog2PiE = kHalfLog2Pi + 0.5;      // 0.5 * ln(2 pi e)

}  // namespace

Index block_size_of(FactorKind kind) {
  switch (kind) {
    case FactorKind::gaussian:
      return 2;
  }
  throw InvalidArgument("unknown factor kind");
}

FamilyDescriptor::FamilyDescriptor(std::vector<FactorKind> kinds) : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw InvalidArgument("a family needs at least one factor");
  sizes_.reserve(kinds_.size());
  offsets_.reserve(kinds_.size());
  for (FactorKind k : kinds_) {
    const Index s = block_size_of(k);
    offsets_.push_back(param_dim_);
    sizes_.push_back(s);
    param_dim_ += s;
  }
}

FamilyDescriptor FamilyDescriptor::gaussian(Index factor_count) {
  if (factor_count <= 0) throw InvalidArgument("factor count must be positive");
  return FamilyDescriptor(
      std::vector<FactorKind>(static_cast<std::size_t>(factor_count), FactorKind::gaussian));
}

bool FamilyDescriptor::all_gaussian() const {
  for (FactorKind k : kinds_) {
    if (k != FactorKind::gaussian) return false;
  }
  return true;
}

VariationalFamily::VariationalFamily(FamilyDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {}

std::vector<Vector> VariationalFamily::sample(const Vector& params, Rng& rng,
                                              std::size_t n) const {
  if (n == 0) throw InvalidArgument("sample count must be at least 1");
  check_params(params);
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(params, rng));
  return out;
}

void VariationalFamily::add_score_hessian_blocks(const Vector& params, const Vector& theta,
                                                 double weight, BlockDiagonal& acc) const {
  acc.add_scaled(score_hessian_blocks(params, theta), weight);
}

void VariationalFamily::check_params(const Vector& params) const {
  if (params.size() != param_dim()) {
    throw DimensionMismatch("variational parameters", param_dim(), params.size());
  }
  if (!params.allFinite()) throw InvalidArgument("variational parameters must be finite");
}

void VariationalFamily::check_theta(const Vector& theta) const {
  if (theta.size() != latent_dim()) throw DimensionMismatch("latent sample", latent_dim(), theta.size());
}

GaussianMeanField::GaussianMeanField(Index latent_dim)
    : VariationalFamily(FamilyDescriptor::gaussian(latent_dim)) {}

Vector GaussianMeanField::make_params(const Vector& means, const Vector& log_scales) {
  if (means.size() != log_scales.size()) {
    throw DimensionMismatch("log-scales", means.size(), log_scales.size());
  }
  Vector p(2 * means.size());
  for (Index i = 0; i < means.size(); ++i) {
    p[2 * i] = means[i];
    p[2 * i + 1] = log_scales[i];
  }
  return p;
}

Vector GaussianMeanField::means(const Vector& params) {
  return Eigen::Map<const Vector, 0, Eigen::InnerStride<2>>(params.data(), params.size() / 2);
}

Vector GaussianMeanField::log_scales(const Vector& params) {
  return Eigen::Map<const Vector, 0, Eigen::InnerStride<2>>(params.data() + 1, params.size() / 2);
}

double GaussianMeanField::clamped_log_scale(double rho) const {
  if (rho < kMinLogScale) {
    note_clamp();
    return kMinLogScale;
  }
  if (rho > kMaxLogScale) {
    note_clamp();
    return kMaxLogScale;
  }
  return rho;
}

Vector GaussianMeanField::sample_one(const Vector& params, Rng& rng) const {
  check_params(params);
  std::normal_distribution<double> standard(0.0, 1.0);
  Vector theta(latent_dim());
  for (Index i = 0; i < latent_dim(); ++i) {
    theta[i] = params[2 * i] + std::exp(clamped_log_scale(params[2 * i + 1])) * standard(rng);
  }
  return theta;
}

double GaussianMeanField::log_density(const Vector& params, const Vector& theta) const {
  check_params(params);
  check_theta(theta);
  double total = 0.0;
  for (Index i = 0; i < latent_dim(); ++i) {
    const double rho = clamped_log_scale(params[2 * i + 1]);
    const double diff = theta[i] - params[2 * i];
    total += -kHalfLog2Pi - rho - 0.5 * diff * diff * std::exp(-2.0 * rho);
  }
  return total;
}

Vector GaussianMeanField::score(const Vector& params, const Vector& theta) const {
  check_params(params);
  check_theta(theta);
  Vector g(param_dim());
  for (Index i = 0; i < latent_dim(); ++i) {
    const double inv_var = std::exp(-2.0 * clamped_log_scale(params[2 * i + 1]));
    const double diff = theta[i] - params[2 * i];
    g[2 * i] = diff * inv_var;
    g[2 * i + 1] = diff * diff * inv_var - 1.0;
  }
  return g;
}

BlockDiagonal GaussianMeanField::score_hessian_blocks(const Vector& params,
                                                      const Vector& theta) const {
  BlockDiagonal acc = BlockDiagonal::zeros(descriptor().block_sizes());
  add_score_hessian_blocks(params, theta, 1.0, acc);
  return acc;
}

void GaussianMeanField::add_score_hessian_blocks(const Vector& params, const Vector& theta,
                                                 double weight, BlockDiagonal& acc) const {
  check_params(params);
  check_theta(theta);
  if (acc.block_count() != static_cast<std::size_t>(latent_dim())) {
    throw DimensionMismatch("score Hessian accumulator", latent_dim(),
                            static_cast<Index>(acc.block_count()));
  }
  for (Index i = 0; i < latent_dim(); ++i) {
    const double inv_var = std::exp(-2.0 * clamped_log_scale(params[2 * i + 1]));
    const double diff = theta[i] - params[2 * i];
    const double cross = -2.0 * diff * inv_var;
    Matrix& b = acc.block(static_cast<std::size_t>(i));
    b(0, 0) += weight * -inv_var;
    b(0, 1) += weight * cross;
    b(1, 0) += weight * cross;
    b(1, 1) += weight * (-2.0 * diff * diff * inv_var);
  }
}

double GaussianMeanField::entropy(const Vector& params) const {
  check_params(params);
  double h = 0.0;
  for (Index i = 0; i < latent_dim(); ++i) h += params[2 * i + 1] + kHalfLog2PiE;
  return h;
}

Vector GaussianMeanField::entropy_grad(const Vector& params) const {
  check_params(params);
  Vector g = Vector::Zero(param_dim());
  for (Index i = 0; i < latent_dim(); ++i) g[2 * i + 1] = 1.0;
  return g;
}

BlockDiagonal GaussianMeanField::entropy_hessian_blocks(const Vector& params) const {
  check_params(params);
  return BlockDiagonal::zeros(descriptor().block_sizes());
}

}  // namespace sosvi::family
