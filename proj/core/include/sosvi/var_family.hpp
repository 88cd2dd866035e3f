#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "sosvi/block_diagonal.hpp"
#include "sosvi/common.hpp"

namespace sosvi::family {

enum class FactorKind {
  /// Gaussian factor parametrized by (mean, log standard deviation).
  gaussian,
};

Index block_size_of(FactorKind kind);

/// Layout of a factorized family: one factor per latent coordinate, each
/// with its own contiguous block of variational parameters.
class FamilyDescriptor {
 public:
  explicit FamilyDescriptor(std::vector<FactorKind> kinds);
  static FamilyDescriptor gaussian(Index factor_count);

  Index factor_count() const { return static_cast<Index>(kinds_.size()); }
  FactorKind factor_kind(Index i) const { return kinds_[static_cast<std::size_t>(i)]; }
  Index block_size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
  Index block_offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& block_sizes() const { return sizes_; }
  Index param_dim() const { return param_dim_; }
  bool all_gaussian() const;

 private:
  std::vector<FactorKind> kinds_;
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index param_dim_ = 0;
};

/// Interface of a factorized variational distribution q(theta | params).
///
/// `params` is the flat variational parameter vector laid out per the
/// descriptor; `theta` is a point in latent space. All methods are pure
/// apart from the clamp-event counter, and are safe to call concurrently.
class VariationalFamily {
 public:
  explicit VariationalFamily(FamilyDescriptor descriptor);
  virtual ~VariationalFamily() = default;
  VariationalFamily(const VariationalFamily&) = delete;
  VariationalFamily& operator=(const VariationalFamily&) = delete;

  const FamilyDescriptor& descriptor() const { return descriptor_; }
  Index latent_dim() const { return descriptor_.factor_count(); }
  Index param_dim() const { return descriptor_.param_dim(); }

  /// One draw; coordinates are drawn in index order from `rng`.
  virtual Vector sample_one(const Vector& params, Rng& rng) const = 0;
  /// n independent draws (n >= 1), in draw order.
  std::vector<Vector> sample(const Vector& params, Rng& rng, std::size_t n) const;

  virtual double log_density(const Vector& params, const Vector& theta) const = 0;
  /// Gradient of log q with respect to params at fixed theta.
  virtual Vector score(const Vector& params, const Vector& theta) const = 0;
  /// Diagonal blocks of the Hessian of log q with respect to params.
  virtual BlockDiagonal score_hessian_blocks(const Vector& params, const Vector& theta) const = 0;
  /// acc += weight * score_hessian_blocks(params, theta)
  virtual void add_score_hessian_blocks(const Vector& params, const Vector& theta, double weight,
                                        BlockDiagonal& acc) const;

  virtual double entropy(const Vector& params) const = 0;
  virtual Vector entropy_grad(const Vector& params) const = 0;
  virtual BlockDiagonal entropy_hessian_blocks(const Vector& params) const = 0;

  /// Number of times a parameter was clamped into its numerically safe range.
  std::uint64_t clamp_events() const { return clamp_events_.load(std::memory_order_relaxed); }
  void reset_clamp_events() const { clamp_events_.store(0, std::memory_order_relaxed); }

  void check_params(const Vector& params) const;
  void check_theta(const Vector& theta) const;

 protected:
  void note_clamp() const { clamp_events_.fetch_add(1, std::memory_order_relaxed); }

 private:
  FamilyDescriptor descriptor_;
  mutable std::atomic<std::uint64_t> clamp_events_{0};
};

/// Mean-field Gaussian with block i = (mu_i, rho_i) and sigma_i = exp(rho_i).
class GaussianMeanField : public VariationalFamily {
 public:
  static constexpr double kMinLogScale = -20.0;
  static constexpr double kMaxLogScale = 20.0;

  explicit GaussianMeanField(Index latent_dim);

  /// Interleaves means and log-scales into the flat parameter layout.
  static Vector make_params(const Vector& means, const Vector& log_scales);
  static Vector means(const Vector& params);
  static Vector log_scales(const Vector& params);

  Vector sample_one(const Vector& params, Rng& rng) const override;
  double log_density(const Vector& params, const Vector& theta) const override;
  Vector score(const Vector& params, const Vector& theta) const override;
  BlockDiagonal score_hessian_blocks(const Vector& params, const Vector& theta) const override;
  void add_score_hessian_blocks(const Vector& params, const Vector& theta, double weight,
                                BlockDiagonal& acc) const override;
  double entropy(const Vector& params) const override;
  Vector entropy_grad(const Vector& params) const override;
  BlockDiagonal entropy_hessian_blocks(const Vector& params) const override;

 private:
  double clamped_log_scale(double rho) const;
};

}  // namespace sosvi::family
