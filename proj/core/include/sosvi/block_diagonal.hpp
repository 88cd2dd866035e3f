#pragma once

#include <span>
#include <vector>

#include "sosvi/common.hpp"

namespace sosvi {

/// A block-diagonal matrix stored as its dense diagonal blocks only.
///
/// Off-block entries are implicitly zero and never materialized, so storage
/// and matrix-vector cost are linear in the total dimension for fixed block
/// widths.
class BlockDiagonal {
 public:
  BlockDiagonal() = default;
  explicit BlockDiagonal(std::vector<Matrix> blocks);

  static BlockDiagonal zeros(std::span<const Index> block_sizes);
  static BlockDiagonal identity(std::span<const Index> block_sizes, double scale = 1.0);

  Index dim() const { return dim_; }
  std::size_t block_count() const { return blocks_.size(); }
  const Matrix& block(std::size_t i) const { return blocks_[i]; }
  Matrix& block(std::size_t i) { return blocks_[i]; }
  Index offset(std::size_t i) const { return offsets_[i]; }
  std::vector<Index> block_sizes() const;

  Vector apply(const Vector& v) const;
  /// out += scale * (this * v)
  void apply_add(const Vector& v, double scale, Vector& out) const;

  Matrix densify() const;

  /// this += scale * other; layouts must agree.
  void add_scaled(const BlockDiagonal& other, double scale);
  BlockDiagonal& operator*=(double scale);
  /// Adds `value` to every diagonal entry.
  void shift_diagonal(double value);

  bool same_layout(const BlockDiagonal& other) const;

 private:
  std::vector<Matrix> blocks_;
  std::vector<Index> offsets_;
  Index dim_ = 0;
};

}  // namespace sosvi
