#include "sosvi/block_diagonal.hpp"

#include "sosvi/errors.hpp"

namespace sosvi {

BlockDiagonal::BlockDiagonal(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  offsets_.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    if (b.rows() != b.cols() || b.rows() == 0) {
      throw InvalidArgument("diagonal blocks must be non-empty and square");
    }
    offsets_.push_back(dim_);
    dim_ += b.rows();
  }
}

BlockDiagonal BlockDiagonal::zeros(std::span<const Index> block_sizes) {
  std::vector<Matrix> blocks;
  blocks.reserve(block_sizes.size());
  for (Index s : block_sizes) blocks.push_back(Matrix::Zero(s, s));
  return BlockDiagonal(std::move(blocks));
}

BlockDiagonal BlockDiagonal::identity(std::span<const Index> block_sizes, double scale) {
  std::vector<Matrix> blocks;
  blocks.reserve(block_sizes.size());
  for (Index s : block_sizes) blocks.push_back(scale * Matrix::Identity(s, s));
  return BlockDiagonal(std::move(blocks));
}

std::vector<Index> BlockDiagonal::block_sizes() const {
  std::vector<Index> sizes;
  sizes.reserve(blocks_.size());
  for (const auto& b : blocks_) sizes.push_back(b.rows());
  return sizes;
}

Vector BlockDiagonal::apply(const Vector& v) const {
  Vector out = Vector::Zero(dim_);
  apply_add(v, 1.0, out);
  return out;
}

void BlockDiagonal::apply_add(const Vector& v, double scale, Vector& out) const {
  if (v.size() != dim_) throw DimensionMismatch("block-diagonal apply", dim_, v.size());
  if (out.size() != dim_) throw DimensionMismatch("block-diagonal apply output", dim_, out.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Index n = blocks_[i].rows();
    out.segment(offsets_[i], n).noalias() += scale * (blocks_[i] * v.segment(offsets_[i], n));
  }
}

Matrix BlockDiagonal::densify() const {
  Matrix m = Matrix::Zero(dim_, dim_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Index n = blocks_[i].rows();
    m.block(offsets_[i], offsets_[i], n, n) = blocks_[i];
  }
  return m;
}

void BlockDiagonal::add_scaled(const BlockDiagonal& other, double scale) {
  if (!same_layout(other)) throw DimensionMismatch("block-diagonal add", dim_, other.dim_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += scale * other.blocks_[i];
}

BlockDiagonal& BlockDiagonal::operator*=(double scale) {
  for (auto& b : blocks_) b *= scale;
  return *this;
}

void BlockDiagonal::shift_diagonal(double value) {
  for (auto& b : blocks_) b.diagonal().array() += value;
}

bool BlockDiagonal::same_layout(const BlockDiagonal& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].rows() != other.blocks_[i].rows()) return false;
  }
  return true;
}

}  // namespace sosvi
