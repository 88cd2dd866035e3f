#include "sosvi/oracles/random_instances.hpp"

#include <Eigen/QR>

#include "sosvi/block_diagonal.hpp"

namespace sosvi::oracles {

std::vector<Index> pair_blocks(Index d) {
  std::vector<Index> sizes(static_cast<std::size_t>(d / 2), 2);
  if (d % 2 == 1) sizes.push_back(1);
  return sizes;
}

Vector random_vector(Index d, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = n01(rng);
  return v;
}

Matrix random_spd(Index d, double lo, double hi, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> eig(lo, hi);
  Matrix g(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) g(i, j) = n01(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector lambda(d);
  for (Index i = 0; i < d; ++i) lambda[i] = eig(rng);
  Matrix a = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

est::StructuredMatrix random_spd_structured(Index d, Index rank, Rng& rng) {
  const auto sizes = pair_blocks(d);
  std::vector<Matrix> blocks;
  for (Index s : sizes) blocks.push_back(random_spd(s, 1.0, 3.0, rng));
  std::uniform_real_distribution<double> w(0.1, 1.0);
  Vector weights(rank);
  Matrix dirs(d, rank);
  for (Index i = 0; i < rank; ++i) {
    weights[i] = w(rng);
    dirs.col(i) = random_vector(d, rng) / std::sqrt(static_cast<double>(d));
  }
  return est::StructuredMatrix(BlockDiagonal(std::move(blocks)), std::move(weights), std::move(dirs));
}

est::StructuredMatrix random_structured(Index d, Index rank, Rng& rng) {
  const auto sizes = pair_blocks(d);
  std::vector<Matrix> blocks;
  for (Index s : sizes) {
    Matrix b(s, s);
    const Vector v = random_vector(s * s, rng);
    for (Index k = 0; k < s * s; ++k) b(k % s, k / s) = v[k];
    blocks.push_back(0.5 * (b + b.transpose()));
  }
  Vector weights = random_vector(rank, rng);
  Matrix dirs(d, rank);
  for (Index i = 0; i < rank; ++i) dirs.col(i) = random_vector(d, rng);
  return est::StructuredMatrix(BlockDiagonal(std::move(blocks)), std::move(weights), std::move(dirs));
}

}  // namespace sosvi::oracles
