#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace sosvi {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Every estimator draws from an explicit stream; runs own their stream.
using Rng = std::mt19937_64;

}  // namespace sosvi
