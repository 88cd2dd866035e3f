#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "sosvi/common.hpp"

namespace sosvi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, Index expected, Index actual);
  Index expected() const { return expected_; }
  Index actual() const { return actual_; }

 private:
  Index expected_;
  Index actual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when the model's log-joint is NaN or infinite at a drawn sample.
class NonFiniteLogJoint : public Error {
 public:
  NonFiniteLogJoint(Vector sample, double value);
  const Vector& sample() const { return sample_; }
  double value() const { return value_; }

 private:
  Vector sample_;
  double value_;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// A Sherman-Morrison update whose denominator 1 + v'A^{-1}u fell below the floor.
class SingularUpdate : public Error {
 public:
  SingularUpdate(std::size_t term, double denominator);
  std::size_t term() const { return term_; }
  double denominator() const { return denominator_; }

 private:
  std::size_t term_;
  double denominator_;
};

/// The curvature operator is not positive definite; callers should raise the damping.
class IndefiniteCurvature : public Error {
 public:
  using Error::Error;
};

class NeumannDiverged : public Error {
 public:
  NeumannDiverged(std::size_t step, double norm_ratio);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace sosvi
