#include "sosvi/errors.hpp"

#include <sstream>

namespace sosvi {

namespace {

std::string describe_mismatch(const std::string& what, Index expected, Index actual) {
  std::ostringstream os;
  os << "dimension mismatch in " << what << ": expected " << expected << ", got " << actual;
  return os.str();
}

std::string describe_sample(const Vector& sample, double value) {
  std::ostringstream os;
  os << "non-finite log-joint (" << value << ") at sample [";
  for (Index i = 0; i < sample.size(); ++i) {
    os << (i ? ", " : "") << sample[i];
  }
  os << "]";
  return os.str();
}

}  // namespace

DimensionMismatch::DimensionMismatch(const std::string& what, Index expected, Index actual)
    : Error(describe_mismatch(what, expected, actual)), expected_(expected), actual_(actual) {}

NonFiniteLogJoint::NonFiniteLogJoint(Vector sample, double value)
    : Error(describe_sample(sample, value)), sample_(std::move(sample)), value_(value) {}

SingularUpdate::SingularUpdate(std::size_t term, double denominator)
    : Error("singular Sherman-Morrison update at rank-one term " + std::to_string(term) +
            ": 1 + v'A^{-1}u = " + std::to_string(denominator)),
      term_(term),
      denominator_(denominator) {}

NeumannDiverged::NeumannDiverged(std::size_t step, double norm_ratio)
    : Error("Neumann series diverged at step " + std::to_string(step) + " (|y|/|g| = " +
            std::to_string(norm_ratio) + "); use a larger C0"),
      step_(step) {}

}  // namespace sosvi
