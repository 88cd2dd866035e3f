#pragma once

#include <filesystem>

#include "sosvi/model.hpp"

// The bundled benchmark models, read from configs/data.
namespace sosvi::oracles {

std::filesystem::path data_dir();

/// Scalar mean, prior N(0, 1), unit noise, n = 20.
model::LogJointModel conjugate_fixture();
/// d = 5, n = 50, orthogonal design, unit prior precision and noise.
model::LogJointModel linreg_fixture();
/// d = 3, n = 100, unit prior precision.
model::LogJointModel logreg_fixture();

}  // namespace sosvi::oracles
