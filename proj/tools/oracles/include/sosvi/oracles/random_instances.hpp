#pragma once

#include <vector>

#include "sosvi/common.hpp"
#include "sosvi/estimators.hpp"

namespace sosvi::oracles {

/// Blocks of width 2, with a trailing block of 1 when d is odd.
std::vector<Index> pair_blocks(Index d);

/// Random SPD matrix with eigenvalues in [lo, hi].
Matrix random_spd(Index d, double lo, double hi, Rng& rng);

/// Random SPD D + sum_i w_i u_i u_i' with SPD blocks (eigenvalues in
/// [1, 3]) and positive weights.
est::StructuredMatrix random_spd_structured(Index d, Index rank, Rng& rng);

/// Random symmetric structured matrix with indefinite blocks and signed weights.
est::StructuredMatrix random_structured(Index d, Index rank, Rng& rng);

Vector random_vector(Index d, Rng& rng);

}  // namespace sosvi::oracles
