#pragma once

#include <cstdint>
#include <vector>

#include "koopman/polyfield.hpp"

namespace koopman {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// Scrambled Halton points in the box: radical-inverse sequence in prime
/// bases, shifted modulo 1 by a seeded random offset per axis
/// (Cranley-Patterson rotation). Deterministic for a given seed.
std::vector<Vec> low_discrepancy_points(const Box& box, int count, std::uint64_t seed = kDefaultSeed);

/// Shrinks the box toward the origin by `factor` (0 < factor <= 1).
Box scaled_box(const Box& box, double factor);

}  // namespace koopman
