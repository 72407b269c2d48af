#pragma once

#include <cstdint>
#include <vector>

#include "cmax/numcore/gradcheck.hpp"

namespace cmax {

inline constexpr double kGradCheckTolerance = 1e-4;

// Finite-difference checks of every backward rule used in training, at small
// random points: GRU cell, bi-GRU (last state and all states), linear
// encoder, the agreement matrix of each variant, the contrastive loss
// including log τ, postprocessing with a frozen component, and the full
// training loss.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace cmax
