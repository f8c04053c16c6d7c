#pragma once

#include <cstddef>

#include "cournot/measures.hpp"

namespace cournot {

/// Exact 1-Wasserstein distance between two finitely supported measures
/// with ground metric d(y, y') = sum_t |y_t - y'_t|.
///
/// Solved as a transportation problem by primal network simplex, so the
/// value is the exact optimum of the small LP (up to floating arithmetic).
/// Inputs are ordered canonically first, which makes the call symmetric in
/// its arguments bit-for-bit.
///
/// Throws SizeError when size(nu) * size(nu2) exceeds `max_pairs`.
double wasserstein1(const DiscreteMeasure& nu, const DiscreteMeasure& nu2,
                    std::size_t max_pairs = 4096);

}  // namespace cournot
