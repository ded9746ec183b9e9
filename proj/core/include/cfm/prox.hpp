#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfm {

/// sign(v) * max(|v| - t, 0), elementwise.
std::vector<double> soft_threshold(std::span<const double> v, double t);
void soft_threshold_inplace(std::span<double> v, double t);

/// Scales one fiber by max(1 - t / |g|_2, 0).
std::vector<double> group_soft_threshold(std::span<const double> fiber, double t);

/// Group shrinkage over a channel-major cube buffer: fiber i is
/// {values[c * pixels + i] : c < channels}. With `nonnegative` each fiber is
/// first projected onto the orthant (the exact prox of l2,1 plus the
/// nonnegativity indicator). A one-channel fiber reduces bitwise to
/// soft_threshold.
void group_soft_threshold_inplace(std::span<double> values, std::size_t pixels,
                                  std::size_t channels, double t, bool nonnegative);

}  // namespace cfm
