#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfm {

/// Anisotropic total variation: sum of |horizontal| + |vertical| neighbour
/// differences inside the frame (no wrap-around).
double tv_aniso(std::span<const double> img, std::size_t width, std::size_t height);

/// Exact prox of lambda * sum |x[k+1] - x[k]| (Condat's direct algorithm),
/// read from `in` with the given stride and written to `out` likewise.
void tv_prox_1d(const double* in, double* out, std::size_t n, std::size_t stride,
                double lambda);
std::vector<double> tv_prox_1d(std::span<const double> v, double lambda);

struct TvProxOptions {
  std::size_t max_iters = 500;
  /// Stop when successive iterates differ by at most tol * max(1, |v|_inf).
  double tol = 1e-11;
  /// Clip to the nonnegative orthant after the TV prox.
  bool nonnegative = false;
};

/// prox of lambda * tv_aniso by Dykstra-like alternation between the exact
/// row-wise and column-wise 1-D proxes. Returns the number of sweeps used.
std::size_t tv_prox_aniso(std::span<const double> v, std::span<double> out, std::size_t width,
                          std::size_t height, double lambda, const TvProxOptions& opts = {});

}  // namespace cfm
