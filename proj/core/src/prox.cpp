#include "cfm/prox.hpp"

#include <cmath>

#include "cfm/error.hpp"

namespace cfm {

namespace {

inline double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

void soft_threshold_inplace(std::span<double> v, double t) {
  if (!(t >= 0.0)) {
    throw ConfigError("soft threshold: t must be nonnegative");
  }
  for (double& x : v) {
    x = shrink(x, t);
  }
}

std::vector<double> soft_threshold(std::span<const double> v, double t) {
  std::vector<double> out(v.begin(), v.end());
  soft_threshold_inplace(out, t);
  return out;
}

std::vector<double> group_soft_threshold(std::span<const double> fiber, double t) {
  std::vector<double> out(fiber.begin(), fiber.end());
  group_soft_threshold_inplace(out, 1, out.size(), t, false);
  return out;
}

void group_soft_threshold_inplace(std::span<double> values, std::size_t pixels,
                                  std::size_t channels, double t, bool nonnegative) {
  if (!(t >= 0.0)) {
    throw ConfigError("group soft threshold: t must be nonnegative");
  }
  if (values.size() != pixels * channels) {
    throw ShapeError("group soft threshold: buffer does not hold pixels x channels values");
  }
  if (channels == 1) {
    for (double& x : values) {
      x = shrink(nonnegative ? std::max(x, 0.0) : x, t);
    }
    return;
  }
  for (std::size_t i = 0; i < pixels; ++i) {
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      double& x = values[c * pixels + i];
      if (nonnegative && x < 0.0) x = 0.0;
      norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= t) {
      for (std::size_t c = 0; c < channels; ++c) values[c * pixels + i] = 0.0;
    } else {
      const double scale = 1.0 - t / norm;
      for (std::size_t c = 0; c < channels; ++c) values[c * pixels + i] *= scale;
    }
  }
}

}  // namespace cfm
