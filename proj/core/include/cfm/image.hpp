#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfm {

constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n > 0 && (n & (n - 1)) == 0;
}

/// floor(log2(n)) for n >= 1.
constexpr unsigned log2_floor(std::size_t n) noexcept {
  unsigned r = 0;
  while (n > 1) {
    n >>= 1;
    ++r;
  }
  return r;
}

/// 2-D nonnegative fluorescence image, row-major, in expected photons per
/// pixel per unit exposure.
struct Scene {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Scene() = default;
  Scene(std::size_t w, std::size_t h) : width(w), height(h), values(w * h, 0.0) {}
  Scene(std::size_t w, std::size_t h, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Stack of `channels` images sharing a spatial grid. Layout is channel-major,
/// then row-major: index = c * (W * H) + row * W + col.
struct SpectralCube {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  SpectralCube() = default;
  SpectralCube(std::size_t w, std::size_t h, std::size_t l)
      : width(w), height(h), channels(l), values(w * h * l, 0.0) {}

  std::size_t pixels() const noexcept { return width * height; }
  std::span<double> channel(std::size_t c) { return {values.data() + c * pixels(), pixels()}; }
  std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * pixels(), pixels()};
  }
  Scene channel_scene(std::size_t c) const;

  friend bool operator==(const SpectralCube&, const SpectralCube&) = default;
};

/// Throws ConfigError unless both dimensions are powers of two and the value
/// count matches.
void validate_dimensions(std::size_t width, std::size_t height);
/// Throws DataError if any value is negative or nonfinite.
void validate_nonnegative(std::span<const double> values);

SpectralCube to_cube(const Scene& scene);

}  // namespace cfm
