#include "cfm/image.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cfm/error.hpp"

namespace cfm {

Scene::Scene(std::size_t w, std::size_t h, std::vector<double> v)
    : width(w), height(h), values(std::move(v)) {
  if (values.size() != w * h) {
    throw ShapeError("scene value count " + std::to_string(values.size()) + " != " +
                     std::to_string(w) + "x" + std::to_string(h));
  }
}

Scene SpectralCube::channel_scene(std::size_t c) const {
  auto span = channel(c);
  return Scene(width, height, std::vector<double>(span.begin(), span.end()));
}

void validate_dimensions(std::size_t width, std::size_t height) {
  if (!is_power_of_two(width) || !is_power_of_two(height)) {
    throw ConfigError("image dimensions must be powers of two, got " + std::to_string(width) +
                      "x" + std::to_string(height));
  }
}

void validate_nonnegative(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw DataError("scene value at index " + std::to_string(i) +
                      " is negative or nonfinite");
    }
  }
}

SpectralCube to_cube(const Scene& scene) {
  SpectralCube cube(scene.width, scene.height, 1);
  cube.values = scene.values;
  return cube;
}

}  // namespace cfm
