#include "cfm/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "cfm/error.hpp"
#include "cfm/rng.hpp"

namespace cfm {

namespace {

constexpr std::uint64_t kObjectStream = 1;
constexpr std::uint64_t kSpectrumStream = 2;

struct Footprint {
  std::vector<std::size_t> pixels;
  std::vector<double> values;
};

std::size_t object_extent(const PhantomSpec& spec, double sigma) {
  switch (spec.kind) {
    case PhantomSpec::Kind::beads:
      return static_cast<std::size_t>(std::ceil(spec.radius_px));
    case PhantomSpec::Kind::blobs:
      return static_cast<std::size_t>(std::ceil(4.0 * sigma));
    case PhantomSpec::Kind::spikes:
      return 0;
  }
  return 0;
}

void check_fits(std::size_t extent, std::size_t width, std::size_t height) {
  if (2 * extent + 1 > width || 2 * extent + 1 > height) {
    throw ConfigError("phantom object of extent " + std::to_string(extent) +
                      " px does not fit in a " + std::to_string(width) + "x" +
                      std::to_string(height) + " image");
  }
}

// Draws a center whose footprint stays inside the frame.
std::pair<std::size_t, std::size_t> draw_center(CounterRng& rng, std::size_t extent,
                                                std::size_t width, std::size_t height) {
  for (;;) {
    const std::size_t col = rng.below(width);
    const std::size_t row = rng.below(height);
    if (col >= extent && col + extent < width && row >= extent && row + extent < height) {
      return {row, col};
    }
  }
}

std::vector<Footprint> place_objects(const PhantomSpec& spec, std::size_t width,
                                     std::size_t height) {
  spec.validate();
  validate_dimensions(width, height);
  const std::size_t n = width * height;
  const std::uint64_t base = derive_key(spec.seed, kObjectStream);

  switch (spec.kind) {
    case PhantomSpec::Kind::beads:
      check_fits(object_extent(spec, 0.0), width, height);
      break;
    case PhantomSpec::Kind::blobs:
      check_fits(object_extent(spec, spec.sigma_max_px), width, height);
      break;
    case PhantomSpec::Kind::spikes:
      if (spec.count > n) {
        throw ConfigError("spikes: count " + std::to_string(spec.count) + " exceeds pixel count " +
                          std::to_string(n));
      }
      break;
  }

  std::vector<Footprint> objects;
  objects.reserve(spec.count);
  std::unordered_set<std::size_t> used;
  for (std::size_t o = 0; o < spec.count; ++o) {
    CounterRng rng(derive_key(base, o));
    Footprint fp;
    switch (spec.kind) {
      case PhantomSpec::Kind::spikes: {
        const double amp = rng.uniform(spec.amplitude_min, spec.amplitude_max);
        std::size_t idx = 0;
        do {
          idx = rng.below(n);
        } while (used.contains(idx));
        used.insert(idx);
        fp.pixels.push_back(idx);
        fp.values.push_back(amp);
        break;
      }
      case PhantomSpec::Kind::beads: {
        const double amp = rng.uniform(spec.amplitude_min, spec.amplitude_max);
        const std::size_t ext = object_extent(spec, 0.0);
        const auto [cy, cx] = draw_center(rng, ext, width, height);
        const double r2 = spec.radius_px * spec.radius_px;
        for (std::size_t r = cy - ext; r <= cy + ext; ++r) {
          for (std::size_t c = cx - ext; c <= cx + ext; ++c) {
            const double dy = static_cast<double>(r) - static_cast<double>(cy);
            const double dx = static_cast<double>(c) - static_cast<double>(cx);
            if (dx * dx + dy * dy <= r2) {
              fp.pixels.push_back(r * width + c);
              fp.values.push_back(amp);
            }
          }
        }
        break;
      }
      case PhantomSpec::Kind::blobs: {
        const double sigma = rng.uniform(spec.sigma_min_px, spec.sigma_max_px);
        const double amp = rng.uniform(spec.amplitude_min, spec.amplitude_max);
        const std::size_t ext = object_extent(spec, sigma);
        const auto [cy, cx] = draw_center(rng, ext, width, height);
        const double cutoff2 = 16.0 * sigma * sigma;
        for (std::size_t r = cy - ext; r <= cy + ext; ++r) {
          for (std::size_t c = cx - ext; c <= cx + ext; ++c) {
            const double dy = static_cast<double>(r) - static_cast<double>(cy);
            const double dx = static_cast<double>(c) - static_cast<double>(cx);
            const double d2 = dx * dx + dy * dy;
            if (d2 <= cutoff2) {
              fp.pixels.push_back(r * width + c);
              fp.values.push_back(amp * std::exp(-d2 / (2.0 * sigma * sigma)));
            }
          }
        }
        break;
      }
    }
    objects.push_back(std::move(fp));
  }
  return objects;
}

std::vector<double> draw_spectrum(const SpectraModel& model, std::size_t channels,
                                  std::uint64_t key) {
  CounterRng rng(key);
  std::vector<double> s(channels, 0.0);
  switch (model.kind) {
    case SpectraModel::Kind::shared_support_random_spectra:
      for (double& v : s) {
        v = 1.0 - rng.uniform();  // (0, 1]
      }
      break;
    case SpectraModel::Kind::gaussian_emission_lines: {
      const auto top = static_cast<double>(channels - 1);
      double center = static_cast<double>(rng.below(channels)) +
                      rng.uniform(-model.center_jitter, model.center_jitter);
      center = std::clamp(center, 0.0, top);
      if (model.linewidth <= 0.0) {
        s[static_cast<std::size_t>(std::lround(center))] = 1.0;
        break;
      }
      const double w = model.linewidth;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = static_cast<double>(c) - center;
        if (std::abs(d) <= 4.0 * w) {
          s[c] = std::exp(-d * d / (2.0 * w * w));
        }
      }
      break;
    }
  }
  return s;
}

}  // namespace

PhantomSpec PhantomSpec::beads(std::size_t count, double radius_px, double amp_min,
                               double amp_max, std::uint64_t seed) {
  PhantomSpec s;
  s.kind = Kind::beads;
  s.count = count;
  s.radius_px = radius_px;
  s.amplitude_min = amp_min;
  s.amplitude_max = amp_max;
  s.seed = seed;
  return s;
}

PhantomSpec PhantomSpec::blobs(std::size_t count, double sigma_min_px, double sigma_max_px,
                               double amp_min, double amp_max, std::uint64_t seed) {
  PhantomSpec s;
  s.kind = Kind::blobs;
  s.count = count;
  s.sigma_min_px = sigma_min_px;
  s.sigma_max_px = sigma_max_px;
  s.amplitude_min = amp_min;
  s.amplitude_max = amp_max;
  s.seed = seed;
  return s;
}

PhantomSpec PhantomSpec::spikes(std::size_t count, std::uint64_t seed, double amp_min,
                                double amp_max) {
  PhantomSpec s;
  s.kind = Kind::spikes;
  s.count = count;
  s.amplitude_min = amp_min;
  s.amplitude_max = amp_max;
  s.seed = seed;
  return s;
}

void PhantomSpec::validate() const {
  if (!(amplitude_min > 0.0) || !(amplitude_max >= amplitude_min)) {
    throw ConfigError("phantom: amplitude range must be positive and ordered");
  }
  if (kind == Kind::beads && !(radius_px > 0.0)) {
    throw ConfigError("phantom: bead radius must be positive");
  }
  if (kind == Kind::blobs && (!(sigma_min_px > 0.0) || !(sigma_max_px >= sigma_min_px))) {
    throw ConfigError("phantom: blob sigma range must be positive and ordered");
  }
}

Scene generate_scene(const PhantomSpec& spec, std::size_t width, std::size_t height) {
  const auto objects = place_objects(spec, width, height);
  Scene scene(width, height);
  for (const auto& fp : objects) {
    for (std::size_t k = 0; k < fp.pixels.size(); ++k) {
      scene.values[fp.pixels[k]] += fp.values[k];
    }
  }
  return scene;
}

SpectralCube generate_cube(const PhantomSpec& spec, std::size_t width, std::size_t height,
                           std::size_t channels, const SpectraModel& spectra) {
  if (channels < 1) {
    throw ConfigError("cube: channel count must be at least 1");
  }
  if (spectra.center_jitter < 0.0 || spectra.linewidth < 0.0) {
    throw ConfigError("cube: emission line jitter and width must be nonnegative");
  }
  const auto objects = place_objects(spec, width, height);
  SpectralCube cube(width, height, channels);
  const std::size_t n = width * height;
  const std::uint64_t base = derive_key(spec.seed, kSpectrumStream);
  for (std::size_t o = 0; o < objects.size(); ++o) {
    // A single channel carries the plain scene.
    const auto s = channels == 1 ? std::vector<double>{1.0}
                                 : draw_spectrum(spectra, channels, derive_key(base, o));
    const auto& fp = objects[o];
    for (std::size_t c = 0; c < channels; ++c) {
      if (s[c] == 0.0) {
        continue;
      }
      for (std::size_t k = 0; k < fp.pixels.size(); ++k) {
        cube.values[c * n + fp.pixels[k]] += fp.values[k] * s[c];
      }
    }
  }
  return cube;
}

std::size_t sparsity(const Scene& scene, double threshold) {
  if (threshold < 0.0) {
    throw ConfigError("sparsity: threshold must be nonnegative");
  }
  return static_cast<std::size_t>(
      std::count_if(scene.values.begin(), scene.values.end(),
                    [threshold](double v) { return v > threshold; }));
}

std::size_t spatial_support_size(const SpectralCube& cube, double threshold) {
  const std::size_t n = cube.pixels();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cube.channels; ++c) {
      if (cube.values[c * n + i] > threshold) {
        ++k;
        break;
      }
    }
  }
  return k;
}

}  // namespace cfm
