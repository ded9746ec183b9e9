#pragma once

#include <cstddef>
#include <cstdint>

#include "cfm/image.hpp"

namespace cfm {

/// Synthetic fluorescent scene description. All geometry is in pixels; the
/// same spec and dimensions always produce the same scene.
struct PhantomSpec {
  enum class Kind { beads, blobs, spikes };

  Kind kind = Kind::spikes;
  std::size_t count = 0;
  double radius_px = 2.0;  // beads
  double sigma_min_px = 1.0;  // blobs
  double sigma_max_px = 2.0;
  double amplitude_min = 1.0;
  double amplitude_max = 1.0;
  std::uint64_t seed = 0;

  static PhantomSpec beads(std::size_t count, double radius_px, double amp_min, double amp_max,
                           std::uint64_t seed);
  static PhantomSpec blobs(std::size_t count, double sigma_min_px, double sigma_max_px,
                           double amp_min, double amp_max, std::uint64_t seed);
  static PhantomSpec spikes(std::size_t count, std::uint64_t seed, double amp_min = 1.0,
                            double amp_max = 1.0);

  /// Throws ConfigError on nonpositive radii/sigmas or unordered ranges.
  void validate() const;
};

/// How a cube assigns an emission spectrum to each spatial object.
struct SpectraModel {
  enum class Kind { shared_support_random_spectra, gaussian_emission_lines };

  Kind kind = Kind::shared_support_random_spectra;
  /// Emission line center is a uniformly chosen channel k perturbed by
  /// uniform(-center_jitter, center_jitter), clamped to [0, L-1].
  double center_jitter = 0.0;
  /// Gaussian line width in channels, truncated at 4 widths; 0 puts the whole
  /// line in the channel nearest its center.
  double linewidth = 1.0;

  static SpectraModel random_spectra() { return {}; }
  static SpectraModel emission_lines(double center_jitter, double linewidth) {
    return {Kind::gaussian_emission_lines, center_jitter, linewidth};
  }
};

/// Beads are hard disks (pixels within radius of an integer center), blobs are
/// Gaussians truncated at 4 sigma, spikes are distinct single pixels.
/// Overlapping beads and blobs add.
/// Throws ConfigError when the dimensions are not powers of two or an object
/// cannot fit inside the frame.
Scene generate_scene(const PhantomSpec& spec, std::size_t width, std::size_t height);

/// Every spatial object of `spec` carries one spectrum over all channels, so
/// nonzero voxels form whole spectral fibers on the object footprints.
SpectralCube generate_cube(const PhantomSpec& spec, std::size_t width, std::size_t height,
                           std::size_t channels, const SpectraModel& spectra);

/// Number of values strictly above `threshold` (threshold >= 0).
std::size_t sparsity(const Scene& scene, double threshold = 0.0);

/// Number of spatial sites whose spectral fiber has any value above `threshold`.
std::size_t spatial_support_size(const SpectralCube& cube, double threshold = 0.0);

}  // namespace cfm
