#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfm/image.hpp"
#include "cfm/patterns.hpp"

namespace cfm {

/// Detector noise. Gaussian sigma is in reading units; in
/// poisson_plus_gaussian it is in photon counts and is added before the
/// photon counts are rescaled to scene units. The photon budget is the expected
/// photon count with every mirror on.
struct NoiseModel {
  enum class Kind { noiseless, gaussian, poisson, poisson_plus_gaussian };

  Kind kind = Kind::noiseless;
  double sigma = 0.0;
  double photon_budget = 0.0;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed) {
    return {Kind::gaussian, sigma, 0.0, seed};
  }
  static NoiseModel poisson(double budget, std::uint64_t seed) {
    return {Kind::poisson, 0.0, budget, seed};
  }
  static NoiseModel poisson_gaussian(double budget, double sigma, std::uint64_t seed) {
    return {Kind::poisson_plus_gaussian, sigma, budget, seed};
  }

  bool uses_poisson() const noexcept {
    return kind == Kind::poisson || kind == Kind::poisson_plus_gaussian;
  }
  /// Throws ConfigError on negative sigma or nonpositive budget.
  void validate() const;
  /// The model's defining parameter: sigma for gaussian, budget otherwise.
  double parameter() const noexcept;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

std::string noise_kind_tag(NoiseModel::Kind kind);
NoiseModel::Kind parse_noise_kind(const std::string& tag);

/// Detector readings for one pattern set (one channel). With differential
/// patterns each entry of `y` is already the pair difference m(p) - m(1-p).
struct MeasurementRecord {
  std::vector<double> y;
  std::uint64_t patterns_hash = 0;
  /// Empty when readings came without a sidecar.
  std::optional<NoiseModel> noise;
  bool differential_combined = false;
  /// Estimate of sum(x) in scene units, formed from the readings.
  std::optional<double> total_flux;
  /// Scene shape when known (0 otherwise).
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channel = 0;
};

/// Simulates single-point detection. Reading k of channel c draws its noise
/// from substream derive_key(derive_key(seed, c), k), where differential pair i
/// uses k = 2i for p and k = 2i + 1 for 1 - p. Poisson readings are
/// Poisson(<p, x> * budget / |x|_1) rescaled by the same factor.
/// Throws ShapeError if the pattern N differs from the scene, DataError on
/// negative or nonfinite scene values.
MeasurementRecord measure(const Scene& scene, const PatternSet& patterns,
                          const NoiseModel& noise);

/// Measures each channel; `patterns` holds either one shared set or one set per
/// channel.
std::vector<MeasurementRecord> measure_cube(const SpectralCube& cube,
                                            std::span<const PatternSet> patterns,
                                            const NoiseModel& noise);

/// Core of measure() on a raw pixel vector, exposed for the cube path.
MeasurementRecord measure_values(std::span<const double> x, const PatternSet& patterns,
                                 const NoiseModel& noise, std::size_t channel);

}  // namespace cfm
