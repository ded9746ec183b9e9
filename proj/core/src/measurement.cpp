#include "cfm/measurement.hpp"

#include <cmath>

#include "cfm/error.hpp"
#include "cfm/rng.hpp"

namespace cfm {

namespace {

// One noisy detector reading of the noiseless value `v`.
double detect(double v, const NoiseModel& noise, double scale, std::uint64_t key) {
  CounterRng rng(key);
  switch (noise.kind) {
    case NoiseModel::Kind::noiseless:
      return v;
    case NoiseModel::Kind::gaussian:
      return v + noise.sigma * rng.normal();
    case NoiseModel::Kind::poisson:
      if (scale == 0.0) return 0.0;
      return static_cast<double>(rng.poisson(v * scale)) / scale;
    case NoiseModel::Kind::poisson_plus_gaussian: {
      if (scale == 0.0) return 0.0;
      const auto counts = static_cast<double>(rng.poisson(v * scale));
      return (counts + noise.sigma * rng.normal()) / scale;
    }
  }
  return v;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(sigma >= 0.0)) {
    throw ConfigError("noise: sigma must be nonnegative");
  }
  if (uses_poisson() && !(photon_budget > 0.0)) {
    throw ConfigError("noise: photon budget must be positive");
  }
}

double NoiseModel::parameter() const noexcept {
  switch (kind) {
    case Kind::noiseless:
      return 0.0;
    case Kind::gaussian:
      return sigma;
    case Kind::poisson:
    case Kind::poisson_plus_gaussian:
      return photon_budget;
  }
  return 0.0;
}

std::string noise_kind_tag(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::noiseless:
      return "noiseless";
    case NoiseModel::Kind::gaussian:
      return "gaussian";
    case NoiseModel::Kind::poisson:
      return "poisson";
    case NoiseModel::Kind::poisson_plus_gaussian:
      return "poisson_gaussian";
  }
  return "unknown";
}

NoiseModel::Kind parse_noise_kind(const std::string& tag) {
  if (tag == "noiseless" || tag == "none") return NoiseModel::Kind::noiseless;
  if (tag == "gaussian") return NoiseModel::Kind::gaussian;
  if (tag == "poisson") return NoiseModel::Kind::poisson;
  if (tag == "poisson_gaussian" || tag == "poisson_plus_gaussian") {
    return NoiseModel::Kind::poisson_plus_gaussian;
  }
  throw ConfigError("unknown noise kind '" + tag + "'");
}

MeasurementRecord measure_values(std::span<const double> x, const PatternSet& patterns,
                                 const NoiseModel& noise, std::size_t channel) {
  noise.validate();
  if (x.size() != patterns.n()) {
    throw ShapeError("measure: pattern N = " + std::to_string(patterns.n()) +
                     " but scene has " + std::to_string(x.size()) + " pixels");
  }
  validate_nonnegative(x);

  double total = 0.0;
  for (double v : x) total += v;
  const double scale = noise.uses_poisson() && total > 0.0 ? noise.photon_budget / total : 0.0;
  const std::uint64_t channel_key = derive_key(noise.seed, channel);

  const std::size_t m = patterns.m();
  const std::size_t n = patterns.n();
  MeasurementRecord rec;
  rec.y.resize(m);
  rec.patterns_hash = patterns.content_hash();
  rec.noise = noise;
  rec.differential_combined = patterns.differential();
  rec.channel = channel;

  double flux_acc = 0.0;
  double on_fraction_acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double on = 0.0;
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (patterns.value(i, j)) {
        on += x[j];
      } else {
        off += x[j];
      }
    }
    if (patterns.differential()) {
      const double a = detect(on, noise, scale, derive_key(channel_key, 2 * i));
      const double b = detect(off, noise, scale, derive_key(channel_key, 2 * i + 1));
      rec.y[i] = a - b;
      flux_acc += a + b;
    } else {
      rec.y[i] = detect(on, noise, scale, derive_key(channel_key, i));
      flux_acc += rec.y[i];
      on_fraction_acc += static_cast<double>(patterns.on_count(i)) / static_cast<double>(n);
    }
  }
  if (patterns.differential()) {
    rec.total_flux = flux_acc / static_cast<double>(m);
  } else if (on_fraction_acc > 0.0) {
    rec.total_flux = flux_acc / on_fraction_acc;
  }
  return rec;
}

MeasurementRecord measure(const Scene& scene, const PatternSet& patterns,
                          const NoiseModel& noise) {
  auto rec = measure_values(scene.values, patterns, noise, 0);
  rec.width = scene.width;
  rec.height = scene.height;
  return rec;
}

std::vector<MeasurementRecord> measure_cube(const SpectralCube& cube,
                                            std::span<const PatternSet> patterns,
                                            const NoiseModel& noise) {
  if (patterns.size() != 1 && patterns.size() != cube.channels) {
    throw ShapeError("measure_cube: need one shared pattern set or one per channel");
  }
  std::vector<MeasurementRecord> out;
  out.reserve(cube.channels);
  for (std::size_t c = 0; c < cube.channels; ++c) {
    const PatternSet& p = patterns.size() == 1 ? patterns[0] : patterns[c];
    auto rec = measure_values(cube.channel(c), p, noise, c);
    rec.width = cube.width;
    rec.height = cube.height;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cfm
