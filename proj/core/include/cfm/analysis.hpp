#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfm/image.hpp"
#include "cfm/measurement.hpp"
#include "cfm/operator.hpp"
#include "cfm/patterns.hpp"
#include "cfm/phantoms.hpp"
#include "cfm/recovery.hpp"

namespace cfm {

/// Returned by psnr when the images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double mse(std::span<const double> truth, std::span<const double> estimate);

/// 10 log10(peak^2 / MSE) in dB; kPsnrIdentical when MSE is zero.
/// Throws ShapeError on a size mismatch and ConfigError for peak <= 0.
double psnr(std::span<const double> truth, std::span<const double> estimate, double peak);
double psnr(const Scene& truth, const Scene& estimate, double peak);

/// |estimate - truth|_2 / |truth|_2. For a zero truth this is 0 when the
/// estimate is zero too and +inf otherwise.
double rel_error(std::span<const double> truth, std::span<const double> estimate);

/// F1 score of the supports {i : |v_i| > threshold}; 1.0 when both are empty.
double support_f1(std::span<const double> truth, std::span<const double> estimate,
                  double threshold);
double support_f1(const Scene& truth, const Scene& estimate, double threshold);

enum class SolverKind { l1, tv };

/// A grid of (ratio, noise level) cells, each run for `trials` seeded trials.
struct SweepSpec {
  PhantomSpec phantom = PhantomSpec::spikes(16, 0);
  std::size_t width = 64;
  std::size_t height = 64;
  Ensemble ensemble = Ensemble::bernoulli(0.5);
  bool differential = true;
  /// N / M with M counted in physical detector readings.
  std::vector<double> ratios = {1.0};
  std::vector<NoiseModel> noise_ladder = {NoiseModel::none()};
  std::size_t trials = 1;
  SolverKind solver_kind = SolverKind::l1;
  SolverConfig solver;
  double tv_weight = 0.0;
  /// Relative error bound for success; empty uses 1e-3 for noiseless cells and
  /// 0.1 for noisy cells.
  std::optional<double> success_threshold;
  /// Support threshold as a fraction of the true peak value.
  double support_fraction = 1e-2;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// When false, wall_ms is written as 0 so reports are byte-reproducible.
  bool record_timing = true;

  /// Throws ConfigError on ratios < 1, no ratios, no noise levels, zero trials.
  void validate() const;
  double threshold_for(const NoiseModel& noise) const;
};

struct SweepRow {
  double ratio = 0.0;
  NoiseModel::Kind noise_kind = NoiseModel::Kind::noiseless;
  double noise_param = 0.0;
  std::size_t trial = 0;
  double rel_error = 0.0;
  double psnr_db = 0.0;
  double support_f1 = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  std::size_t physical_m = 0;
  std::size_t logical_patterns = 0;
  bool success = false;
  /// Failure message when the trial threw; metrics are NaN then.
  std::string error;
};

struct SweepCell {
  double ratio = 0.0;
  NoiseModel noise;
  double success_fraction = 0.0;
  double median_rel_error = 0.0;
};

struct SweepReport {
  /// Ordered by cell (ratio-major, then noise level) and then by trial.
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
};

/// Pattern counts for one ratio: physical readings round(N / ratio), reduced
/// to an even count when differential; returns {physical, logical}.
std::pair<std::size_t, std::size_t> pattern_budget(std::size_t n, double ratio, bool differential);

/// Seed of trial t in cell c.
std::uint64_t trial_seed(std::uint64_t spec_seed, std::size_t cell, std::size_t trial);

/// Runs every cell and trial. Trials are independent and may run on
/// spec.threads workers; the report does not depend on the thread count.
/// A failing trial is recorded as an unsuccessful row and never aborts the
/// sweep.
SweepReport run_sweep(const SweepSpec& spec);

/// Single trial of a sweep, exposed for partial reruns.
SweepRow run_trial(const SweepSpec& spec, std::size_t ratio_index, std::size_t noise_index,
                   std::size_t trial);

inline constexpr const char* kSweepCsvHeader =
    "ratio,noise_kind,noise_param,trial,rel_error,psnr_db,support_f1,iterations,wall_ms,"
    "physical_M,logical_patterns,success";

void write_sweep_csv(std::ostream& out, const SweepReport& report);
std::string sweep_csv(const SweepReport& report);
/// Parses rows written by write_sweep_csv. Throws FormatError on a bad header
/// or malformed row.
std::vector<SweepRow> parse_sweep_csv(std::istream& in);

/// Builds a sweep from its JSON description (see docs/formats.md).
/// Throws ConfigError on unknown keys or invalid values, FormatError on
/// malformed JSON.
SweepSpec sweep_spec_from_json(const std::string& text);

}  // namespace cfm
