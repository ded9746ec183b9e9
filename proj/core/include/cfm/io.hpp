#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfm/image.hpp"
#include "cfm/measurement.hpp"
#include "cfm/patterns.hpp"
#include "cfm/recovery.hpp"

namespace cfm {

// CFM1: "CFM1 <width> <height> <channels>\n" then width*height*channels
// little-endian float64 values, index = c*(W*H) + row*W + col.
void write_cfm1(std::ostream& out, const SpectralCube& cube);
SpectralCube read_cfm1(std::istream& in);
void write_cfm1(const std::filesystem::path& path, const SpectralCube& cube);
void write_cfm1(const std::filesystem::path& path, const Scene& scene);
SpectralCube read_cfm1(const std::filesystem::path& path);

// CFMP1: "CFMP1 <M> <N> <ensemble-tag> <0|1>\n" then M rows of ceil(N/8)
// bytes, MSB-first, zero pad bits. Unpermuted Hadamard structure is detected on
// read so the fast operator path survives a round trip.
void write_cfmp1(std::ostream& out, const PatternSet& patterns);
PatternSet read_cfmp1(std::istream& in);
void write_cfmp1(const std::filesystem::path& path, const PatternSet& patterns);
PatternSet read_cfmp1(const std::filesystem::path& path);

/// Sidecar path for a measurement or diagnostics CSV: "<path>.json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Measurement CSV: "index,value" then one row per reading, channels
// concatenated. The JSON sidecar records per-channel metadata.
void write_measurements(const std::filesystem::path& csv,
                        std::span<const MeasurementRecord> records);
/// Reads a measurement CSV and its sidecar. Without a sidecar the file is a
/// single channel of unknown provenance.
std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& csv);

// Diagnostics CSV "iter,objective,residual" plus a JSON sidecar with the
// resolved lambda, step size, iteration count and convergence flag.
template <class Image>
void write_diagnostics(const std::filesystem::path& csv, const RecoveryResult<Image>& result,
                       const std::string& solver);

}  // namespace cfm
