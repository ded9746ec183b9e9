#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cfm {

/// Pattern ensemble. Every ensemble emits binary (0/1) mirror states; bipolar
/// sensing only arises from differential pairing.
struct Ensemble {
  enum class Kind { bernoulli_binary, hadamard_rows, raster };

  Kind kind = Kind::bernoulli_binary;
  /// Probability that a mirror is on (bernoulli_binary).
  double density = 0.5;
  /// Scramble pixel order with a seeded permutation (hadamard_rows).
  bool permute = false;
  /// Explicit Hadamard row subset; empty selects rows from the seed
  /// (all rows in natural order when M == N).
  std::vector<std::size_t> rows;

  static Ensemble bernoulli(double density = 0.5) { return {Kind::bernoulli_binary, density, false, {}}; }
  static Ensemble hadamard(bool permute = false, std::vector<std::size_t> rows = {}) {
    return {Kind::hadamard_rows, 0.5, permute, std::move(rows)};
  }
  static Ensemble raster() { return {Kind::raster, 0.5, false, {}}; }
};

/// Tag written into CFMP1 headers: "bernoulli", "hadamard" or "raster".
std::string ensemble_tag(Ensemble::Kind kind);
Ensemble::Kind parse_ensemble_tag(const std::string& tag);

/// M binary illumination patterns over N pixels, bit-packed MSB-first with
/// ceil(N/8) bytes per row and zero pad bits (the CFMP1 payload layout).
class PatternSet {
 public:
  /// Wraps packed rows. Throws FormatError on a wrong byte count or nonzero
  /// pad bits, ConfigError on M or N of zero.
  PatternSet(std::size_t m, std::size_t n, Ensemble ensemble, bool differential,
             std::vector<std::uint8_t> packed);

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t stride() const noexcept { return stride_; }
  const Ensemble& ensemble() const noexcept { return ensemble_; }
  bool differential() const noexcept { return differential_; }
  /// Detector readings per acquisition: 2M when differential, else M.
  std::size_t physical_readings() const noexcept { return differential_ ? 2 * m_ : m_; }

  bool value(std::size_t row, std::size_t col) const noexcept {
    return (packed_[row * stride_ + col / 8] >> (7 - col % 8)) & 1U;
  }
  std::span<const std::uint8_t> row_bytes(std::size_t row) const noexcept {
    return {packed_.data() + row * stride_, stride_};
  }
  const std::vector<std::uint8_t>& packed() const noexcept { return packed_; }
  std::size_t on_count(std::size_t row) const noexcept;

  /// 64-bit FNV-1a over the packed rows.
  std::uint64_t content_hash() const noexcept;

  /// Hadamard structure for the fast operator path: pattern i is
  /// (1 + H[row_i][perm[j]]) / 2 at pixel j. Empty when unknown.
  const std::vector<std::size_t>& hadamard_rows() const noexcept { return hadamard_rows_; }
  const std::vector<std::size_t>& column_permutation() const noexcept { return column_perm_; }
  void set_hadamard_structure(std::vector<std::size_t> rows, std::vector<std::size_t> perm);
  /// Detects unpermuted Hadamard rows in the packed bits and records them.
  /// Returns false (leaving the set unchanged) if any row is not one.
  bool detect_hadamard_structure();

  friend bool operator==(const PatternSet& a, const PatternSet& b) {
    return a.m_ == b.m_ && a.n_ == b.n_ && a.differential_ == b.differential_ &&
           a.ensemble_.kind == b.ensemble_.kind && a.packed_ == b.packed_;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t stride_;
  Ensemble ensemble_;
  bool differential_;
  std::vector<std::uint8_t> packed_;
  std::vector<std::size_t> hadamard_rows_;
  std::vector<std::size_t> column_perm_;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

/// Deterministic pattern generation. Bernoulli bits are drawn per row from
/// substream (seed, row) at counter = column, so any row can be regenerated
/// alone. Raster pattern i lights pixel i. Hadamard rows map H's +-1 entries
/// to 1/0. Throws ConfigError for M > N (raster, hadamard), non-power-of-two N
/// (hadamard), duplicate or out-of-range explicit rows, or density outside [0, 1].
PatternSet generate_patterns(const Ensemble& ensemble, std::size_t m, std::size_t n,
                             std::uint64_t seed, bool differential = false);

/// Entry H[row][col] of the natural-order Hadamard matrix.
inline int hadamard_entry(std::size_t row, std::size_t col) noexcept {
  return (__builtin_popcountll(row & col) & 1) ? -1 : 1;
}

}  // namespace cfm
