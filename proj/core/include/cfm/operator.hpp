#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfm/patterns.hpp"

namespace cfm {

/// How raw binary readings are turned into a well-conditioned linear system.
enum class DcStrategy {
  /// Use the patterns as acquired: binary rows, or bipolar rows (2p - 1) when
  /// the set is differential.
  none,
  /// Center readings across the pattern set: y - mean(y) = (P - 1 c^T) x with
  /// c the column means of P. Exact; only valid for non-differential sets.
  mean_removal,
};

/// Matrix-free forward operator A (rows() x cols()) and its adjoint for one
/// pattern set. Raster-like sets use coordinate selection, sets with known
/// Hadamard structure use the fwht, everything else a dense row-major copy.
/// Every output is accumulated in a fixed index order, so results are bitwise
/// reproducible regardless of vectorization.
class SensingOperator {
 public:
  explicit SensingOperator(const PatternSet& patterns, DcStrategy dc = DcStrategy::none);

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }
  DcStrategy dc_strategy() const noexcept { return dc_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  void adjoint(std::span<const double> r, std::span<double> out) const;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> adjoint(std::span<const double> r) const;

  /// Squared Frobenius norm, i.e. the sum of squared column norms.
  double frobenius_norm_sq() const noexcept { return frob_sq_; }

  /// Dense copy of the operator, row-major, for tests and small problems.
  std::vector<double> to_dense() const;

  /// Transforms raw readings into the right-hand side matching this operator
  /// (identity unless mean removal is active).
  std::vector<double> prepare_readings(std::span<const double> y) const;

 private:
  enum class Path { select, hadamard, dense };

  void apply_raw(std::span<const double> x, std::span<double> out) const;
  void adjoint_raw(std::span<const double> r, std::span<double> out) const;

  std::size_t m_;
  std::size_t n_;
  DcStrategy dc_;
  bool bipolar_;
  Path path_;
  std::vector<std::size_t> select_;      // select: lit pixel per row
  std::vector<std::size_t> had_rows_;    // hadamard
  std::vector<std::size_t> had_perm_;
  std::vector<std::int8_t> rows_;        // dense, row-major: 0, 1 or -1
  std::vector<std::int8_t> cols_;        // dense, column-major copy
  std::vector<double> col_mean_;         // mean_removal: c
  double frob_sq_ = 0.0;
};

/// One-shot A x and A^T r; build a SensingOperator to amortize setup.
std::vector<double> apply_operator(const PatternSet& patterns, std::span<const double> x);
std::vector<double> apply_adjoint(const PatternSet& patterns, std::span<const double> r);

}  // namespace cfm
