#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfm/image.hpp"

namespace cfm {

/// Fast orthogonal transforms, used as matrix-free sensing operators (fwht)
/// and as sparsifying bases (haar, dct2, orthonormal walsh-hadamard).
struct TransformKind {
  enum class Tag { walsh_hadamard, haar_wavelet, dct2 };
  Tag tag = Tag::haar_wavelet;
  /// Decomposition depth, used by haar_wavelet only.
  unsigned levels = 1;

  static TransformKind walsh_hadamard() { return {Tag::walsh_hadamard, 0}; }
  static TransformKind haar(unsigned levels) { return {Tag::haar_wavelet, levels}; }
  static TransformKind dct2() { return {Tag::dct2, 0}; }

  friend bool operator==(const TransformKind&, const TransformKind&) = default;
};

std::string to_string(const TransformKind& kind);

/// Unnormalized natural-order (Hadamard-ordered) Walsh-Hadamard transform in
/// place: v <- H_N v. Applying it twice multiplies by N.
/// Throws LengthError unless v.size() is a power of two.
void fwht_inplace(std::span<double> v);
std::vector<double> fwht(std::span<const double> v);

/// Largest admissible Haar depth for a width x height image.
unsigned max_haar_levels(std::size_t width, std::size_t height);

/// Orthonormal 2-D Haar analysis in Mallat layout: at each level the rows and
/// then the columns of the current low-pass block are split into
/// (x0 + x1)/sqrt2 | (x0 - x1)/sqrt2 halves. Output has the image's shape,
/// flattened row-major.
std::vector<double> haar_forward(const Scene& img, unsigned levels);
std::vector<double> haar_forward(std::span<const double> img, std::size_t width,
                                 std::size_t height, unsigned levels);
Scene haar_inverse(std::span<const double> coeffs, unsigned levels, std::size_t width,
                   std::size_t height);

/// Orthonormal separable type-II DCT; coefficient (u, v) is stored at u * width + v
/// with u the vertical frequency.
std::vector<double> dct2_forward(const Scene& img);
std::vector<double> dct2_forward(std::span<const double> img, std::size_t width,
                                 std::size_t height);
Scene dct2_inverse(std::span<const double> coeffs, std::size_t width, std::size_t height);

/// Orthonormal 1-D DCT-II matrix, row k = frequency k, row-major n x n.
std::vector<double> dct_matrix(std::size_t n);

/// An orthonormal sparsifying basis bound to one image shape. `analyze` maps
/// pixels to coefficients (Psi x); `synthesize` is its transpose and inverse.
/// The identity basis is represented by an empty optional at call sites.
class SparsityBasis {
 public:
  SparsityBasis(TransformKind kind, std::size_t width, std::size_t height);

  const TransformKind& kind() const noexcept { return kind_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return width_ * height_; }

  void analyze(std::span<const double> pixels, std::span<double> coeffs) const;
  void synthesize(std::span<const double> coeffs, std::span<double> pixels) const;

  /// Indices of the finest-scale (high-frequency) coefficients, used for
  /// MAD noise estimation.
  std::vector<std::size_t> fine_scale_indices() const;

 private:
  TransformKind kind_;
  std::size_t width_;
  std::size_t height_;
  std::vector<double> dct_rows_;  // height x height
  std::vector<double> dct_cols_;  // width x width
};

}  // namespace cfm
