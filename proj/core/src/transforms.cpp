#include "cfm/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cfm/error.hpp"

namespace cfm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// One orthonormal Haar analysis step over n strided samples.
void haar_split(double* data, std::size_t n, std::size_t stride, std::vector<double>& tmp) {
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double a = data[(2 * i) * stride];
    const double b = data[(2 * i + 1) * stride];
    tmp[i] = (a + b) * kInvSqrt2;
    tmp[half + i] = (a - b) * kInvSqrt2;
  }
  for (std::size_t i = 0; i < n; ++i) {
    data[i * stride] = tmp[i];
  }
}

void haar_merge(double* data, std::size_t n, std::size_t stride, std::vector<double>& tmp) {
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double a = data[i * stride];
    const double d = data[(half + i) * stride];
    tmp[2 * i] = (a + d) * kInvSqrt2;
    tmp[2 * i + 1] = (a - d) * kInvSqrt2;
  }
  for (std::size_t i = 0; i < n; ++i) {
    data[i * stride] = tmp[i];
  }
}

void check_haar_shape(std::size_t size, std::size_t width, std::size_t height, unsigned levels) {
  validate_dimensions(width, height);
  if (size != width * height) {
    throw ConfigError("haar: buffer holds " + std::to_string(size) + " values, expected " +
                      std::to_string(width * height));
  }
  if (levels < 1 || levels > max_haar_levels(width, height)) {
    throw ConfigError("haar: levels must lie in [1, " +
                      std::to_string(max_haar_levels(width, height)) + "], got " +
                      std::to_string(levels));
  }
}

void haar_analyze(std::span<double> buf, std::size_t width, std::size_t height,
                  unsigned levels) {
  std::vector<double> tmp(std::max(width, height));
  std::size_t w = width;
  std::size_t h = height;
  for (unsigned l = 0; l < levels; ++l) {
    for (std::size_t r = 0; r < h; ++r) {
      haar_split(buf.data() + r * width, w, 1, tmp);
    }
    for (std::size_t c = 0; c < w; ++c) {
      haar_split(buf.data() + c, h, width, tmp);
    }
    w /= 2;
    h /= 2;
  }
}

void haar_synthesize(std::span<double> buf, std::size_t width, std::size_t height,
                     unsigned levels) {
  std::vector<double> tmp(std::max(width, height));
  for (unsigned l = levels; l-- > 0;) {
    const std::size_t w = width >> l;
    const std::size_t h = height >> l;
    for (std::size_t c = 0; c < w; ++c) {
      haar_merge(buf.data() + c, h, width, tmp);
    }
    for (std::size_t r = 0; r < h; ++r) {
      haar_merge(buf.data() + r * width, w, 1, tmp);
    }
  }
}

// out = C_h * X * C_w^T (forward) or C_h^T * X * C_w (inverse).
void dct_apply(std::span<const double> in, std::span<double> out, std::size_t width,
               std::size_t height, const std::vector<double>& c_rows,
               const std::vector<double>& c_cols, bool inverse) {
  std::vector<double> tmp(width * height, 0.0);
  for (std::size_t r = 0; r < height; ++r) {
    const double* x = in.data() + r * width;
    double* t = tmp.data() + r * width;
    for (std::size_t v = 0; v < width; ++v) {
      double acc = 0.0;
      for (std::size_t n = 0; n < width; ++n) {
        acc += (inverse ? c_cols[n * width + v] : c_cols[v * width + n]) * x[n];
      }
      t[v] = acc;
    }
  }
  for (std::size_t u = 0; u < height; ++u) {
    double* o = out.data() + u * width;
    for (std::size_t v = 0; v < width; ++v) {
      o[v] = 0.0;
    }
    for (std::size_t m = 0; m < height; ++m) {
      const double coef = inverse ? c_rows[m * height + u] : c_rows[u * height + m];
      const double* t = tmp.data() + m * width;
      for (std::size_t v = 0; v < width; ++v) {
        o[v] += coef * t[v];
      }
    }
  }
}

void check_dct_shape(std::size_t size, std::size_t width, std::size_t height) {
  validate_dimensions(width, height);
  if (size != width * height) {
    throw ConfigError("dct2: buffer holds " + std::to_string(size) + " values, expected " +
                      std::to_string(width * height));
  }
}

std::size_t bit_reverse(std::size_t x, unsigned bits) {
  std::size_t r = 0;
  for (unsigned b = 0; b < bits; ++b) {
    r = (r << 1) | ((x >> b) & 1U);
  }
  return r;
}

std::size_t gray_inverse(std::size_t g) {
  for (std::size_t shift = 1; shift < 64; shift <<= 1) {
    g ^= g >> shift;
  }
  return g;
}

}  // namespace

std::string to_string(const TransformKind& kind) {
  switch (kind.tag) {
    case TransformKind::Tag::walsh_hadamard:
      return "walsh_hadamard";
    case TransformKind::Tag::haar_wavelet:
      return "haar(" + std::to_string(kind.levels) + ")";
    case TransformKind::Tag::dct2:
      return "dct2";
  }
  return "unknown";
}

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n)) {
    throw LengthError("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      double* lo = v.data() + i;
      double* hi = lo + h;
      for (std::size_t j = 0; j < h; ++j) {
        const double a = lo[j];
        const double b = hi[j];
        lo[j] = a + b;
        hi[j] = a - b;
      }
    }
  }
}

std::vector<double> fwht(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  fwht_inplace(out);
  return out;
}

unsigned max_haar_levels(std::size_t width, std::size_t height) {
  return log2_floor(std::min(width, height));
}

std::vector<double> haar_forward(std::span<const double> img, std::size_t width,
                                 std::size_t height, unsigned levels) {
  check_haar_shape(img.size(), width, height, levels);
  std::vector<double> out(img.begin(), img.end());
  haar_analyze(out, width, height, levels);
  return out;
}

std::vector<double> haar_forward(const Scene& img, unsigned levels) {
  return haar_forward(img.values, img.width, img.height, levels);
}

Scene haar_inverse(std::span<const double> coeffs, unsigned levels, std::size_t width,
                   std::size_t height) {
  check_haar_shape(coeffs.size(), width, height, levels);
  Scene out(width, height, std::vector<double>(coeffs.begin(), coeffs.end()));
  haar_synthesize(out.values, width, height, levels);
  return out;
}

std::vector<double> dct_matrix(std::size_t n) {
  std::vector<double> c(n * n);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                         static_cast<double>(2 * n);
      c[k * n + i] = (k == 0 ? s0 : sk * std::cos(arg));
    }
  }
  return c;
}

std::vector<double> dct2_forward(std::span<const double> img, std::size_t width,
                                 std::size_t height) {
  check_dct_shape(img.size(), width, height);
  std::vector<double> out(img.size());
  dct_apply(img, out, width, height, dct_matrix(height), dct_matrix(width), false);
  return out;
}

std::vector<double> dct2_forward(const Scene& img) {
  return dct2_forward(img.values, img.width, img.height);
}

Scene dct2_inverse(std::span<const double> coeffs, std::size_t width, std::size_t height) {
  check_dct_shape(coeffs.size(), width, height);
  Scene out(width, height);
  dct_apply(coeffs, out.values, width, height, dct_matrix(height), dct_matrix(width), true);
  return out;
}

SparsityBasis::SparsityBasis(TransformKind kind, std::size_t width, std::size_t height)
    : kind_(kind), width_(width), height_(height) {
  validate_dimensions(width, height);
  switch (kind.tag) {
    case TransformKind::Tag::haar_wavelet:
      check_haar_shape(width * height, width, height, kind.levels);
      break;
    case TransformKind::Tag::dct2:
      dct_rows_ = dct_matrix(height);
      dct_cols_ = dct_matrix(width);
      break;
    case TransformKind::Tag::walsh_hadamard:
      break;
  }
}

void SparsityBasis::analyze(std::span<const double> pixels, std::span<double> coeffs) const {
  if (pixels.size() != size() || coeffs.size() != size()) {
    throw ShapeError("basis: buffer size does not match " + std::to_string(width_) + "x" +
                     std::to_string(height_));
  }
  switch (kind_.tag) {
    case TransformKind::Tag::haar_wavelet:
      std::copy(pixels.begin(), pixels.end(), coeffs.begin());
      haar_analyze(coeffs, width_, height_, kind_.levels);
      break;
    case TransformKind::Tag::dct2:
      dct_apply(pixels, coeffs, width_, height_, dct_rows_, dct_cols_, false);
      break;
    case TransformKind::Tag::walsh_hadamard: {
      std::copy(pixels.begin(), pixels.end(), coeffs.begin());
      fwht_inplace(coeffs);
      const double scale = 1.0 / std::sqrt(static_cast<double>(size()));
      for (double& c : coeffs) {
        c *= scale;
      }
      break;
    }
  }
}

void SparsityBasis::synthesize(std::span<const double> coeffs, std::span<double> pixels) const {
  if (pixels.size() != size() || coeffs.size() != size()) {
    throw ShapeError("basis: buffer size does not match " + std::to_string(width_) + "x" +
                     std::to_string(height_));
  }
  switch (kind_.tag) {
    case TransformKind::Tag::haar_wavelet:
      std::copy(coeffs.begin(), coeffs.end(), pixels.begin());
      haar_synthesize(pixels, width_, height_, kind_.levels);
      break;
    case TransformKind::Tag::dct2:
      dct_apply(coeffs, pixels, width_, height_, dct_rows_, dct_cols_, true);
      break;
    case TransformKind::Tag::walsh_hadamard:
      // The normalized Hadamard matrix is symmetric and its own inverse.
      analyze(coeffs, pixels);
      break;
  }
}

std::vector<std::size_t> SparsityBasis::fine_scale_indices() const {
  std::vector<std::size_t> idx;
  const std::size_t n = size();
  if (kind_.tag == TransformKind::Tag::walsh_hadamard) {
    const unsigned bits = log2_floor(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (gray_inverse(bit_reverse(i, bits)) >= n / 2) {
        idx.push_back(i);
      }
    }
    return idx;
  }
  for (std::size_t r = 0; r < height_; ++r) {
    for (std::size_t c = 0; c < width_; ++c) {
      if (r >= height_ / 2 || c >= width_ / 2) {
        idx.push_back(r * width_ + c);
      }
    }
  }
  return idx;
}

}  // namespace cfm
