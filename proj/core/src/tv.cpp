#include "cfm/tv.hpp"

#include <algorithm>
#include <cmath>

#include "cfm/error.hpp"

namespace cfm {

double tv_aniso(std::span<const double> img, std::size_t width, std::size_t height) {
  if (img.size() != width * height) {
    throw ShapeError("tv: buffer does not match image shape");
  }
  double tv = 0.0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double v = img[r * width + c];
      if (c + 1 < width) tv += std::abs(img[r * width + c + 1] - v);
      if (r + 1 < height) tv += std::abs(img[(r + 1) * width + c] - v);
    }
  }
  return tv;
}

// L. Condat, "A direct algorithm for 1D total variation denoising", IEEE SPL 2013.
void tv_prox_1d(const double* in, double* out, std::size_t n, std::size_t stride,
                double lambda) {
  if (n == 0) return;
  if (!(lambda > 0.0) || n == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k * stride] = in[k * stride];
    return;
  }
  auto x = [&](std::size_t k) { return in[k * stride]; };
  auto y = [&](std::size_t k) -> double& { return out[k * stride]; };

  const std::size_t last = n - 1;
  std::size_t k = 0;
  std::size_t k0 = 0;
  std::size_t kplus = 0;
  std::size_t kminus = 0;
  double umin = lambda;
  double umax = -lambda;
  double vmin = x(0) - lambda;
  double vmax = x(0) + lambda;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;

  for (;;) {
    while (k == last) {
      if (umin < 0.0) {
        do y(k0++) = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = x(k);
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do y(k0++) = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = x(k);
        umax = minlambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do y(k0++) = vmin; while (k0 <= k);
        return;
      }
    }
    if ((umin += x(k + 1) - vmin) < minlambda) {
      do y(k0++) = vmin; while (k0 <= kminus);
      k = kplus = kminus = k0;
      vmin = x(k);
      vmax = vmin + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += x(k + 1) - vmax) > lambda) {
      do y(k0++) = vmax; while (k0 <= kplus);
      k = kplus = kminus = k0;
      vmax = x(k);
      vmin = vmax - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        kplus = k;
        vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

std::vector<double> tv_prox_1d(std::span<const double> v, double lambda) {
  std::vector<double> out(v.size());
  tv_prox_1d(v.data(), out.data(), v.size(), 1, lambda);
  return out;
}

std::size_t tv_prox_aniso(std::span<const double> v, std::span<double> out, std::size_t width,
                          std::size_t height, double lambda, const TvProxOptions& opts) {
  const std::size_t n = width * height;
  if (v.size() != n || out.size() != n) {
    throw ShapeError("tv prox: buffer does not match image shape");
  }
  if (!(lambda >= 0.0)) {
    throw ConfigError("tv prox: lambda must be nonnegative");
  }

  std::vector<double> x(v.begin(), v.end());
  std::vector<double> p(n, 0.0);
  std::vector<double> q(n, 0.0);
  std::vector<double> tmp(n);
  std::vector<double> yv(n);

  double scale = 1.0;
  for (double a : v) scale = std::max(scale, std::abs(a));

  std::size_t sweeps = 0;
  if (lambda > 0.0) {
    for (; sweeps < opts.max_iters; ++sweeps) {
      // Rows.
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + p[i];
      for (std::size_t r = 0; r < height; ++r) {
        tv_prox_1d(tmp.data() + r * width, yv.data() + r * width, width, 1, lambda);
      }
      for (std::size_t i = 0; i < n; ++i) p[i] = tmp[i] - yv[i];
      // Columns.
      for (std::size_t i = 0; i < n; ++i) tmp[i] = yv[i] + q[i];
      double change = 0.0;
      for (std::size_t c = 0; c < width; ++c) {
        tv_prox_1d(tmp.data() + c, out.data() + c, height, width, lambda);
      }
      for (std::size_t i = 0; i < n; ++i) {
        q[i] = tmp[i] - out[i];
        change = std::max(change, std::abs(out[i] - x[i]));
        x[i] = out[i];
      }
      if (change <= opts.tol * scale) {
        ++sweeps;
        break;
      }
    }
  }
  std::copy(x.begin(), x.end(), out.begin());
  if (opts.nonnegative) {
    for (double& a : out) a = std::max(a, 0.0);
  }
  return sweeps;
}

}  // namespace cfm
