#include <cmath>
#include <string>

#include "cfm/analysis.hpp"
#include "cfm/error.hpp"

namespace cfm {

namespace {

void check_same(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("metric operands differ in size: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

void check_same(const Scene& a, const Scene& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError("metric operands differ in shape");
  }
}

}  // namespace

double mse(std::span<const double> truth, std::span<const double> estimate) {
  check_same(truth, estimate);
  if (truth.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimate[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(truth.size());
}

double psnr(std::span<const double> truth, std::span<const double> estimate, double peak) {
  if (!(peak > 0.0)) {
    throw ConfigError("psnr: peak must be positive");
  }
  const double e = mse(truth, estimate);
  if (e == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / e);
}

double psnr(const Scene& truth, const Scene& estimate, double peak) {
  check_same(truth, estimate);
  return psnr(truth.values, estimate.values, peak);
}

double rel_error(std::span<const double> truth, std::span<const double> estimate) {
  check_same(truth, estimate);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimate[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(num / den);
}

double support_f1(std::span<const double> truth, std::span<const double> estimate,
                  double threshold) {
  check_same(truth, estimate);
  std::size_t tp = 0;
  std::size_t t_count = 0;
  std::size_t e_count = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = std::abs(truth[i]) > threshold;
    const bool e = std::abs(estimate[i]) > threshold;
    t_count += t;
    e_count += e;
    tp += t && e;
  }
  if (t_count == 0 && e_count == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(t_count + e_count);
}

double support_f1(const Scene& truth, const Scene& estimate, double threshold) {
  check_same(truth, estimate);
  return support_f1(truth.values, estimate.values, threshold);
}

}  // namespace cfm
