#include "cfm/operator.hpp"

#include <algorithm>
#include <string>

#include "cfm/error.hpp"
#include "cfm/transforms.hpp"

namespace cfm {

namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string("operator: ") + what + " has length " + std::to_string(got) +
                     ", expected " + std::to_string(want));
  }
}

}  // namespace

SensingOperator::SensingOperator(const PatternSet& patterns, DcStrategy dc)
    : m_(patterns.m()),
      n_(patterns.n()),
      dc_(dc),
      bipolar_(patterns.differential()),
      path_(Path::dense) {
  if (dc_ == DcStrategy::mean_removal && bipolar_) {
    throw ConfigError("mean removal applies to non-differential pattern sets only");
  }

  bool single_pixel_rows = !bipolar_;
  for (std::size_t i = 0; i < m_ && single_pixel_rows; ++i) {
    single_pixel_rows = patterns.on_count(i) == 1;
  }

  if (single_pixel_rows) {
    path_ = Path::select;
    select_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (patterns.value(i, j)) {
          select_[i] = j;
          break;
        }
      }
    }
  } else if (!patterns.hadamard_rows().empty()) {
    path_ = Path::hadamard;
    had_rows_ = patterns.hadamard_rows();
    had_perm_ = patterns.column_permutation();
  } else {
    path_ = Path::dense;
    rows_.resize(m_ * n_);
    cols_.resize(m_ * n_);
    const std::int8_t off = bipolar_ ? -1 : 0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const std::int8_t v = patterns.value(i, j) ? 1 : off;
        rows_[i * n_ + j] = v;
        cols_[j * m_ + i] = v;
      }
    }
  }

  if (bipolar_) {
    frob_sq_ = static_cast<double>(m_) * static_cast<double>(n_);
  } else {
    std::vector<double> col_count(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (patterns.value(i, j)) col_count[j] += 1.0;
      }
    }
    frob_sq_ = 0.0;
    const auto m = static_cast<double>(m_);
    if (dc_ == DcStrategy::mean_removal) {
      col_mean_.resize(n_);
      for (std::size_t j = 0; j < n_; ++j) {
        col_mean_[j] = col_count[j] / m;
        frob_sq_ += m * col_mean_[j] * (1.0 - col_mean_[j]);
      }
    } else {
      for (double c : col_count) frob_sq_ += c;
    }
  }
}

void SensingOperator::apply_raw(std::span<const double> x, std::span<double> out) const {
  switch (path_) {
    case Path::select:
      for (std::size_t i = 0; i < m_; ++i) {
        out[i] = x[select_[i]];
      }
      break;
    case Path::hadamard: {
      std::vector<double> z(n_);
      if (had_perm_.empty()) {
        std::copy(x.begin(), x.end(), z.begin());
      } else {
        for (std::size_t j = 0; j < n_; ++j) z[had_perm_[j]] = x[j];
      }
      fwht_inplace(z);
      const double total = z[0];
      for (std::size_t i = 0; i < m_; ++i) {
        const double h = z[had_rows_[i]];
        out[i] = bipolar_ ? h : 0.5 * (h + total);
      }
      break;
    }
    case Path::dense:
      // Column axpys in ascending column order; zero entries of x (common for
      // sparse iterates) are skipped without changing the summation order.
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const std::int8_t* col = cols_.data() + j * m_;
        double* o = out.data();
        for (std::size_t i = 0; i < m_; ++i) o[i] += xj * col[i];
      }
      break;
  }
}

void SensingOperator::adjoint_raw(std::span<const double> r, std::span<double> out) const {
  switch (path_) {
    case Path::select:
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        out[select_[i]] += r[i];
      }
      break;
    case Path::hadamard: {
      std::vector<double> w(n_, 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        w[had_rows_[i]] = r[i];
        total += r[i];
      }
      fwht_inplace(w);
      for (std::size_t j = 0; j < n_; ++j) {
        const double h = had_perm_.empty() ? w[j] : w[had_perm_[j]];
        out[j] = bipolar_ ? h : 0.5 * (h + total);
      }
      break;
    }
    case Path::dense:
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        const std::int8_t* row = rows_.data() + i * n_;
        const double ri = r[i];
        if (ri == 0.0) continue;
        double* o = out.data();
        for (std::size_t j = 0; j < n_; ++j) o[j] += ri * row[j];
      }
      break;
  }
}

void SensingOperator::apply(std::span<const double> x, std::span<double> out) const {
  check_size(x.size(), n_, "input");
  check_size(out.size(), m_, "output");
  apply_raw(x, out);
  if (dc_ == DcStrategy::mean_removal) {
    double cx = 0.0;
    for (std::size_t j = 0; j < n_; ++j) cx += col_mean_[j] * x[j];
    for (double& v : out) v -= cx;
  }
}

void SensingOperator::adjoint(std::span<const double> r, std::span<double> out) const {
  check_size(r.size(), m_, "input");
  check_size(out.size(), n_, "output");
  adjoint_raw(r, out);
  if (dc_ == DcStrategy::mean_removal) {
    double total = 0.0;
    for (double v : r) total += v;
    for (std::size_t j = 0; j < n_; ++j) out[j] -= col_mean_[j] * total;
  }
}

std::vector<double> SensingOperator::apply(std::span<const double> x) const {
  std::vector<double> out(m_);
  apply(x, out);
  return out;
}

std::vector<double> SensingOperator::adjoint(std::span<const double> r) const {
  std::vector<double> out(n_);
  adjoint(r, out);
  return out;
}

std::vector<double> SensingOperator::to_dense() const {
  std::vector<double> a(m_ * n_);
  std::vector<double> e(n_, 0.0);
  std::vector<double> col(m_);
  for (std::size_t j = 0; j < n_; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < m_; ++i) a[i * n_ + j] = col[i];
  }
  return a;
}

std::vector<double> SensingOperator::prepare_readings(std::span<const double> y) const {
  check_size(y.size(), m_, "readings");
  std::vector<double> out(y.begin(), y.end());
  if (dc_ == DcStrategy::mean_removal) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(m_);
    for (double& v : out) v -= mean;
  }
  return out;
}

std::vector<double> apply_operator(const PatternSet& patterns, std::span<const double> x) {
  return SensingOperator(patterns).apply(x);
}

std::vector<double> apply_adjoint(const PatternSet& patterns, std::span<const double> r) {
  return SensingOperator(patterns).adjoint(r);
}

}  // namespace cfm
