#include "cfm/patterns.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <unordered_set>

#include "cfm/error.hpp"
#include "cfm/image.hpp"
#include "cfm/rng.hpp"
#include "cfm/transforms.hpp"

namespace cfm {

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

constexpr std::uint64_t kRowStream = 1;
constexpr std::uint64_t kSubsetStream = 2;
constexpr std::uint64_t kPermStream = 3;

void set_bit(std::vector<std::uint8_t>& packed, std::size_t stride, std::size_t row,
             std::size_t col) {
  packed[row * stride + col / 8] |= static_cast<std::uint8_t>(0x80U >> (col % 8));
}

// Partial Fisher-Yates: the first k entries of a seeded shuffle of [0, n).
std::vector<std::size_t> seeded_prefix(std::size_t n, std::size_t k, std::uint64_t key) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  CounterRng rng(key);
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(v[i], v[j]);
  }
  v.resize(k);
  return v;
}

}  // namespace

std::string ensemble_tag(Ensemble::Kind kind) {
  switch (kind) {
    case Ensemble::Kind::bernoulli_binary:
      return "bernoulli";
    case Ensemble::Kind::hadamard_rows:
      return "hadamard";
    case Ensemble::Kind::raster:
      return "raster";
  }
  return "unknown";
}

Ensemble::Kind parse_ensemble_tag(const std::string& tag) {
  if (tag == "bernoulli") return Ensemble::Kind::bernoulli_binary;
  if (tag == "hadamard") return Ensemble::Kind::hadamard_rows;
  if (tag == "raster") return Ensemble::Kind::raster;
  throw FormatError("unknown ensemble tag '" + tag + "'");
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = kFnvOffset;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

PatternSet::PatternSet(std::size_t m, std::size_t n, Ensemble ensemble, bool differential,
                       std::vector<std::uint8_t> packed)
    : m_(m),
      n_(n),
      stride_((n + 7) / 8),
      ensemble_(std::move(ensemble)),
      differential_(differential),
      packed_(std::move(packed)) {
  if (m_ == 0 || n_ == 0) {
    throw ConfigError("pattern set needs M >= 1 and N >= 1");
  }
  if (packed_.size() != m_ * stride_) {
    throw FormatError("pattern payload has " + std::to_string(packed_.size()) +
                      " bytes, expected " + std::to_string(m_ * stride_));
  }
  if (n_ % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFU >> (n_ % 8));
    for (std::size_t i = 0; i < m_; ++i) {
      if (packed_[i * stride_ + stride_ - 1] & pad_mask) {
        throw FormatError("pattern row " + std::to_string(i) + " has nonzero pad bits");
      }
    }
  }
}

std::size_t PatternSet::on_count(std::size_t row) const noexcept {
  std::size_t c = 0;
  for (std::uint8_t b : row_bytes(row)) {
    c += static_cast<std::size_t>(std::popcount(b));
  }
  return c;
}

std::uint64_t PatternSet::content_hash() const noexcept { return fnv1a64(packed_); }

void PatternSet::set_hadamard_structure(std::vector<std::size_t> rows,
                                        std::vector<std::size_t> perm) {
  if (rows.size() != m_ || (!perm.empty() && perm.size() != n_) || !is_power_of_two(n_)) {
    throw ConfigError("hadamard structure does not match the pattern set shape");
  }
  hadamard_rows_ = std::move(rows);
  column_perm_ = std::move(perm);
}

bool PatternSet::detect_hadamard_structure() {
  if (!is_power_of_two(n_) || m_ > n_) {
    return false;
  }
  std::vector<std::size_t> rows(m_);
  std::vector<double> buf(n_);
  const auto n = static_cast<double>(n_);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      buf[j] = value(i, j) ? 1.0 : -1.0;
    }
    fwht_inplace(buf);
    // A Hadamard row transforms to N e_k; anything else is not one.
    std::size_t hit = n_;
    for (std::size_t k = 0; k < n_; ++k) {
      if (buf[k] == n) {
        if (hit != n_) return false;
        hit = k;
      } else if (buf[k] != 0.0) {
        return false;
      }
    }
    if (hit == n_) {
      return false;
    }
    rows[i] = hit;
  }
  hadamard_rows_ = std::move(rows);
  column_perm_.clear();
  return true;
}

PatternSet generate_patterns(const Ensemble& ensemble, std::size_t m, std::size_t n,
                             std::uint64_t seed, bool differential) {
  if (m == 0 || n == 0) {
    throw ConfigError("patterns: M and N must be at least 1");
  }
  const std::size_t stride = (n + 7) / 8;
  std::vector<std::uint8_t> packed(m * stride, 0);

  switch (ensemble.kind) {
    case Ensemble::Kind::raster: {
      if (m > n) {
        throw ConfigError("raster patterns: M (" + std::to_string(m) + ") exceeds N (" +
                          std::to_string(n) + ")");
      }
      for (std::size_t i = 0; i < m; ++i) {
        set_bit(packed, stride, i, i);
      }
      return PatternSet(m, n, ensemble, differential, std::move(packed));
    }
    case Ensemble::Kind::bernoulli_binary: {
      if (!(ensemble.density >= 0.0 && ensemble.density <= 1.0)) {
        throw ConfigError("bernoulli patterns: density must lie in [0, 1]");
      }
      const std::uint64_t base = derive_key(seed, kRowStream);
      for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t key = derive_key(base, i);
        for (std::size_t j = 0; j < n; ++j) {
          const double u = static_cast<double>(CounterRng::at(key, j) >> 11) * 0x1.0p-53;
          if (u < ensemble.density) {
            set_bit(packed, stride, i, j);
          }
        }
      }
      return PatternSet(m, n, ensemble, differential, std::move(packed));
    }
    case Ensemble::Kind::hadamard_rows: {
      if (!is_power_of_two(n)) {
        throw ConfigError("hadamard patterns: N must be a power of two");
      }
      if (m > n) {
        throw ConfigError("hadamard patterns: M (" + std::to_string(m) + ") exceeds N (" +
                          std::to_string(n) + ")");
      }
      std::vector<std::size_t> rows;
      if (!ensemble.rows.empty()) {
        rows = ensemble.rows;
        if (rows.size() != m) {
          throw ConfigError("hadamard patterns: explicit row subset size differs from M");
        }
        std::unordered_set<std::size_t> seen;
        for (std::size_t r : rows) {
          if (r >= n || !seen.insert(r).second) {
            throw ConfigError("hadamard patterns: explicit rows must be distinct and below N");
          }
        }
      } else if (m == n) {
        rows.resize(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      } else {
        rows = seeded_prefix(n, m, derive_key(seed, kSubsetStream));
      }
      std::vector<std::size_t> perm;
      if (ensemble.permute) {
        perm = seeded_prefix(n, n, derive_key(seed, kPermStream));
      }
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = perm.empty() ? j : perm[j];
          if (hadamard_entry(rows[i], k) > 0) {
            set_bit(packed, stride, i, j);
          }
        }
      }
      PatternSet set(m, n, ensemble, differential, std::move(packed));
      set.set_hadamard_structure(std::move(rows), std::move(perm));
      return set;
    }
  }
  throw ConfigError("patterns: unknown ensemble");
}

}  // namespace cfm
