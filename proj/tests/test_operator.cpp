#include <gtest/gtest.h>

#include <cmath>

#include "cfm/error.hpp"
#include "cfm/measurement.hpp"
#include "cfm/operator.hpp"
#include "cfm/rng.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  cfm::CounterRng rng(seed);
  std::vector<double> v(n);
  for (double& a : v) a = rng.uniform(-1.0, 1.0);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Reference matrix built straight from the pattern bits.
std::vector<double> oracle_matrix(const cfm::PatternSet& p, bool mean_removal) {
  const std::size_t m = p.m();
  const std::size_t n = p.n();
  std::vector<double> a(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double bit = p.value(i, j) ? 1.0 : 0.0;
      a[i * n + j] = p.differential() ? 2.0 * bit - 1.0 : bit;
    }
  }
  if (mean_removal) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < m; ++i) c += a[i * n + j];
      c /= static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) a[i * n + j] -= c;
    }
  }
  return a;
}

std::vector<double> matvec(const std::vector<double>& a, const std::vector<double>& x,
                           std::size_t m, std::size_t n) {
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
  }
  return y;
}

std::vector<double> matvec_t(const std::vector<double>& a, const std::vector<double>& r,
                             std::size_t m, std::size_t n) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[j] += a[i * n + j] * r[i];
  }
  return x;
}

struct Case {
  cfm::Ensemble ensemble;
  std::size_t m;
  std::size_t n;
  bool differential;
  cfm::DcStrategy dc;
};

class OperatorCases : public ::testing::TestWithParam<Case> {};

TEST_P(OperatorCases, AdjointIdentity) {
  const auto& c = GetParam();
  const auto p = cfm::generate_patterns(c.ensemble, c.m, c.n, 11, c.differential);
  const cfm::SensingOperator op(p, c.dc);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto x = random_vector(c.n, 2 * t);
    const auto y = random_vector(c.m, 2 * t + 1);
    const double lhs = dot(op.apply(x), y);
    const double rhs = dot(x, op.adjoint(y));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_P(OperatorCases, MatchesOracleMatrix) {
  const auto& c = GetParam();
  const auto p = cfm::generate_patterns(c.ensemble, c.m, c.n, 11, c.differential);
  const cfm::SensingOperator op(p, c.dc);
  const auto a = oracle_matrix(p, c.dc == cfm::DcStrategy::mean_removal);
  const auto x = random_vector(c.n, 100);
  const auto r = random_vector(c.m, 101);
  const auto y = op.apply(x);
  const auto yr = matvec(a, x, c.m, c.n);
  for (std::size_t i = 0; i < c.m; ++i) EXPECT_NEAR(y[i], yr[i], 1e-10) << i;
  const auto z = op.adjoint(r);
  const auto zr = matvec_t(a, r, c.m, c.n);
  for (std::size_t j = 0; j < c.n; ++j) EXPECT_NEAR(z[j], zr[j], 1e-10) << j;

  const auto dense = op.to_dense();
  ASSERT_EQ(dense.size(), a.size());
  double frob = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(dense[k], a[k], 1e-14);
    frob += a[k] * a[k];
  }
  EXPECT_NEAR(op.frobenius_norm_sq(), frob, 1e-9 * frob);
}

INSTANTIATE_TEST_SUITE_P(
    Ensembles, OperatorCases,
    ::testing::Values(Case{cfm::Ensemble::bernoulli(), 40, 64, false, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::bernoulli(), 40, 64, true, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::bernoulli(0.2), 33, 100, false,
                           cfm::DcStrategy::mean_removal},
                      Case{cfm::Ensemble::hadamard(), 16, 64, false, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::hadamard(), 16, 64, true, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::hadamard(true), 100, 256, true, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::hadamard(true), 30, 128, false,
                           cfm::DcStrategy::mean_removal},
                      Case{cfm::Ensemble::raster(), 64, 64, false, cfm::DcStrategy::none},
                      Case{cfm::Ensemble::raster(), 20, 64, true, cfm::DcStrategy::none}));

TEST(Operator, HadamardFastPathMatchesDenseUpTo512) {
  for (std::size_t n = 2; n <= 512; n *= 2) {
    const std::size_t m = std::max<std::size_t>(1, n / 3);
    const auto p = cfm::generate_patterns(cfm::Ensemble::hadamard(true), m, n, n, true);
    // Same bits without structure metadata take the dense path.
    const cfm::PatternSet plain(p.m(), p.n(), p.ensemble(), true, p.packed());
    const cfm::SensingOperator fast(p);
    const cfm::SensingOperator slow(plain);
    const auto x = random_vector(n, 3);
    const auto a = fast.apply(x);
    const auto b = slow.apply(x);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << "N " << n;
    const auto r = random_vector(m, 4);
    const auto c = fast.adjoint(r);
    const auto d = slow.adjoint(r);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(c[j], d[j], 1e-10) << "N " << n;
  }
}

TEST(Operator, ForwardReproducesNoiselessReadings) {
  cfm::Scene s(8, 8);
  for (std::size_t i = 0; i < 64; ++i) s.values[i] = static_cast<double>((i * 7) % 3);
  for (bool diff : {false, true}) {
    const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 24, 64, 8, diff);
    const auto rec = cfm::measure(s, p, cfm::NoiseModel::none());
    EXPECT_EQ(cfm::apply_operator(p, s.values), rec.y);
  }
}

TEST(Operator, MeanRemovalIdentity) {
  // y - mean(y) = (P - 1 c^T) x for every x, with y = P x.
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 50, 64, 21);
  const cfm::SensingOperator raw(p);
  const cfm::SensingOperator centered(p, cfm::DcStrategy::mean_removal);
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto x = random_vector(64, t);
    for (double& v : x) v = std::abs(v);
    const auto y = raw.apply(x);
    const auto lhs = centered.prepare_readings(y);
    const auto rhs = centered.apply(x);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= 50.0;
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_NEAR(lhs[i], y[i] - mean, 1e-12);
      EXPECT_NEAR(lhs[i], rhs[i], 1e-10);
    }
  }
  const auto y = raw.apply(random_vector(64, 99));
  EXPECT_EQ(raw.prepare_readings(y), y);
}

TEST(Operator, RejectsShapeMismatch) {
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 4, 16, 0);
  const cfm::SensingOperator op(p);
  EXPECT_THROW(op.apply(std::vector<double>(15)), cfm::ShapeError);
  EXPECT_THROW(op.adjoint(std::vector<double>(5)), cfm::ShapeError);
  const auto d = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 4, 16, 0, true);
  EXPECT_THROW(cfm::SensingOperator(d, cfm::DcStrategy::mean_removal), cfm::ConfigError);
}

}  // namespace
