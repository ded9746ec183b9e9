#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cfm/error.hpp"
#include "cfm/measurement.hpp"
#include "cfm/phantoms.hpp"

namespace {

cfm::PatternSet all_ones(std::size_t m, std::size_t n) {
  const std::size_t stride = (n + 7) / 8;
  std::vector<std::uint8_t> bytes(m * stride, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) bytes[i * stride + j / 8] |= 0x80 >> (j % 8);
  }
  return cfm::PatternSet(m, n, cfm::Ensemble::bernoulli(), false, std::move(bytes));
}

TEST(Measure, AllOnesPatternSumsScene) {
  const cfm::Scene s(8, 8, std::vector<double>(64, 0.25));
  const auto rec = cfm::measure(s, all_ones(3, 64), cfm::NoiseModel::none());
  for (double y : rec.y) EXPECT_EQ(y, 16.0);
  EXPECT_EQ(rec.width, 8U);
  EXPECT_EQ(rec.height, 8U);
  EXPECT_FALSE(rec.differential_combined);
}

TEST(Measure, RasterReturnsPixels) {
  const auto s = cfm::generate_scene(cfm::PhantomSpec::blobs(3, 1, 1.5, 0.5, 1, 4), 16, 16);
  const auto rec =
      cfm::measure(s, cfm::generate_patterns(cfm::Ensemble::raster(), 256, 256, 0),
                   cfm::NoiseModel::none());
  EXPECT_EQ(rec.y, s.values);
}

TEST(Measure, DifferentialIsExactOnIntegerScenes) {
  cfm::Scene s(8, 4);
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = static_cast<double>(i % 5);
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 20, 32, 6, true);
  const auto rec = cfm::measure(s, p, cfm::NoiseModel::none());
  EXPECT_TRUE(rec.differential_combined);
  ASSERT_TRUE(rec.total_flux.has_value());
  double total = 0.0;
  for (double v : s.values) total += v;
  EXPECT_EQ(*rec.total_flux, total);
  for (std::size_t i = 0; i < 20; ++i) {
    double ref = 0.0;
    for (std::size_t j = 0; j < 32; ++j) ref += (p.value(i, j) ? 1.0 : -1.0) * s.values[j];
    EXPECT_EQ(rec.y[i], ref);
  }
  EXPECT_EQ(rec.patterns_hash, p.content_hash());
}

TEST(Measure, PoissonMeanAndFano) {
  // Single-pixel scene with an all-ones pattern: the reading is Poisson(budget) / budget * x.
  const cfm::Scene s(1, 1, {2.0});
  const auto p = all_ones(1, 1);
  const double budget = 50.0;
  const int draws = 10000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    const auto rec = cfm::measure(s, p, cfm::NoiseModel::poisson(budget, 1000 + k));
    const double raw = rec.y[0] * budget / 2.0;
    const double counts = std::round(raw);
    ASSERT_NEAR(raw, counts, 1e-9);
    sum += counts;
    sum2 += counts * counts;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  EXPECT_NEAR(mean, budget, 3.0 * std::sqrt(budget / draws));
  EXPECT_NEAR(var / mean, 1.0, 0.05);
}

TEST(Measure, GaussianVariance) {
  const cfm::Scene s(4, 4, std::vector<double>(16, 1.0));
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 2000, 16, 3);
  const auto clean = cfm::measure(s, p, cfm::NoiseModel::none());
  const auto noisy = cfm::measure(s, p, cfm::NoiseModel::gaussian(0.5, 9));
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    const double e = noisy.y[i] - clean.y[i];
    sum += e;
    sum2 += e * e;
  }
  EXPECT_NEAR(sum / 2000.0, 0.0, 3.0 * 0.5 / std::sqrt(2000.0));
  EXPECT_NEAR(sum2 / 2000.0, 0.25, 0.025);
}

TEST(Measure, NoiseIsReproducibleAndSeeded) {
  const auto s = cfm::generate_scene(cfm::PhantomSpec::spikes(5, 1), 16, 16);
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 30, 256, 2, true);
  const auto a = cfm::measure(s, p, cfm::NoiseModel::poisson_gaussian(1e4, 2.0, 5));
  const auto b = cfm::measure(s, p, cfm::NoiseModel::poisson_gaussian(1e4, 2.0, 5));
  const auto c = cfm::measure(s, p, cfm::NoiseModel::poisson_gaussian(1e4, 2.0, 6));
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
}

TEST(Measure, CubeChannelsUseSeparateStreams) {
  cfm::SpectralCube cube(4, 4, 2);
  for (double& v : cube.values) v = 1.0;
  const std::vector<cfm::PatternSet> p{cfm::generate_patterns(cfm::Ensemble::bernoulli(), 8, 16, 1)};
  const auto recs = cfm::measure_cube(cube, p, cfm::NoiseModel::gaussian(1.0, 3));
  ASSERT_EQ(recs.size(), 2U);
  EXPECT_EQ(recs[1].channel, 1U);
  EXPECT_NE(recs[0].y, recs[1].y);
  const std::vector<cfm::PatternSet> three(3, p[0]);
  EXPECT_THROW(cfm::measure_cube(cube, three, cfm::NoiseModel::none()), cfm::ShapeError);
}

TEST(Measure, RejectsBadInput) {
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 4, 16, 0);
  EXPECT_THROW(cfm::measure(cfm::Scene(8, 8), p, cfm::NoiseModel::none()), cfm::ShapeError);
  cfm::Scene neg(4, 4);
  neg.values[3] = -1.0;
  EXPECT_THROW(cfm::measure(neg, p, cfm::NoiseModel::none()), cfm::DataError);
  cfm::Scene nan(4, 4);
  nan.values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(cfm::measure(nan, p, cfm::NoiseModel::none()), cfm::DataError);
  EXPECT_THROW(cfm::measure(cfm::Scene(4, 4), p, cfm::NoiseModel::gaussian(-1.0, 0)),
               cfm::ConfigError);
  EXPECT_THROW(cfm::measure(cfm::Scene(4, 4), p, cfm::NoiseModel::poisson(0.0, 0)),
               cfm::ConfigError);
}

TEST(Measure, NoiseKindTags) {
  for (auto k : {cfm::NoiseModel::Kind::noiseless, cfm::NoiseModel::Kind::gaussian,
                 cfm::NoiseModel::Kind::poisson, cfm::NoiseModel::Kind::poisson_plus_gaussian}) {
    EXPECT_EQ(cfm::parse_noise_kind(cfm::noise_kind_tag(k)), k);
  }
  EXPECT_THROW(cfm::parse_noise_kind("speckle"), cfm::ConfigError);
}

}  // namespace
