#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cfm/analysis.hpp"
#include "cfm/error.hpp"

namespace {

cfm::SweepSpec small_spec() {
  cfm::SweepSpec s;
  s.phantom = cfm::PhantomSpec::spikes(3, 0);
  s.width = 8;
  s.height = 8;
  s.ratios = {2.0, 4.0};
  s.noise_ladder = {cfm::NoiseModel::none(), cfm::NoiseModel::gaussian(0.01, 3)};
  s.trials = 3;
  s.seed = 12;
  s.record_timing = false;
  return s;
}

TEST(Sweep, PatternBudget) {
  EXPECT_EQ(cfm::pattern_budget(4096, 8.0, true), (std::pair<std::size_t, std::size_t>{512, 256}));
  EXPECT_EQ(cfm::pattern_budget(4096, 8.0, false), (std::pair<std::size_t, std::size_t>{512, 512}));
  EXPECT_EQ(cfm::pattern_budget(100, 3.0, true), (std::pair<std::size_t, std::size_t>{32, 16}));
  EXPECT_EQ(cfm::pattern_budget(100, 3.0, false), (std::pair<std::size_t, std::size_t>{33, 33}));
  EXPECT_EQ(cfm::pattern_budget(64, 64.0, true), (std::pair<std::size_t, std::size_t>{2, 1}));
}

TEST(Sweep, RasterAtRatioOneAlwaysSucceeds) {
  cfm::SweepSpec s;
  s.phantom = cfm::PhantomSpec::blobs(3, 1, 1.5, 0.5, 1, 0);
  s.width = 16;
  s.height = 16;
  s.ensemble = cfm::Ensemble::raster();
  s.differential = false;
  s.ratios = {1.0};
  s.trials = 5;
  s.solver.lambda = 0.0;
  s.solver.tol = 1e-12;
  const auto rep = cfm::run_sweep(s);
  ASSERT_EQ(rep.rows.size(), 5U);
  for (const auto& r : rep.rows) {
    EXPECT_TRUE(r.success) << r.error;
    EXPECT_LT(r.rel_error, 1e-8);
    EXPECT_EQ(r.physical_m, 256U);
  }
  ASSERT_EQ(rep.cells.size(), 1U);
  EXPECT_EQ(rep.cells[0].success_fraction, 1.0);
}

TEST(Sweep, RowLayoutIsCanonical) {
  const auto s = small_spec();
  const auto rep = cfm::run_sweep(s);
  ASSERT_EQ(rep.rows.size(), 2U * 2U * 3U);
  ASSERT_EQ(rep.cells.size(), 4U);
  std::size_t k = 0;
  for (double ratio : s.ratios) {
    for (const auto& noise : s.noise_ladder) {
      for (std::size_t t = 0; t < s.trials; ++t, ++k) {
        EXPECT_EQ(rep.rows[k].ratio, ratio);
        EXPECT_EQ(rep.rows[k].noise_kind, noise.kind);
        EXPECT_EQ(rep.rows[k].noise_param, noise.parameter());
        EXPECT_EQ(rep.rows[k].trial, t);
        EXPECT_EQ(rep.rows[k].wall_ms, 0.0);
      }
    }
  }
  EXPECT_EQ(rep.rows[0].physical_m, 32U);
  EXPECT_EQ(rep.rows[0].logical_patterns, 16U);
}

TEST(Sweep, ReportDoesNotDependOnThreadCount) {
  auto s = small_spec();
  const auto one = cfm::sweep_csv(cfm::run_sweep(s));
  s.threads = 3;
  EXPECT_EQ(cfm::sweep_csv(cfm::run_sweep(s)), one);
  s.threads = 16;
  EXPECT_EQ(cfm::sweep_csv(cfm::run_sweep(s)), one);
}

TEST(Sweep, SingleTrialMatchesFullRun) {
  const auto s = small_spec();
  const auto rep = cfm::run_sweep(s);
  const auto row = cfm::run_trial(s, 1, 1, 2);
  const auto& ref = rep.rows[(1 * 2 + 1) * 3 + 2];
  EXPECT_EQ(row.rel_error, ref.rel_error);
  EXPECT_EQ(row.iterations, ref.iterations);
}

TEST(Sweep, CsvRoundTrip) {
  const auto rep = cfm::run_sweep(small_spec());
  const std::string text = cfm::sweep_csv(rep);
  EXPECT_EQ(text.substr(0, text.find('\n')), cfm::kSweepCsvHeader);
  std::istringstream in(text);
  const auto rows = cfm::parse_sweep_csv(in);
  ASSERT_EQ(rows.size(), rep.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].rel_error, rep.rows[i].rel_error);
    EXPECT_EQ(rows[i].psnr_db, rep.rows[i].psnr_db);
    EXPECT_EQ(rows[i].noise_kind, rep.rows[i].noise_kind);
    EXPECT_EQ(rows[i].success, rep.rows[i].success);
    EXPECT_EQ(rows[i].physical_m, rep.rows[i].physical_m);
  }
  std::istringstream bad("ratio,foo\n");
  EXPECT_THROW(cfm::parse_sweep_csv(bad), cfm::FormatError);
  std::istringstream short_row(std::string(cfm::kSweepCsvHeader) + "\n1,noiseless,0\n");
  EXPECT_THROW(cfm::parse_sweep_csv(short_row), cfm::FormatError);
}

TEST(Sweep, FailedTrialIsRecorded) {
  auto s = small_spec();
  s.ratios = {2.0};
  s.noise_ladder = {cfm::NoiseModel::none()};
  s.trials = 2;
  // A 20-pixel bead cannot fit in an 8 x 8 frame, so every trial throws.
  s.phantom = cfm::PhantomSpec::beads(1, 20.0, 1, 1, 0);
  const auto rep = cfm::run_sweep(s);
  ASSERT_EQ(rep.rows.size(), 2U);
  for (const auto& r : rep.rows) {
    EXPECT_FALSE(r.success);
    EXPECT_FALSE(r.error.empty());
    EXPECT_TRUE(std::isnan(r.rel_error));
  }
  EXPECT_EQ(rep.cells[0].success_fraction, 0.0);
}

TEST(Sweep, SpecFromJson) {
  const auto s = cfm::sweep_spec_from_json(R"({
    "phantom": {"kind": "beads", "count": 4, "radius": 1.5, "amplitude": [0.5, 2]},
    "width": 32, "height": 16,
    "ensemble": {"kind": "hadamard", "permute": true},
    "differential": false, "dc": "mean_removal",
    "ratios": [4, 8],
    "noise": [{"kind": "poisson", "budget": 1000, "seed": 3}, {"kind": "gaussian", "sigma": 0.1}],
    "trials": 7,
    "solver": {"kind": "l1", "lambda": 0.01, "basis": "haar", "levels": 2, "acceleration": "ista"},
    "seed": 99, "threads": 4, "timing": false
  })");
  EXPECT_EQ(s.phantom.kind, cfm::PhantomSpec::Kind::beads);
  EXPECT_EQ(s.phantom.count, 4U);
  EXPECT_EQ(s.phantom.amplitude_max, 2.0);
  EXPECT_EQ(s.width, 32U);
  EXPECT_EQ(s.ensemble.kind, cfm::Ensemble::Kind::hadamard_rows);
  EXPECT_TRUE(s.ensemble.permute);
  EXPECT_FALSE(s.differential);
  EXPECT_EQ(s.solver.dc, cfm::DcStrategy::mean_removal);
  EXPECT_EQ(s.ratios, (std::vector<double>{4, 8}));
  ASSERT_EQ(s.noise_ladder.size(), 2U);
  EXPECT_EQ(s.noise_ladder[0], cfm::NoiseModel::poisson(1000, 3));
  EXPECT_EQ(s.trials, 7U);
  EXPECT_EQ(s.solver.lambda, 0.01);
  EXPECT_EQ(s.solver.acceleration, cfm::Acceleration::ista);
  ASSERT_TRUE(s.solver.basis.has_value());
  EXPECT_EQ(s.seed, 99U);
  EXPECT_EQ(s.threads, 4U);
  EXPECT_FALSE(s.record_timing);
}

TEST(Sweep, SpecErrors) {
  EXPECT_THROW(cfm::sweep_spec_from_json("{"), cfm::FormatError);
  EXPECT_THROW(cfm::sweep_spec_from_json(R"({"ratio": [2]})"), cfm::ConfigError);
  EXPECT_THROW(cfm::sweep_spec_from_json(R"({"ratios": [0.5]})"), cfm::ConfigError);
  EXPECT_THROW(cfm::sweep_spec_from_json(R"({"trials": 0})"), cfm::ConfigError);
  EXPECT_THROW(cfm::sweep_spec_from_json(R"({"ensemble": {"kind": "gauss"}})"), cfm::ConfigError);
  EXPECT_THROW(cfm::sweep_spec_from_json(R"({"width": "wide"})"), cfm::ConfigError);
}

TEST(Sweep, SuccessMonotoneInMeasurements) {
  cfm::SweepSpec s;
  s.phantom = cfm::PhantomSpec::spikes(16, 0);
  s.width = 64;
  s.height = 64;
  s.ratios = {8, 16, 32, 64};
  s.trials = 20;
  s.seed = 5;
  s.threads = 4;
  s.record_timing = false;
  const auto rep = cfm::run_sweep(s);
  ASSERT_EQ(rep.cells.size(), 4U);
  for (std::size_t k = 1; k < rep.cells.size(); ++k) {
    EXPECT_LE(rep.cells[k].success_fraction, rep.cells[k - 1].success_fraction)
        << "ratio " << rep.cells[k].ratio;
  }
  EXPECT_EQ(rep.cells[0].success_fraction, 1.0);
}

}  // namespace
