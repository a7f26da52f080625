#include <gtest/gtest.h>

#include <cmath>

#include "refcast/biassim.hpp"
#include "refcast/csv.hpp"
#include "refcast/ingest.hpp"
#include "support.hpp"

using namespace refcast;
using namespace refcast::sim;
using testing_support::data_path;

namespace {

SimConfig load_config(const std::string& name) {
  return Json::parse(detail::read_file(data_path("sim/" + name))).get<SimConfig>();
}

SimConfig small_config() {
  SimConfig c;
  c.n_projects = 60;
  c.trials = 200;
  c.seed = 99;
  c.true_cost_log_mean = std::log(50.0);
  c.true_cost_log_stdev = 0.7;
  c.noise_stdev = 0.3;
  c.bias.optimism_multiplier = 0.8;
  c.bias.anchor_passthrough = false;
  c.bias.anchor_weight = 0.4;
  c.bias.anchor_spread = 0.2;
  c.bias.strategic_shave = 0.1;
  return c;
}

void expect_calibrated(const SimResult& r) {
  for (const auto& row : calibration_report(r, true)) {
    EXPECT_TRUE(row.within_tolerance)
        << "p=" << row.p << " empirical=" << row.empirical << " tolerance=" << row.tolerance;
  }
}

}  // namespace

TEST(Simulate, NoiseFreeBiasFreeHasZeroError) {
  auto cfg = load_config("noise_free.json");
  auto r = simulate(cfg);
  for (double o : r.realized_overruns) EXPECT_EQ(o, 0.0);
  EXPECT_EQ(r.mean_realized_overrun, 0.0);
  EXPECT_EQ(r.regression_error, 0.0);
  EXPECT_EQ(r.raw_forecast_error, 0.0);
  for (const auto& c : r.uplift_calibration) {
    EXPECT_EQ(c.exceedance, 0.0);
    EXPECT_EQ(c.undebiased_exceedance, 0.0);
  }
}

TEST(Simulate, HalvedForecastsOverrunByOne) {
  SimConfig cfg;
  cfg.trials = 20;
  cfg.bias.optimism_multiplier = 0.5;
  auto r = simulate(cfg);
  for (double o : r.realized_overruns) EXPECT_EQ(o, 1.0);
  EXPECT_EQ(r.mean_realized_overrun, 1.0);
  // Every reference overrun is 1, so the P50 uplift is 1 and the doubled
  // forecast lands exactly on the true cost.
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    for (std::size_t i = 0; i < cfg.n_projects; ++i) {
      const auto d = draw_project(cfg, t, i);
      EXPECT_EQ(d.forecast * (1.0 + 1.0), d.true_cost);
    }
  }
  EXPECT_EQ(r.uplift_calibration[0].exceedance, 0.0);
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
  auto cfg = small_config();
  cfg.threads = 1;
  const auto serial = simulate(cfg);
  for (unsigned threads : {2u, 3u, 7u, 16u}) {
    cfg.threads = threads;
    EXPECT_EQ(simulate(cfg), serial) << threads << " threads";
  }
  cfg.threads = 0;
  EXPECT_EQ(simulate(cfg), serial);
}

TEST(Simulate, SeedChangesResult) {
  auto a = small_config();
  auto b = a;
  b.seed = a.seed + 1;
  EXPECT_NE(simulate(a).realized_overruns, simulate(b).realized_overruns);
}

TEST(Simulate, DrawsIndependentOfBiasParameters) {
  auto honest = small_config();
  honest.bias = BiasParams{};
  auto biased = small_config();
  for (std::uint64_t t = 0; t < 5; ++t) {
    for (std::size_t i = 0; i < honest.n_projects; ++i) {
      const auto a = draw_project(honest, t, i);
      const auto b = draw_project(biased, t, i);
      EXPECT_EQ(a.true_cost, b.true_cost);
      EXPECT_EQ(a.honest_estimate, b.honest_estimate);
    }
  }
}

TEST(Simulate, MonotoneHarm) {
  auto base = small_config();
  base.trials = 50;
  double prev = simulate(base).mean_realized_overrun;
  for (double s : {0.15, 0.3, 0.5, 0.8}) {
    auto cfg = base;
    cfg.bias.strategic_shave = s;
    const double m = simulate(cfg).mean_realized_overrun;
    EXPECT_GE(m, prev) << "shave " << s;
    prev = m;
  }
  prev = simulate(base).mean_realized_overrun;
  for (double delta : {0.7, 0.5, 0.3}) {
    auto cfg = base;
    cfg.bias.optimism_multiplier = delta;
    const double m = simulate(cfg).mean_realized_overrun;
    EXPECT_GE(m, prev) << "multiplier " << delta;
    prev = m;
  }
}

TEST(Simulate, ReferenceAndHoldoutDisjoint) {
  for (std::size_t n = 2; n <= 500; ++n) {
    const auto s = split_trial(n);
    EXPECT_GE(s.reference_size(), 1u);
    EXPECT_GE(s.holdout_size(), 1u);
    EXPECT_EQ(s.reference_size() + s.holdout_size(), n);
    EXPECT_EQ(s.reference_end, s.reference_size());
  }
  EXPECT_THROW(split_trial(1), Error);
  SimConfig odd;
  odd.n_projects = 3;
  odd.trials = 5;
  auto r = simulate(odd);
  EXPECT_EQ(r.reference_size, 1u);
  EXPECT_EQ(r.holdout_size, 2u);
}

TEST(Simulate, ExceedanceRatesAreFractions) {
  auto r = simulate(small_config());
  for (const auto& c : r.uplift_calibration) {
    EXPECT_GE(c.exceedance, 0.0);
    EXPECT_LE(c.exceedance, 1.0);
    EXPECT_GE(c.undebiased_exceedance, 0.0);
    EXPECT_LE(c.undebiased_exceedance, 1.0);
  }
}

TEST(Simulate, ConfigValidation) {
  SimConfig c;
  c.n_projects = 1;
  EXPECT_THROW(simulate(c), Error);
  c = SimConfig{};
  c.trials = 0;
  EXPECT_THROW(simulate(c), Error);
  c = SimConfig{};
  c.bias.optimism_multiplier = 0.0;
  EXPECT_THROW(simulate(c), Error);
  c = SimConfig{};
  c.bias.anchor_weight = 1.0;
  EXPECT_THROW(simulate(c), Error);
  c = SimConfig{};
  c.bias.strategic_shave = 1.0;
  EXPECT_THROW(simulate(c), Error);
  c = SimConfig{};
  c.risk_levels = {0.0};
  EXPECT_THROW(simulate(c), Error);
}

TEST(Simulate, ConfigJsonRoundTrip) {
  auto cfg = load_config("rail_like.json");
  Json j = cfg;
  auto back = j.get<SimConfig>();
  EXPECT_EQ(Json(back).dump(), j.dump());
  EXPECT_EQ(back.bias, cfg.bias);
}

TEST(Calibration, BiasFreeWithinTolerance) {
  auto r = simulate(load_config("bias_free.json"));
  ASSERT_GE(r.trials, 10000u);
  expect_calibrated(r);
}

TEST(Calibration, DftAnchoredWithinTolerance) {
  auto r = simulate(load_config("dft_road.json"));
  ASSERT_GE(r.trials, 10000u);
  expect_calibrated(r);
  const auto rows = calibration_report(r, true);
  EXPECT_NEAR(rows[1].empirical, 0.2, 0.03);
}

TEST(Calibration, HeavyDeceptionBiasAndRecovery) {
  auto r = simulate(load_config("heavy_deception.json"));
  ASSERT_GE(r.trials, 10000u);
  const auto raw = calibration_report(r, false);
  EXPECT_GT(raw[0].empirical, 0.65);
  EXPECT_FALSE(raw[0].within_tolerance);
  expect_calibrated(r);
  EXPECT_LT(r.regression_error, r.raw_forecast_error);
}

TEST(Calibration, RailLikeMeanOverrun) {
  auto r = simulate(load_config("rail_like.json"));
  EXPECT_NEAR(r.mean_realized_overrun, 0.45, 0.02);
  expect_calibrated(r);
}

TEST(Calibration, ToleranceIsThreeBinomialSigmas) {
  EXPECT_NEAR(calibration_tolerance(0.2, 10000), 0.012, 1e-15);
  EXPECT_NEAR(calibration_tolerance(0.5, 10000), 0.015, 1e-15);
  EXPECT_LE(calibration_tolerance(0.2, 10000), 0.03);
}

TEST(Calibration, CsvHasOneRowPerRiskLevel) {
  auto cfg = small_config();
  auto csv_text = calibration_csv(simulate(cfg));
  auto doc = csv::parse(csv_text);
  ASSERT_EQ(doc.rows.size(), 1 + cfg.risk_levels.size());
  EXPECT_EQ(doc.rows[0][0], "p");
  EXPECT_EQ(doc.rows[1][0], "0.5");
}
