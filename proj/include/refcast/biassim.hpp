#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "refcast/json.hpp"

#include "refcast/error.hpp"
#include "refcast/ingest.hpp"
#include "refcast/rcf_engine.hpp"
#include "refcast/stats.hpp"

namespace refcast::sim {

/// SplitMix64: a 64-bit state generator, cheap to seed per substream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed of the substream owned by one project in one trial.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial,
                                       std::uint64_t project) {
  std::uint64_t s = SplitMix64::mix(seed + 0x9E3779B97F4A7C15ULL);
  s = SplitMix64::mix(s ^ (trial * 0xD1B54A32D192ED03ULL + 1));
  return SplitMix64::mix(s ^ (project * 0xA0761D6478BD642FULL + 2));
}

/// Forecasting bias mechanics. The neutral setting (multiplier 1, anchor
/// passthrough, no shave) reproduces the honest estimate.
struct BiasParams {
  /// Delusional optimism: honest estimates are scaled by this, in (0, 1].
  double optimism_multiplier = 1.0;
  /// Adjustment away from the anchor, in [0, 1): forecast = anchor + a (target - anchor).
  double anchor_weight = 0.0;
  /// Skip anchoring entirely (the a -> 1 limit).
  bool anchor_passthrough = true;
  /// The anchor is the first, low estimate: target * exp(-spread * |z|).
  double anchor_spread = 0.0;
  /// Competitive lowballing, in [0, 1).
  double strategic_shave = 0.0;
  /// How strongly competition drives the shave, in [0, 1].
  double competition_intensity = 1.0;

  void validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(optimism_multiplier > 0.0 && optimism_multiplier <= 1.0)) {
      fail("optimism_multiplier must lie in (0, 1]");
    }
    if (!(anchor_weight >= 0.0 && anchor_weight < 1.0)) fail("anchor_weight must lie in [0, 1)");
    if (!(anchor_spread >= 0.0) || !std::isfinite(anchor_spread)) {
      fail("anchor_spread must be non-negative");
    }
    if (!(strategic_shave >= 0.0 && strategic_shave < 1.0)) {
      fail("strategic_shave must lie in [0, 1)");
    }
    if (!(competition_intensity >= 0.0 && competition_intensity <= 1.0)) {
      fail("competition_intensity must lie in [0, 1]");
    }
  }

  friend bool operator==(const BiasParams&, const BiasParams&) = default;
};

struct SimConfig {
  std::size_t n_projects = 198;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  /// Lognormal true cost: log-mean and log-stdev.
  double true_cost_log_mean = 0.0;
  double true_cost_log_stdev = 0.5;
  /// Log-stdev of the multiplicative estimation noise (median 1).
  double noise_stdev = 0.0;
  BiasParams bias;
  std::vector<double> risk_levels = {0.5, 0.2, 0.1};
  /// Worker threads; 0 means hardware concurrency. Never affects results.
  unsigned threads = 0;

  void validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (n_projects < 2) fail("n_projects must be at least 2 to split reference and holdout");
    if (trials < 1) fail("trials must be at least 1");
    if (!std::isfinite(true_cost_log_mean)) fail("true_cost_log_mean must be finite");
    if (!(true_cost_log_stdev >= 0.0) || !std::isfinite(true_cost_log_stdev)) {
      fail("true_cost_log_stdev must be non-negative");
    }
    if (!(noise_stdev >= 0.0) || !std::isfinite(noise_stdev)) fail("noise_stdev must be non-negative");
    for (double p : risk_levels) {
      if (!(p > 0.0 && p < 1.0)) fail("risk levels must lie strictly between 0 and 1");
    }
    bias.validate();
  }
};

struct ProjectDraw {
  double true_cost;
  double honest_estimate;
  double forecast;

  double overrun() const { return (true_cost - forecast) / forecast; }
};

/// One synthetic project. Always consumes three normals so the draws do not
/// depend on the bias parameters.
inline ProjectDraw draw_project(const SimConfig& cfg, std::uint64_t trial,
                                std::uint64_t project) {
  SplitMix64 rng(substream_seed(cfg.seed, trial, project));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z_cost = normal(rng);
  const double z_noise = normal(rng);
  const double z_anchor = normal(rng);

  const auto& b = cfg.bias;
  ProjectDraw d{};
  d.true_cost = std::exp(cfg.true_cost_log_mean + cfg.true_cost_log_stdev * z_cost);
  d.honest_estimate = d.true_cost * std::exp(cfg.noise_stdev * z_noise);
  const double optimistic = d.honest_estimate * b.optimism_multiplier;
  double adjusted = optimistic;
  if (!b.anchor_passthrough) {
    const double anchor = optimistic * std::exp(-b.anchor_spread * std::fabs(z_anchor));
    adjusted = anchor + b.anchor_weight * (optimistic - anchor);
  }
  d.forecast = adjusted * (1.0 - b.strategic_shave * b.competition_intensity);
  return d;
}

/// Reference projects are [0, reference_end); holdout is [reference_end, n).
struct TrialSplit {
  std::size_t reference_end;
  std::size_t n;

  std::size_t reference_size() const { return reference_end; }
  std::size_t holdout_size() const { return n - reference_end; }
};

inline TrialSplit split_trial(std::size_t n_projects) {
  TrialSplit s{n_projects / 2, n_projects};
  if (s.reference_size() == 0 || s.holdout_size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "trial too small to split");
  }
  return s;
}

struct TrialOutcome {
  std::vector<double> exceedance;             // debiased, one per risk level
  std::vector<double> undebiased_exceedance;  // raw forecast as budget
  double overrun_sum = 0.0;
  double regression_error = 0.0;
  double raw_error = 0.0;
  std::vector<double> overruns;
};

inline TrialOutcome run_trial(const SimConfig& cfg, std::uint64_t trial) {
  const auto split = split_trial(cfg.n_projects);
  std::vector<ProjectDraw> draws;
  draws.reserve(cfg.n_projects);
  for (std::size_t i = 0; i < cfg.n_projects; ++i) draws.push_back(draw_project(cfg, trial, i));

  TrialOutcome out;
  out.overruns.reserve(cfg.n_projects);
  for (const auto& d : draws) {
    out.overruns.push_back(d.overrun());
    out.overrun_sum += d.overrun();
  }

  // Outside view from the reference half only.
  std::vector<double> reference_overruns(out.overruns.begin(),
                                         out.overruns.begin() + split.reference_end);
  std::sort(reference_overruns.begin(), reference_overruns.end());
  std::vector<std::pair<double, double>> history;
  double cost_sum = 0.0;
  for (std::size_t i = 0; i < split.reference_end; ++i) {
    history.emplace_back(draws[i].forecast, draws[i].true_cost);
    cost_sum += draws[i].true_cost;
  }
  const ClassMean class_cost{cost_sum / static_cast<double>(split.reference_size()),
                             OutcomeVariable::TotalCost, "reference-half"};
  ReliabilityEstimate reliability = ReliabilityEstimate::subjective(0.0);
  try {
    reliability = estimate_reliability(history);
  } catch (const Error&) {
    // Too few pairs or constant costs: fall back to the class mean.
  }

  const double holdout = static_cast<double>(split.holdout_size());
  for (double p : cfg.risk_levels) {
    const double u = stats::quantile_nearest_rank(reference_overruns, 1.0 - p);
    std::size_t exceeded = 0, raw_exceeded = 0;
    for (std::size_t i = split.reference_end; i < split.n; ++i) {
      const auto& d = draws[i];
      if (d.true_cost > d.forecast * (1.0 + u)) ++exceeded;
      if (d.true_cost > d.forecast) ++raw_exceeded;
    }
    out.exceedance.push_back(static_cast<double>(exceeded) / holdout);
    out.undebiased_exceedance.push_back(static_cast<double>(raw_exceeded) / holdout);
  }

  for (std::size_t i = split.reference_end; i < split.n; ++i) {
    const auto& d = draws[i];
    const auto r = regress(class_cost, IntuitiveEstimate(d.forecast, OutcomeVariable::TotalCost),
                           reliability);
    out.regression_error += std::fabs(r.corrected - d.true_cost);
    out.raw_error += std::fabs(d.forecast - d.true_cost);
  }
  out.regression_error /= holdout;
  out.raw_error /= holdout;
  return out;
}

struct CalibrationPoint {
  double p = 0.0;
  double exceedance = 0.0;             // uplifted budgets exceeded
  double undebiased_exceedance = 0.0;  // raw forecasts exceeded

  friend bool operator==(const CalibrationPoint&, const CalibrationPoint&) = default;
};

struct SimResult {
  std::size_t trials = 0;
  std::size_t reference_size = 0;
  std::size_t holdout_size = 0;
  /// Overruns of every project in trial 0.
  std::vector<double> realized_overruns;
  double mean_realized_overrun = 0.0;
  std::vector<CalibrationPoint> uplift_calibration;
  /// Mean absolute error of regressed vs. true cost on holdout projects.
  double regression_error = 0.0;
  /// Same for the unregressed forecast.
  double raw_forecast_error = 0.0;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Deterministic in the seed: trials run on any number of threads, each
/// project draws from its own substream, and aggregation is in trial order.
inline SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  std::vector<TrialOutcome> outcomes(cfg.trials);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.trials));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.trials; t += workers) outcomes[t] = run_trial(cfg, t);
      });
    }
  }

  const auto split = split_trial(cfg.n_projects);
  SimResult r;
  r.trials = cfg.trials;
  r.reference_size = split.reference_size();
  r.holdout_size = split.holdout_size();
  r.realized_overruns = outcomes.front().overruns;
  double overrun_total = 0.0;
  std::vector<CalibrationPoint> cal(cfg.risk_levels.size());
  for (std::size_t k = 0; k < cal.size(); ++k) cal[k].p = cfg.risk_levels[k];
  for (const auto& o : outcomes) {
    overrun_total += o.overrun_sum;
    r.regression_error += o.regression_error;
    r.raw_forecast_error += o.raw_error;
    for (std::size_t k = 0; k < cal.size(); ++k) {
      cal[k].exceedance += o.exceedance[k];
      cal[k].undebiased_exceedance += o.undebiased_exceedance[k];
    }
  }
  const double trials = static_cast<double>(cfg.trials);
  for (auto& c : cal) {
    c.exceedance /= trials;
    c.undebiased_exceedance /= trials;
  }
  r.uplift_calibration = std::move(cal);
  r.mean_realized_overrun = overrun_total / (trials * static_cast<double>(cfg.n_projects));
  r.regression_error /= trials;
  r.raw_forecast_error /= trials;
  return r;
}

struct CalibrationRow {
  double p = 0.0;
  double target = 0.0;
  double empirical = 0.0;
  double tolerance = 0.0;
  bool within_tolerance = false;
};

/// Three binomial standard deviations over the number of trials.
inline double calibration_tolerance(double p, std::size_t trials) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

/// Target exceedance is the acceptable risk p itself. With `debiased` false
/// the raw forecasts are used as budgets.
inline std::vector<CalibrationRow> calibration_report(const SimResult& result,
                                                      bool debiased = true) {
  std::vector<CalibrationRow> rows;
  for (const auto& c : result.uplift_calibration) {
    CalibrationRow row;
    row.p = c.p;
    row.target = c.p;
    row.empirical = debiased ? c.exceedance : c.undebiased_exceedance;
    row.tolerance = calibration_tolerance(c.p, result.trials);
    row.within_tolerance = std::fabs(row.empirical - row.target) <= row.tolerance;
    rows.push_back(row);
  }
  return rows;
}

inline std::string calibration_csv(const SimResult& result) {
  const auto debiased = calibration_report(result, true);
  const auto raw = calibration_report(result, false);
  std::string out = "p,target,empirical,tolerance,within_tolerance,undebiased_empirical,"
                    "undebiased_within_tolerance\n";
  for (std::size_t i = 0; i < debiased.size(); ++i) {
    const auto& d = debiased[i];
    out += refcast::detail::format_number(d.p) + "," +
           refcast::detail::format_number(d.target) + "," +
           refcast::detail::format_number(d.empirical) + "," +
           refcast::detail::format_number(d.tolerance) + "," +
           (d.within_tolerance ? "true" : "false") + "," +
           refcast::detail::format_number(raw[i].empirical) + "," +
           (raw[i].within_tolerance ? "true" : "false") + "\n";
  }
  return out;
}

inline void from_json(const Json& j, BiasParams& b) {
  b = BiasParams{};
  b.optimism_multiplier = j.value("optimism_multiplier", b.optimism_multiplier);
  b.anchor_weight = j.value("anchor_weight", b.anchor_weight);
  b.anchor_passthrough = j.value("anchor_passthrough", b.anchor_passthrough);
  b.anchor_spread = j.value("anchor_spread", b.anchor_spread);
  b.strategic_shave = j.value("strategic_shave", b.strategic_shave);
  b.competition_intensity = j.value("competition_intensity", b.competition_intensity);
  b.validate();
}

inline void to_json(Json& j, const BiasParams& b) {
  j = {{"optimism_multiplier", b.optimism_multiplier},
       {"anchor_weight", b.anchor_weight},
       {"anchor_passthrough", b.anchor_passthrough},
       {"anchor_spread", b.anchor_spread},
       {"strategic_shave", b.strategic_shave},
       {"competition_intensity", b.competition_intensity}};
}

inline void from_json(const Json& j, SimConfig& c) {
  c = SimConfig{};
  c.n_projects = j.value("n_projects", c.n_projects);
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  if (j.contains("true_cost_distribution")) {
    const auto& d = j.at("true_cost_distribution");
    c.true_cost_log_mean = d.value("log_mean", c.true_cost_log_mean);
    c.true_cost_log_stdev = d.value("log_stdev", c.true_cost_log_stdev);
  }
  c.noise_stdev = j.value("noise_stdev", c.noise_stdev);
  if (j.contains("bias")) c.bias = j.at("bias").get<BiasParams>();
  if (j.contains("risk_levels")) c.risk_levels = j.at("risk_levels").get<std::vector<double>>();
  c.threads = j.value("threads", c.threads);
  c.validate();
}

inline void to_json(Json& j, const SimConfig& c) {
  j = {{"n_projects", c.n_projects},
       {"trials", c.trials},
       {"seed", c.seed},
       {"true_cost_distribution",
        {{"log_mean", c.true_cost_log_mean}, {"log_stdev", c.true_cost_log_stdev}}},
       {"noise_stdev", c.noise_stdev},
       {"bias", c.bias},
       {"risk_levels", c.risk_levels}};
}

inline Json to_json_value(const SimResult& r) {
  auto cal = Json::array();
  for (const auto& c : r.uplift_calibration) {
    cal.push_back({{"p", c.p},
                   {"exceedance", c.exceedance},
                   {"undebiased_exceedance", c.undebiased_exceedance}});
  }
  return {{"trials", r.trials},
          {"reference_size", r.reference_size},
          {"holdout_size", r.holdout_size},
          {"mean_realized_overrun", r.mean_realized_overrun},
          {"regression_error", r.regression_error},
          {"raw_forecast_error", r.raw_forecast_error},
          {"uplift_calibration", cal},
          {"realized_overruns", r.realized_overruns}};
}

}  // namespace refcast::sim
