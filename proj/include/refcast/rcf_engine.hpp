#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refcast/core_model.hpp"
#include "refcast/error.hpp"
#include "refcast/refclass.hpp"
#include "refcast/stats.hpp"

namespace refcast {

enum class OutcomeVariable { TotalCost, DeviationFraction, DurationDays, Benefit };

inline std::string_view to_string(OutcomeVariable v) {
  switch (v) {
    case OutcomeVariable::TotalCost: return "total_cost";
    case OutcomeVariable::DeviationFraction: return "deviation_fraction";
    case OutcomeVariable::DurationDays: return "duration_days";
    case OutcomeVariable::Benefit: return "benefit";
  }
  return "total_cost";
}

inline std::optional<OutcomeVariable> parse_variable(std::string_view text) {
  for (auto v : {OutcomeVariable::TotalCost, OutcomeVariable::DeviationFraction,
                 OutcomeVariable::DurationDays, OutcomeVariable::Benefit}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

/// The inside-view prediction for the project at hand.
struct IntuitiveEstimate {
  double value;
  OutcomeVariable variable;

  IntuitiveEstimate(double v, OutcomeVariable var) : value(v), variable(var) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::InvalidArgument, "intuitive estimate must be finite");
    }
    if ((variable == OutcomeVariable::TotalCost ||
         variable == OutcomeVariable::DurationDays) &&
        value <= 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "cost and duration estimates must be positive");
    }
  }
};

enum class RhoSource { Historical, Subjective };

inline std::string_view to_string(RhoSource s) {
  return s == RhoSource::Historical ? "historical" : "subjective";
}

struct ReliabilityEstimate {
  double rho = 0.0;
  RhoSource source = RhoSource::Subjective;
  std::size_t n_pairs = 0;  // only meaningful for historical estimates
  double raw_correlation = 0.0;
  std::vector<std::string> warnings;

  /// A judgement-based reliability in [0, 1].
  static ReliabilityEstimate subjective(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "reliability must lie in [0, 1]");
    }
    ReliabilityEstimate r;
    r.rho = rho;
    r.raw_correlation = rho;
    r.source = RhoSource::Subjective;
    return r;
  }
};

inline constexpr std::size_t kMinReliabilityPairs = 3;

/// Pearson correlation between past predictions and outcomes. Negative
/// correlations are clamped to zero (full regression to the mean).
inline ReliabilityEstimate estimate_reliability(
    std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < kMinReliabilityPairs) {
    throw Error(ErrorCode::InsufficientPairs,
                "reliability needs at least 3 prediction/outcome pairs; supply a "
                "subjective rho instead");
  }
  std::vector<double> predictions, outcomes;
  predictions.reserve(pairs.size());
  outcomes.reserve(pairs.size());
  for (const auto& [p, o] : pairs) {
    predictions.push_back(p);
    outcomes.push_back(o);
  }
  ReliabilityEstimate r;
  r.source = RhoSource::Historical;
  r.n_pairs = pairs.size();
  r.raw_correlation = stats::pearson(predictions, outcomes);
  r.rho = r.raw_correlation;
  if (r.rho < 0.0) {
    r.rho = 0.0;
    r.warnings.push_back("negative correlation " + std::to_string(r.raw_correlation) +
                         " clamped to 0");
  }
  return r;
}

/// The outside-view anchor the intuitive estimate is regressed toward.
struct ClassMean {
  double value;
  OutcomeVariable variable;
  std::string class_id;
};

/// Mean of a class summary, which lives in deviation space.
inline ClassMean class_mean(const DistributionSummary& s, std::string class_id = {}) {
  return {s.mean, OutcomeVariable::DeviationFraction, std::move(class_id)};
}

struct RegressedForecast {
  double class_mean = 0.0;
  double intuitive = 0.0;
  double rho = 0.0;
  double corrected = 0.0;
  OutcomeVariable variable = OutcomeVariable::TotalCost;
  RhoSource rho_source = RhoSource::Subjective;
  std::string class_id;
};

/// corrected = mean + rho * (intuitive - mean). std::lerp keeps the result
/// inside [mean, intuitive] and exact at rho = 0 and rho = 1.
inline RegressedForecast regress(const ClassMean& mean, const IntuitiveEstimate& intuitive,
                                 const ReliabilityEstimate& reliability) {
  if (mean.variable != intuitive.variable) {
    throw Error(ErrorCode::VariableMismatch,
                "class mean is in " + std::string(to_string(mean.variable)) +
                    " but the intuitive estimate is in " +
                    std::string(to_string(intuitive.variable)));
  }
  if (!(reliability.rho >= 0.0 && reliability.rho <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "reliability must lie in [0, 1]");
  }
  RegressedForecast f;
  f.class_mean = mean.value;
  f.intuitive = intuitive.value;
  f.rho = reliability.rho;
  f.corrected = std::lerp(mean.value, intuitive.value, reliability.rho);
  f.variable = mean.variable;
  f.rho_source = reliability.source;
  f.class_id = mean.class_id;
  return f;
}

/// Budget reserve of half the optimism-bias uplift, spendable without
/// re-approval.
struct RiskAllowance {
  Money uplift_amount;
  Money allowance_amount;
};

inline constexpr double kAllowanceShare = 0.5;

inline RiskAllowance risk_allowance(const Money& uplift_amount) {
  return {uplift_amount, uplift_amount * kAllowanceShare};
}

struct UpliftedBudget {
  Money base;
  Money budget;
  Uplift uplift;
  RiskAllowance allowance;
};

/// base * (1 + uplift) at the requested acceptable risk. A negative uplift
/// (left unclamped) lowers the budget and yields a zero allowance.
inline UpliftedBudget forecast_with_uplift(const Money& base, const ReferenceClass& rc,
                                           const UpliftQuery& query,
                                           bool clamp_nonnegative = false) {
  if (!(base.amount() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "base estimate must be positive");
  }
  if (rc.metric() != DeviationMetric::CostOverrun) {
    throw Error(ErrorCode::MetricMismatch,
                "uplifted budgets need a cost_overrun reference class");
  }
  auto u = uplift(rc, query, clamp_nonnegative);
  const double uplift_amount = base.amount() * u.fraction;
  Money budget = base.with_amount(base.amount() + uplift_amount);
  auto allowance = risk_allowance(base.with_amount(std::max(0.0, uplift_amount)));
  return {base, std::move(budget), std::move(u), std::move(allowance)};
}

}  // namespace refcast
