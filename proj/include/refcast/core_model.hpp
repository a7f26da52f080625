#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refcast/error.hpp"

namespace refcast {

enum class PriceBasis { Constant, Nominal };

inline std::string_view to_string(PriceBasis basis) {
  return basis == PriceBasis::Constant ? "constant" : "nominal";
}

inline std::optional<PriceBasis> parse_price_basis(std::string_view text) {
  if (text == "constant") return PriceBasis::Constant;
  if (text == "nominal") return PriceBasis::Nominal;
  return std::nullopt;
}

/// Non-negative currency amount tagged with its unit and price basis.
/// Constant-price amounts carry the base year they are expressed in.
class Money {
 public:
  Money(double amount, std::string currency, PriceBasis basis,
        std::optional<int> base_year = std::nullopt)
      : amount_(amount),
        currency_(std::move(currency)),
        basis_(basis),
        base_year_(base_year) {
    if (!std::isfinite(amount_) || amount_ < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "money amount must be finite and non-negative");
    }
    if (currency_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "money requires a currency code");
    }
    if (basis_ == PriceBasis::Constant && !base_year_) {
      throw Error(ErrorCode::InvalidArgument,
                  "constant-price money requires a base year");
    }
    if (basis_ == PriceBasis::Nominal) base_year_.reset();
  }

  double amount() const noexcept { return amount_; }
  const std::string& currency() const noexcept { return currency_; }
  PriceBasis basis() const noexcept { return basis_; }
  std::optional<int> base_year() const noexcept { return base_year_; }

  bool same_unit(const Money& other) const noexcept {
    return currency_ == other.currency_ && basis_ == other.basis_ &&
           base_year_ == other.base_year_;
  }

  /// Same unit, different amount.
  Money with_amount(double amount) const {
    return Money(amount, currency_, basis_, base_year_);
  }

  /// "GBP 357.00 [constant 2004]" style label of the unit.
  std::string unit_label() const {
    std::string label = currency_ + " [" + std::string(to_string(basis_));
    if (base_year_) label += " " + std::to_string(*base_year_);
    return label + "]";
  }

  friend Money operator+(const Money& a, const Money& b) {
    a.require_same_unit(b);
    return a.with_amount(a.amount_ + b.amount_);
  }

  friend Money operator-(const Money& a, const Money& b) {
    a.require_same_unit(b);
    return a.with_amount(a.amount_ - b.amount_);
  }

  friend Money operator*(const Money& a, double factor) {
    return a.with_amount(a.amount_ * factor);
  }

  friend bool operator==(const Money&, const Money&) = default;

  void require_same_unit(const Money& other) const {
    if (!same_unit(other)) {
      throw Error(ErrorCode::MixedBasis,
                  "cannot combine " + unit_label() + " with " +
                      other.unit_label());
    }
  }

 private:
  double amount_;
  std::string currency_;
  PriceBasis basis_;
  std::optional<int> base_year_;
};

enum class Stage { ProgrammeEntry, ConditionalApproval, FullApproval, Completed };

inline std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::ProgrammeEntry: return "programme-entry";
    case Stage::ConditionalApproval: return "conditional-approval";
    case Stage::FullApproval: return "full-approval";
    case Stage::Completed: return "completed";
  }
  return "completed";
}

inline std::optional<Stage> parse_stage(std::string_view text) {
  for (auto s : {Stage::ProgrammeEntry, Stage::ConditionalApproval,
                 Stage::FullApproval, Stage::Completed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

/// One historical or planned project. Records without actuals are valid:
/// they are forecast subjects rather than reference-class members.
struct ProjectRecord {
  std::string id;
  std::string project_type;
  Stage stage = Stage::Completed;
  int year = 0;
  Money forecast_cost{1.0, "USD", PriceBasis::Nominal};
  std::optional<Money> actual_cost;
  std::string benefit_unit;
  std::optional<double> forecast_benefit;
  std::optional<double> actual_benefit;
  std::optional<int> forecast_duration_days;
  std::optional<int> actual_duration_days;
  std::set<std::string> regime_tags;
  /// Columns outside the fixed schema, kept verbatim.
  std::map<std::string, std::string> attributes;

  friend bool operator==(const ProjectRecord&, const ProjectRecord&) = default;
};

enum class DeviationMetric { CostOverrun, BenefitShortfall, ScheduleSlip };

inline std::string_view to_string(DeviationMetric metric) {
  switch (metric) {
    case DeviationMetric::CostOverrun: return "cost_overrun";
    case DeviationMetric::BenefitShortfall: return "benefit_shortfall";
    case DeviationMetric::ScheduleSlip: return "schedule_slip";
  }
  return "cost_overrun";
}

inline std::optional<DeviationMetric> parse_metric(std::string_view text) {
  for (auto m : {DeviationMetric::CostOverrun, DeviationMetric::BenefitShortfall,
                 DeviationMetric::ScheduleSlip}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

/// (actual - forecast) / forecast. Positive means actual exceeded forecast.
inline double relative_deviation(double forecast, double actual) {
  if (forecast == 0.0) {
    throw Error(ErrorCode::ZeroForecast, "forecast is zero; deviation undefined");
  }
  return (actual - forecast) / forecast;
}

/// True when the record carries both values the metric compares.
inline bool has_metric_fields(const ProjectRecord& r, DeviationMetric metric) {
  switch (metric) {
    case DeviationMetric::CostOverrun: return r.actual_cost.has_value();
    case DeviationMetric::BenefitShortfall:
      return r.forecast_benefit.has_value() && r.actual_benefit.has_value();
    case DeviationMetric::ScheduleSlip:
      return r.forecast_duration_days.has_value() &&
             r.actual_duration_days.has_value();
  }
  return false;
}

/// Signed dimensionless deviation; positive is unfavourable for every metric
/// (over cost, under benefit, late).
inline double deviation(const ProjectRecord& r, DeviationMetric metric) {
  auto missing = [&](std::string_view field) {
    return Error(ErrorCode::MissingField,
                 "record '" + r.id + "' has no " + std::string(field));
  };
  switch (metric) {
    case DeviationMetric::CostOverrun: {
      if (!r.actual_cost) throw missing("actual_cost");
      r.forecast_cost.require_same_unit(*r.actual_cost);
      return relative_deviation(r.forecast_cost.amount(), r.actual_cost->amount());
    }
    case DeviationMetric::BenefitShortfall: {
      if (!r.forecast_benefit) throw missing("forecast_benefit");
      if (!r.actual_benefit) throw missing("actual_benefit");
      return -relative_deviation(*r.forecast_benefit, *r.actual_benefit);
    }
    case DeviationMetric::ScheduleSlip: {
      if (!r.forecast_duration_days) throw missing("forecast_duration_days");
      if (!r.actual_duration_days) throw missing("actual_duration_days");
      return relative_deviation(*r.forecast_duration_days,
                                *r.actual_duration_days);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown deviation metric");
}

}  // namespace refcast
