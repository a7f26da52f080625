#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "refcast/json.hpp"

#include "refcast/core_model.hpp"
#include "refcast/error.hpp"
#include "refcast/ingest.hpp"
#include "refcast/ks_test.hpp"
#include "refcast/stats.hpp"

namespace refcast {

/// Classes smaller than this are rejected outright.
inline constexpr std::size_t kMinClassSize = 5;
/// Classes smaller than this are accepted with a warning.
inline constexpr std::size_t kAdvisedClassSize = 20;

struct ClassFilter {
  std::string name;
  std::set<std::string> project_types;
  std::set<Stage> stages;
  std::set<std::string> regime_tags_required;
  std::optional<std::pair<int, int>> year_range;
  DeviationMetric metric = DeviationMetric::CostOverrun;
  bool match_all = false;

  bool has_selector() const noexcept {
    return match_all || !project_types.empty() || !stages.empty() ||
           !regime_tags_required.empty() || year_range.has_value();
  }

  void validate() const {
    if (!has_selector()) {
      throw Error(ErrorCode::InvalidArgument,
                  "class filter selects nothing; set a selector or \"all\": true");
    }
    if (year_range && year_range->first > year_range->second) {
      throw Error(ErrorCode::InvalidArgument, "year_range min exceeds max");
    }
  }

  /// Selector match only; metric availability is checked separately.
  bool matches(const ProjectRecord& r) const {
    if (!project_types.empty() && !project_types.contains(r.project_type)) return false;
    if (!stages.empty() && !stages.contains(r.stage)) return false;
    for (const auto& tag : regime_tags_required) {
      if (!r.regime_tags.contains(tag)) return false;
    }
    if (year_range && (r.year < year_range->first || r.year > year_range->second)) {
      return false;
    }
    return true;
  }

  friend bool operator==(const ClassFilter&, const ClassFilter&) = default;
};

inline void to_json(Json& j, const ClassFilter& f) {
  j = Json{{"name", f.name},
                     {"metric", to_string(f.metric)},
                     {"all", f.match_all},
                     {"project_types", f.project_types},
                     {"regime_tags_required", f.regime_tags_required}};
  auto stages = Json::array();
  for (auto s : f.stages) stages.push_back(to_string(s));
  j["stages"] = stages;
  j["year_range"] = f.year_range
                        ? Json::array({f.year_range->first, f.year_range->second})
                        : Json(nullptr);
}

inline void from_json(const Json& j, ClassFilter& f) {
  f = ClassFilter{};
  f.name = j.value("name", "");
  if (j.contains("metric")) {
    auto metric = parse_metric(j.at("metric").get<std::string>());
    if (!metric) throw Error(ErrorCode::InvalidArgument, "unknown metric in filter");
    f.metric = *metric;
  }
  f.match_all = j.value("all", false);
  if (j.contains("project_types")) {
    f.project_types = j.at("project_types").get<std::set<std::string>>();
  }
  if (j.contains("regime_tags_required")) {
    f.regime_tags_required = j.at("regime_tags_required").get<std::set<std::string>>();
  }
  if (j.contains("stages")) {
    for (const auto& s : j.at("stages")) {
      auto stage = parse_stage(s.get<std::string>());
      if (!stage) throw Error(ErrorCode::InvalidArgument, "unknown stage in filter");
      f.stages.insert(*stage);
    }
  }
  if (j.contains("year_range") && !j.at("year_range").is_null()) {
    const auto& yr = j.at("year_range");
    if (!yr.is_array() || yr.size() != 2) {
      throw Error(ErrorCode::InvalidArgument, "year_range must be [min, max]");
    }
    f.year_range = std::pair{yr[0].get<int>(), yr[1].get<int>()};
  }
  f.validate();
}

/// Screened set of comparable completed projects with cached deviations.
class ReferenceClass {
 public:
  /// Checks every member against the filter's metric and caches deviations.
  ReferenceClass(std::vector<ProjectRecord> members, ClassFilter filter,
                 std::vector<std::string> warnings = {})
      : members_(std::move(members)),
        filter_(std::move(filter)),
        warnings_(std::move(warnings)) {
    if (members_.empty()) {
      throw Error(ErrorCode::NoMatch, "reference class has no members");
    }
    deviations_.reserve(members_.size());
    for (const auto& m : members_) deviations_.push_back(deviation(m, filter_.metric));
    sorted_ = deviations_;
    std::sort(sorted_.begin(), sorted_.end());
  }

  const std::vector<ProjectRecord>& members() const noexcept { return members_; }
  const ClassFilter& filter() const noexcept { return filter_; }
  DeviationMetric metric() const noexcept { return filter_.metric; }
  const std::vector<double>& deviations() const noexcept { return deviations_; }
  const std::vector<double>& sorted_deviations() const noexcept { return sorted_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t size() const noexcept { return members_.size(); }

 private:
  std::vector<ProjectRecord> members_;
  ClassFilter filter_;
  std::vector<std::string> warnings_;
  std::vector<double> deviations_;
  std::vector<double> sorted_;
};

/// Step 1: every record matching all selectors and carrying the metric's
/// actuals. Errors below kMinClassSize, warns below kAdvisedClassSize.
inline ReferenceClass build_class(const Dataset& dataset, const ClassFilter& filter) {
  filter.validate();
  std::vector<ProjectRecord> members;
  for (const auto& r : dataset.records) {
    if (filter.matches(r) && has_metric_fields(r, filter.metric)) members.push_back(r);
  }
  if (members.empty()) {
    throw Error(ErrorCode::NoMatch, "no record matches the class filter");
  }
  if (members.size() < kMinClassSize) {
    throw Error(ErrorCode::ClassTooSmall,
                "reference class has " + std::to_string(members.size()) +
                    " members; at least " + std::to_string(kMinClassSize) +
                    " are required");
  }
  std::vector<std::string> warnings;
  if (members.size() < kAdvisedClassSize) {
    warnings.push_back("small reference class: " + std::to_string(members.size()) +
                       " members (fewer than " + std::to_string(kAdvisedClassSize) +
                       ")");
  }
  return ReferenceClass(std::move(members), filter, std::move(warnings));
}

inline Json to_json_value(const ReferenceClass& rc) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["filter"] = rc.filter();
  auto members = Json::array();
  for (const auto& m : rc.members()) members.push_back(record_to_json(m));
  j["members"] = members;
  j["deviations"] = rc.deviations();
  j["warnings"] = rc.warnings();
  return j;
}

/// Rebuilds a class file. Members are re-validated through the dataset
/// loader and the stored deviations must match the recomputed ones.
inline ReferenceClass reference_class_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("filter") || !j.contains("members")) {
    throw Error(ErrorCode::ParseError, "class file needs 'filter' and 'members'");
  }
  auto filter = j.at("filter").get<ClassFilter>();
  auto loaded = parse_json_dataset(j.at("members").dump());
  if (!loaded.ok()) {
    const auto& e = loaded.report.errors.front();
    throw Error(ErrorCode::ValidationFailed,
                "class member '" + e.record_id + "' invalid: " + e.message);
  }
  std::vector<std::string> warnings;
  if (j.contains("warnings")) warnings = j.at("warnings").get<std::vector<std::string>>();
  ReferenceClass rc(std::move(loaded.dataset->records), filter, std::move(warnings));
  if (j.contains("deviations")) {
    auto stored = j.at("deviations").get<std::vector<double>>();
    if (stored.size() != rc.size()) {
      throw Error(ErrorCode::ValidationFailed, "class file deviation count mismatch");
    }
    for (std::size_t i = 0; i < stored.size(); ++i) {
      if (std::fabs(stored[i] - rc.deviations()[i]) >
          1e-12 * std::max(1.0, std::fabs(stored[i]))) {
        throw Error(ErrorCode::ValidationFailed,
                    "class file deviation " + std::to_string(i) +
                        " disagrees with its member record");
      }
    }
  }
  return rc;
}

struct DistributionSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stdev = 0.0;
  std::vector<stats::EcdfPoint> ecdf_points;
};

/// Step 2: the class's distribution of outcomes.
inline DistributionSummary summarize(const ReferenceClass& rc) {
  const auto& sorted = rc.sorted_deviations();
  DistributionSummary s;
  s.n = sorted.size();
  s.mean = std::clamp(stats::mean(sorted), sorted.front(), sorted.back());
  s.median = stats::median_sorted(sorted);
  s.min = sorted.front();
  s.max = sorted.back();
  s.stdev = stats::stdev(sorted);
  s.ecdf_points = stats::ecdf(sorted);
  return s;
}

inline Json to_json_value(const DistributionSummary& s) {
  auto points = Json::array();
  for (const auto& p : s.ecdf_points) points.push_back({p.value, p.cumulative});
  return {{"n", s.n},           {"mean", s.mean}, {"median", s.median},
          {"min", s.min},       {"max", s.max},   {"stdev", s.stdev},
          {"ecdf_points", points}};
}

/// Plot-ready ECDF: header plus one (deviation, cumulative_fraction) row per
/// distinct value.
inline std::string ecdf_csv(const DistributionSummary& s) {
  std::string out = "deviation,cumulative_fraction\n";
  for (const auto& p : s.ecdf_points) {
    out += detail::format_number(p.value) + "," + detail::format_number(p.cumulative) +
           "\n";
  }
  return out;
}

/// Acceptable probability that the uplifted budget is exceeded.
class UpliftQuery {
 public:
  explicit UpliftQuery(double acceptable_overrun_risk)
      : risk_(acceptable_overrun_risk) {
    if (!(risk_ > 0.0 && risk_ < 1.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "acceptable overrun risk must lie strictly between 0 and 1");
    }
  }

  double risk() const noexcept { return risk_; }
  /// Percentile label: risk 0.2 is "P80".
  double confidence() const noexcept { return 1.0 - risk_; }

 private:
  double risk_;
};

struct Uplift {
  double fraction = 0.0;  // applied uplift (after optional clamp)
  double raw = 0.0;       // empirical quantile before clamping
  std::size_t rank = 0;   // 1-based order statistic used
  bool clamped = false;
  std::vector<std::string> warnings;
};

/// Nearest-rank ceiling quantile of the class deviations at 1 - risk: the
/// smallest deviation whose ECDF reaches 1 - risk, so at most a `risk`
/// share of members exceeds it.
inline Uplift uplift(const ReferenceClass& rc, const UpliftQuery& query,
                     bool clamp_nonnegative = false) {
  const auto& sorted = rc.sorted_deviations();
  Uplift u;
  u.rank = stats::nearest_rank(sorted.size(), query.confidence());
  u.raw = sorted[u.rank - 1];
  u.fraction = u.raw;
  if (u.raw < 0.0) {
    if (clamp_nonnegative) {
      u.fraction = 0.0;
      u.clamped = true;
      u.warnings.push_back("negative uplift clamped to zero");
    } else {
      u.warnings.push_back("negative uplift: the class median project underran");
    }
  }
  return u;
}

struct Comparability {
  double statistic = 0.0;
  double p_value = 1.0;
  bool comparable = true;
  bool exact = true;
  double alpha = 0.05;
};

/// Two-sample KS test on the classes' deviation samples;
/// comparable iff p_value >= alpha.
inline Comparability comparability_test(const ReferenceClass& a, const ReferenceClass& b,
                                        double alpha = 0.05) {
  if (a.metric() != b.metric()) {
    throw Error(ErrorCode::MetricMismatch,
                "classes measure different metrics: " + std::string(to_string(a.metric())) +
                    " vs " + std::string(to_string(b.metric())));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie strictly between 0 and 1");
  }
  const auto ks = ks_two_sample(a.deviations(), b.deviations());
  return {ks.statistic, ks.p_value, ks.p_value >= alpha, ks.exact, alpha};
}

}  // namespace refcast
