#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refcast/json.hpp"

#include "refcast/core_model.hpp"
#include "refcast/error.hpp"

namespace refcast {

// ---------------------------------------------------------------------------
// Policy findings

enum class FindingStatus { Pass, Fail, Info };

inline std::string_view to_string(FindingStatus s) {
  switch (s) {
    case FindingStatus::Pass: return "pass";
    case FindingStatus::Fail: return "fail";
    case FindingStatus::Info: return "info";
  }
  return "info";
}

struct Finding {
  std::string rule_id;
  FindingStatus status = FindingStatus::Info;
  std::string detail;
};

inline bool all_pass(std::span<const Finding> findings) {
  return std::none_of(findings.begin(), findings.end(),
                      [](const Finding& f) { return f.status == FindingStatus::Fail; });
}

inline Json to_json_value(std::span<const Finding> findings) {
  auto arr = Json::array();
  for (const auto& f : findings) {
    arr.push_back({{"rule", f.rule_id}, {"status", to_string(f.status)}, {"detail", f.detail}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Funding structure rules

struct FundingStructure {
  Money gross_cost;
  Money local_contribution;
  Money private_capital_no_guarantee;
  bool is_light_rail = false;
  bool bidder_bears_overrun_risk = false;
  bool contract_bundled = false;

  void validate() const {
    for (const Money* m : {&local_contribution, &private_capital_no_guarantee}) {
      gross_cost.require_same_unit(*m);
      if (m->amount() > gross_cost.amount()) {
        throw Error(ErrorCode::InvalidArgument,
                    "funding components cannot exceed the gross cost");
      }
    }
  }
};

inline std::string percent_text(double part, double whole) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", whole > 0.0 ? 100.0 * part / whole : 0.0);
  return buf;
}

/// Minimum local share of gross cost, as numerator/denominator.
inline constexpr int kLocalShareDen = 10;       // 10%
inline constexpr int kLightRailShareDen = 4;    // 25%
inline constexpr int kPrivateCapitalDen = 3;    // one third

/// Every rule is reported exactly once: R1 local contribution, R2 private
/// capital at risk, R3 bidder overrun risk, R4 bundling (informational).
/// Thresholds are inclusive.
inline std::vector<Finding> check_funding(const FundingStructure& s) {
  s.validate();
  const double gross = s.gross_cost.amount();
  std::vector<Finding> findings;

  const int local_den = s.is_light_rail ? kLightRailShareDen : kLocalShareDen;
  const bool local_ok = s.local_contribution.amount() * local_den >= gross;
  findings.push_back(
      {"R1", local_ok ? FindingStatus::Pass : FindingStatus::Fail,
       "local contribution " + percent_text(s.local_contribution.amount(), gross) +
           " of gross; minimum " + (s.is_light_rail ? "25%" : "10%") +
           (s.is_light_rail ? " (light rail)" : "")});

  const bool private_ok =
      s.private_capital_no_guarantee.amount() * kPrivateCapitalDen >= gross;
  findings.push_back(
      {"R2", private_ok ? FindingStatus::Pass : FindingStatus::Fail,
       "private capital without sovereign guarantee " +
           percent_text(s.private_capital_no_guarantee.amount(), gross) +
           " of gross; minimum one third"});

  findings.push_back({"R3",
                      s.bidder_bears_overrun_risk ? FindingStatus::Pass : FindingStatus::Fail,
                      s.bidder_bears_overrun_risk
                          ? "winning bidder carries cost overrun risk"
                          : "overrun risk is not transferred to the bidder"});

  findings.push_back({"R4", FindingStatus::Info,
                      s.contract_bundled
                          ? "design-build-finance-operate-maintain bundling in place"
                          : "contract is not bundled"});
  return findings;
}

// ---------------------------------------------------------------------------
// Cost increase apportionment

struct CostIncreaseEvent {
  Money amount;
  Money cumulative_prior_increases;
  Money risk_allowance;

  void validate() const {
    amount.require_same_unit(cumulative_prior_increases);
    amount.require_same_unit(risk_allowance);
  }
};

struct CostShare {
  Money local_share;
  Money funder_share;
  Money within_allowance;
  Money excess;
  bool requires_new_approval = false;
};

inline constexpr double kLocalShareOfIncrease = 0.5;

/// The part of the increase that still fits in the unspent risk allowance is
/// split 50/50 without new approval; anything beyond the allowance is funded
/// locally and needs new approval. Shares sum to the increase exactly.
inline CostShare apportion_cost_increase(const CostIncreaseEvent& e) {
  e.validate();
  const double room =
      std::max(0.0, e.risk_allowance.amount() - e.cumulative_prior_increases.amount());
  const double within = std::min(e.amount.amount(), room);
  const double excess = e.amount.amount() - within;
  // local >= amount / 2, so amount - local is exact (Sterbenz) and the two
  // shares add back to the increase without rounding.
  const double local = e.amount.amount() - within * (1.0 - kLocalShareOfIncrease);
  const double funder = e.amount.amount() - local;
  return {e.amount.with_amount(local), e.amount.with_amount(funder),
          e.amount.with_amount(within), e.amount.with_amount(excess), excess > 0.0};
}

// ---------------------------------------------------------------------------
// Delusion / deception diagnostic

struct LearningScores {
  double problem_frequency = 0.0;
  double feedback_speed = 0.0;
  double feedback_clarity = 0.0;
};

struct AlignmentScores {
  double interest_congruence = 0.0;
  double information_symmetry = 0.0;
  double risk_preference_match = 0.0;
  double horizon_match = 0.0;
  double accountability_clarity = 0.0;
};

/// Sub-scores in [0, 1]; composites are plain means.
struct DiagnosticProfile {
  std::string name;
  LearningScores learning;
  AlignmentScores alignment;

  std::array<double, 3> learning_parts() const {
    return {learning.problem_frequency, learning.feedback_speed, learning.feedback_clarity};
  }
  std::array<double, 5> alignment_parts() const {
    return {alignment.interest_congruence, alignment.information_symmetry,
            alignment.risk_preference_match, alignment.horizon_match,
            alignment.accountability_clarity};
  }

  double learning_score() const {
    auto p = learning_parts();
    return (p[0] + p[1] + p[2]) / 3.0;
  }
  double alignment_score() const {
    auto p = alignment_parts();
    return (p[0] + p[1] + p[2] + p[3] + p[4]) / 5.0;
  }

  void validate() const {
    auto check = [](double v) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "diagnostic sub-scores must lie in [0, 1]");
      }
    };
    for (double v : learning_parts()) check(v);
    for (double v : alignment_parts()) check(v);
  }

  /// Every sub-score of a group set to the same value.
  static DiagnosticProfile uniform(std::string name, double learning, double alignment) {
    DiagnosticProfile p{std::move(name),
                        {learning, learning, learning},
                        {alignment, alignment, alignment, alignment, alignment}};
    p.validate();
    return p;
  }
};

enum class Quadrant { Unbiased, DelusionDominant, DeceptionDominant, Both };

inline std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::Unbiased: return "unbiased";
    case Quadrant::DelusionDominant: return "delusion_dominant";
    case Quadrant::DeceptionDominant: return "deception_dominant";
    case Quadrant::Both: return "both";
  }
  return "both";
}

struct Thresholds {
  double learning = 0.5;
  double alignment = 0.5;
};

/// Scores at a threshold count as good learning / aligned incentives.
inline Quadrant classify(const DiagnosticProfile& p, Thresholds t = {}) {
  p.validate();
  const bool learns = p.learning_score() >= t.learning;
  const bool aligned = p.alignment_score() >= t.alignment;
  if (learns && aligned) return Quadrant::Unbiased;
  if (aligned) return Quadrant::DelusionDominant;
  if (learns) return Quadrant::DeceptionDominant;
  return Quadrant::Both;
}

inline void from_json(const Json& j, DiagnosticProfile& p) {
  p = DiagnosticProfile{};
  p.name = j.value("name", "");
  const auto& l = j.at("learning");
  p.learning = {l.at("problem_frequency").get<double>(), l.at("feedback_speed").get<double>(),
                l.at("feedback_clarity").get<double>()};
  const auto& a = j.at("alignment");
  p.alignment = {a.at("interest_congruence").get<double>(),
                 a.at("information_symmetry").get<double>(),
                 a.at("risk_preference_match").get<double>(),
                 a.at("horizon_match").get<double>(),
                 a.at("accountability_clarity").get<double>()};
  p.validate();
}

// ---------------------------------------------------------------------------
// Risk register

enum class RiskCategory { Construction, Operational, Climate };

inline std::string_view to_string(RiskCategory c) {
  switch (c) {
    case RiskCategory::Construction: return "construction";
    case RiskCategory::Operational: return "operational";
    case RiskCategory::Climate: return "climate";
  }
  return "construction";
}

inline std::optional<RiskCategory> parse_risk_category(std::string_view text) {
  for (auto c : {RiskCategory::Construction, RiskCategory::Operational,
                 RiskCategory::Climate}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

/// A register entry always names who owns the risk.
class RiskRegisterEntry {
 public:
  RiskRegisterEntry(std::string description, RiskCategory category, std::string owner,
                    bool transferable)
      : description_(std::move(description)),
        category_(category),
        owner_(std::move(owner)),
        transferable_(transferable) {
    if (owner_.find_first_not_of(" \t") == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "risk '" + description_ + "' has no owner");
    }
  }

  const std::string& description() const noexcept { return description_; }
  RiskCategory category() const noexcept { return category_; }
  const std::string& owner() const noexcept { return owner_; }
  bool transferable() const noexcept { return transferable_; }

 private:
  std::string description_;
  RiskCategory category_;
  std::string owner_;
  bool transferable_;
};

inline RiskRegisterEntry risk_entry_from_json(const Json& j) {
  auto category = parse_risk_category(j.at("category").get<std::string>());
  if (!category) throw Error(ErrorCode::InvalidArgument, "unknown risk category");
  return RiskRegisterEntry(j.value("description", ""), *category, j.value("owner", ""),
                           j.value("transferable", false));
}

/// One finding per required category plus one for ownership.
inline std::vector<Finding> validate_risk_register(std::span<const RiskRegisterEntry> entries) {
  std::vector<Finding> findings;
  for (auto c : {RiskCategory::Construction, RiskCategory::Operational,
                 RiskCategory::Climate}) {
    const auto count = std::count_if(entries.begin(), entries.end(),
                                     [c](const auto& e) { return e.category() == c; });
    findings.push_back({"RR-" + std::string(to_string(c)),
                        count > 0 ? FindingStatus::Pass : FindingStatus::Fail,
                        count > 0 ? std::to_string(count) + " " + std::string(to_string(c)) +
                                        " risk(s) registered"
                                  : "missing category: no " + std::string(to_string(c)) +
                                        " risks registered"});
  }
  // Ownership is enforced when entries are built; restated for the audit trail.
  findings.push_back({"RR-owner", FindingStatus::Pass,
                      "all " + std::to_string(entries.size()) + " entries have an owner"});
  return findings;
}

// ---------------------------------------------------------------------------
// Ex-post appraisal

struct Cashflow {
  int period = 0;
  double amount = 0.0;
};

/// Sum of cf_t / (1 + rate)^t.
inline double npv(std::span<const Cashflow> flows, double rate) {
  if (!(rate > -1.0)) throw Error(ErrorCode::InvalidArgument, "rate must exceed -1");
  double total = 0.0;
  for (const auto& cf : flows) {
    if (cf.period < 0) throw Error(ErrorCode::InvalidArgument, "periods must be non-negative");
    total += cf.amount / std::pow(1.0 + rate, cf.period);
  }
  return total;
}

struct IrrResult {
  double rate = 0.0;
  bool multiple_roots = false;
  std::vector<double> roots;  // every root found in the bracket, ascending
};

inline constexpr double kIrrLow = -0.99;
inline constexpr double kIrrHigh = 10.0;
/// Convergence bound on |NPV| / sum |cf|.
inline constexpr double kIrrTolerance = 1e-9;

/// Internal rate of return by bisection on (-0.99, 10). The bracket is
/// scanned for sign changes first; with several roots the one nearest zero
/// is returned and `multiple_roots` is set.
inline IrrResult irr(std::span<const Cashflow> flows) {
  bool has_pos = false, has_neg = false;
  double scale = 0.0;
  for (const auto& cf : flows) {
    has_pos |= cf.amount > 0.0;
    has_neg |= cf.amount < 0.0;
    scale += std::fabs(cf.amount);
  }
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::NoSignChange, "cashflows never change sign; IRR undefined");
  }
  auto f = [&](double r) { return npv(flows, r) / scale; };

  // Scan in log(1 + r) so the region near -1 is sampled densely.
  constexpr int kSteps = 4000;
  const double lo_x = std::log1p(kIrrLow);
  const double hi_x = std::log1p(kIrrHigh);
  auto rate_at = [&](int i) {
    if (i == 0) return kIrrLow;
    if (i == kSteps) return kIrrHigh;
    return std::expm1(lo_x + (hi_x - lo_x) * i / kSteps);
  };

  std::vector<double> roots;
  double a = rate_at(0), fa = f(a);
  if (fa == 0.0) roots.push_back(a);
  for (int i = 1; i <= kSteps; ++i) {
    const double b = rate_at(i), fb = f(b);
    if (fb == 0.0) {
      roots.push_back(b);
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200; ++it) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double root = std::fabs(f(lo)) <= std::fabs(f(hi)) ? lo : hi;
      if (std::fabs(f(root)) < kIrrTolerance) roots.push_back(root);
    }
    a = b;
    fa = fb;
  }
  if (roots.empty()) {
    throw Error(ErrorCode::NoRootInBracket, "no IRR found in (-0.99, 10)");
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double x, double y) { return std::fabs(x - y) < 1e-9; }),
              roots.end());
  IrrResult result;
  result.rate = *std::min_element(roots.begin(), roots.end(), [](double x, double y) {
    return std::fabs(x) < std::fabs(y);
  });
  result.multiple_roots = roots.size() > 1;
  result.roots = std::move(roots);
  return result;
}

// ---------------------------------------------------------------------------
// JSON documents

/// Money in the unit named by a document's currency / price_basis / base_year.
inline Money money_from_json(const Json& doc, double amount) {
  auto basis = parse_price_basis(doc.value("price_basis", "nominal"));
  if (!basis) throw Error(ErrorCode::InvalidArgument, "price_basis must be constant or nominal");
  std::optional<int> base_year;
  if (doc.contains("base_year") && !doc.at("base_year").is_null()) {
    base_year = doc.at("base_year").get<int>();
  }
  return Money(amount, doc.value("currency", "GBP"), *basis, base_year);
}

inline FundingStructure funding_from_json(const Json& j) {
  FundingStructure s{money_from_json(j, j.at("gross_cost").get<double>()),
                     money_from_json(j, j.value("local_contribution", 0.0)),
                     money_from_json(j, j.value("private_capital_no_guarantee", 0.0)),
                     j.value("is_light_rail", false),
                     j.value("bidder_bears_overrun_risk", false),
                     j.value("contract_bundled", false)};
  s.validate();
  return s;
}

}  // namespace refcast
