#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "refcast/refclass.hpp"
#include "support.hpp"

using namespace refcast;
using testing_support::fixture_class;
using testing_support::load_filter;
using testing_support::load_fixture;

namespace {

ClassFilter everything() {
  ClassFilter f;
  f.name = "all";
  f.match_all = true;
  return f;
}

ProjectRecord record(std::size_t i, double forecast, double actual) {
  ProjectRecord r;
  r.id = "P" + std::to_string(i);
  r.project_type = "rail";
  r.year = 2000;
  r.forecast_cost = Money(forecast, "GBP", PriceBasis::Nominal);
  r.actual_cost = Money(actual, "GBP", PriceBasis::Nominal);
  return r;
}

/// Class with deviations drawn from a skewed continuous distribution.
ReferenceClass random_class(std::mt19937_64& rng, std::size_t n) {
  std::lognormal_distribution<double> ratio(0.2, 0.5);
  std::vector<ProjectRecord> members;
  for (std::size_t i = 0; i < n; ++i) members.push_back(record(i, 100.0, 100.0 * ratio(rng)));
  return ReferenceClass(std::move(members), everything());
}

ReferenceClass class_from_actuals(const std::vector<double>& actuals, double forecast = 1.0) {
  std::vector<ProjectRecord> members;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    members.push_back(record(i, forecast, actuals[i]));
  }
  return ReferenceClass(std::move(members), everything());
}

/// Sort-and-index oracle: the value at 1-based rank ceil(n (1 - p)), with
/// p = num / den taken as an exact fraction.
double oracle_uplift(std::vector<double> sample, long num, long den) {
  std::sort(sample.begin(), sample.end());
  const long n = static_cast<long>(sample.size());
  const long rank = std::max(1L, (n * (den - num) + den - 1) / den);
  return sample[static_cast<std::size_t>(rank - 1)];
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(BuildClass, RailFixtureHasFortySix) {
  auto rc = fixture_class("rail_edinburgh.csv", "rail.json");
  EXPECT_EQ(rc.size(), 46u);
  EXPECT_TRUE(rc.warnings().empty());
}

TEST(BuildClass, LightRailSubsetMatchesHandFilter) {
  const auto data = load_fixture("rail_edinburgh.csv");
  std::size_t expected = 0;
  for (const auto& r : data.records) {
    expected += r.project_type == "rail" && r.stage == Stage::Completed &&
                r.regime_tags.count("light-rail") == 1 && r.actual_cost.has_value();
  }
  auto rc = build_class(data, load_filter("light_rail.json"));
  EXPECT_EQ(expected, 12u);
  EXPECT_EQ(rc.size(), expected);
  ASSERT_EQ(rc.warnings().size(), 1u);
  EXPECT_NE(rc.warnings()[0].find("small reference class"), std::string::npos);
}

TEST(BuildClass, NoMatchAndTooSmall) {
  const auto data = load_fixture("rail_edinburgh.csv");
  EXPECT_EQ(code_of([&] { build_class(data, load_filter("nomatch.json")); }), ErrorCode::NoMatch);
  ClassFilter tiny = everything();
  tiny.match_all = false;
  tiny.year_range = std::pair{1, 1};
  Dataset few;
  for (std::size_t i = 0; i < 4; ++i) few.records.push_back(record(i, 10, 11));
  few.records.back().year = 0;
  EXPECT_EQ(code_of([&] { build_class(few, tiny); }), ErrorCode::NoMatch);
  EXPECT_EQ(code_of([&] { build_class(few, everything()); }), ErrorCode::ClassTooSmall);
  few.records.push_back(record(9, 10, 11));
  EXPECT_EQ(build_class(few, everything()).size(), 5u);
}

TEST(BuildClass, RecordsWithoutActualsAreSkipped) {
  Dataset d;
  for (std::size_t i = 0; i < 8; ++i) d.records.push_back(record(i, 10, 12));
  d.records[3].actual_cost.reset();
  EXPECT_EQ(build_class(d, everything()).size(), 7u);
}

TEST(BuildClass, FilterWithoutSelectorRejected) {
  Dataset d;
  for (std::size_t i = 0; i < 8; ++i) d.records.push_back(record(i, 10, 12));
  EXPECT_EQ(code_of([&] { build_class(d, ClassFilter{}); }), ErrorCode::InvalidArgument);
}

TEST(ClassFile, RoundTripsThroughJson) {
  auto rc = fixture_class("rail_edinburgh.csv", "light_rail.json");
  auto back = reference_class_from_json(Json::parse(to_json_value(rc).dump()));
  EXPECT_EQ(back.members(), rc.members());
  EXPECT_EQ(back.filter(), rc.filter());
  EXPECT_EQ(back.deviations(), rc.deviations());
  EXPECT_EQ(back.warnings(), rc.warnings());
}

TEST(ClassFile, TamperedDeviationRejected) {
  auto j = to_json_value(fixture_class("road_dft.csv", "road.json"));
  j["deviations"][0] = j["deviations"][0].get<double>() + 0.01;
  EXPECT_EQ(code_of([&] { reference_class_from_json(j); }), ErrorCode::ValidationFailed);
}

TEST(Summarize, ConstantClass) {
  auto s = summarize(class_from_actuals(std::vector<double>(9, 1.25)));
  EXPECT_EQ(s.mean, 0.25);
  EXPECT_EQ(s.median, 0.25);
  EXPECT_EQ(s.min, 0.25);
  EXPECT_EQ(s.max, 0.25);
  EXPECT_EQ(s.stdev, 0.0);
  ASSERT_EQ(s.ecdf_points.size(), 1u);
  EXPECT_EQ(s.ecdf_points[0].cumulative, 1.0);
}

TEST(Summarize, UrbanRailMeanOverrun) {
  auto s = summarize(fixture_class("urban_rail.csv", "urban_rail.json"));
  EXPECT_NEAR(s.mean, 0.45, 1e-12);
}

TEST(Summarize, UrbanRailRidershipShortfall) {
  auto s = summarize(fixture_class("urban_rail.csv", "urban_rail_ridership.json"));
  EXPECT_NEAR(s.mean, 0.50, 1e-12);
}

TEST(Summarize, PioneerPlantsCostAboutTwiceTheEstimate) {
  auto rc = fixture_class("pioneer_plants.csv", "pioneer.json");
  auto s = summarize(rc);
  EXPECT_NEAR(s.mean, 1.0, 0.1);
  EXPECT_GT(s.mean, 1.0);
}

TEST(Summarize, MatchesDirectComputation) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    auto rc = random_class(rng, 5 + rng() % 200);
    auto s = summarize(rc);
    auto d = rc.deviations();
    std::sort(d.begin(), d.end());
    double sum = 0.0;
    for (double x : d) sum += x;
    const double mean = sum / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(s.mean, mean, 1e-12);
    EXPECT_NEAR(s.stdev, std::sqrt(ss / static_cast<double>(d.size() - 1)), 1e-12);
    EXPECT_EQ(s.min, d.front());
    EXPECT_EQ(s.max, d.back());
    const std::size_t h = d.size() / 2;
    EXPECT_EQ(s.median, d.size() % 2 ? d[h] : (d[h - 1] + d[h]) / 2.0);
  }
}

TEST(Uplift, RoadAnchors) {
  auto rc = fixture_class("road_dft.csv", "road.json");
  EXPECT_EQ(uplift(rc, UpliftQuery(0.5)).fraction, 0.15);
  EXPECT_EQ(uplift(rc, UpliftQuery(0.2)).fraction, 0.32);
}

TEST(Uplift, RailFixtureMedian) {
  auto rc = fixture_class("rail_edinburgh.csv", "rail.json");
  EXPECT_EQ(uplift(rc, UpliftQuery(0.5)).fraction, 0.40);
  EXPECT_NEAR(uplift(rc, UpliftQuery(0.2)).fraction, 0.569, 5e-4);
}

TEST(Uplift, ZeroClassGivesZero) {
  auto rc = class_from_actuals(std::vector<double>(12, 1.0));
  for (double p : {0.01, 0.1, 0.2, 0.5, 0.9, 0.99}) {
    EXPECT_EQ(uplift(rc, UpliftQuery(p)).fraction, 0.0);
  }
}

TEST(Uplift, RiskMustBeOpenUnitInterval) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) EXPECT_THROW(UpliftQuery{p}, Error);
}

TEST(Uplift, NegativeUpliftWarnsAndCanClamp) {
  auto rc = class_from_actuals({0.8, 0.85, 0.9, 0.95, 1.2}, 1.0);
  auto raw = uplift(rc, UpliftQuery(0.5));
  EXPECT_LT(raw.fraction, 0.0);
  EXPECT_FALSE(raw.warnings.empty());
  auto clamped = uplift(rc, UpliftQuery(0.5), true);
  EXPECT_EQ(clamped.fraction, 0.0);
  EXPECT_TRUE(clamped.clamped);
  EXPECT_EQ(clamped.raw, raw.fraction);
}

TEST(UpliftProperty, AgreesWithSortAndIndexOracle) {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<std::size_t> size(1, 1000);
  std::uniform_int_distribution<long> pct(1, 999);
  for (int t = 0; t < 1000; ++t) {
    auto rc = random_class(rng, size(rng));
    const long num = pct(rng);
    const double p = static_cast<double>(num) / 1000.0;
    ASSERT_EQ(uplift(rc, UpliftQuery(p)).fraction, oracle_uplift(rc.deviations(), num, 1000))
        << "n=" << rc.size() << " p=" << p;
  }
}

TEST(UpliftProperty, MonotoneBoundedAndExactCoverage) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(1e-6, 1.0 - 1e-6);
  for (int t = 0; t < 300; ++t) {
    auto rc = random_class(rng, 5 + rng() % 300);
    const auto& sorted = rc.sorted_deviations();
    const double n = static_cast<double>(rc.size());
    double p1 = unit(rng), p2 = unit(rng);
    if (p1 > p2) std::swap(p1, p2);
    const auto u1 = uplift(rc, UpliftQuery(p1));
    const auto u2 = uplift(rc, UpliftQuery(p2));
    EXPECT_GE(u1.fraction, u2.fraction);
    for (const auto& [p, u] : {std::pair{p1, u1}, std::pair{p2, u2}}) {
      EXPECT_GE(u.fraction, sorted.front());
      EXPECT_LE(u.fraction, sorted.back());
      const auto above = std::count_if(sorted.begin(), sorted.end(),
                                       [&](double d) { return d > u.fraction; });
      EXPECT_LE(static_cast<double>(above) / n, p);
      if (u.rank > 1) {
        const double lower = sorted[u.rank - 2];
        const auto above_lower = std::count_if(sorted.begin(), sorted.end(),
                                               [&](double d) { return d > lower; });
        EXPECT_GT(static_cast<double>(above_lower) / n, p) << "rank is not the smallest";
      }
    }
  }
}

TEST(EcdfProperty, EndpointsAndSteps) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    auto rc = random_class(rng, 5 + rng() % 100);
    const auto& s = rc.sorted_deviations();
    EXPECT_EQ(stats::ecdf_at(s, s.back()), 1.0);
    EXPECT_EQ(stats::ecdf_at(s, std::nextafter(s.front(), -INFINITY)), 0.0);
    auto points = summarize(rc).ecdf_points;
    for (std::size_t i = 1; i < points.size(); ++i) {
      EXPECT_LT(points[i - 1].value, points[i].value);
      EXPECT_LT(points[i - 1].cumulative, points[i].cumulative);
    }
  }
}

TEST(Comparability, ClassAgainstItself) {
  auto rc = fixture_class("rail_edinburgh.csv", "rail.json");
  auto c = comparability_test(rc, rc);
  EXPECT_EQ(c.statistic, 0.0);
  EXPECT_TRUE(c.comparable);
  EXPECT_EQ(c.p_value, 1.0);
}

TEST(Comparability, DisjointSupports) {
  auto zeros = class_from_actuals(std::vector<double>(5, 1.0));
  auto ones = class_from_actuals(std::vector<double>(5, 2.0));
  auto c = comparability_test(zeros, ones);
  EXPECT_EQ(c.statistic, 1.0);
  EXPECT_FALSE(c.comparable);
}

TEST(Comparability, Symmetric) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    auto a = random_class(rng, 5 + rng() % 60);
    auto b = random_class(rng, 5 + rng() % 60);
    auto ab = comparability_test(a, b);
    auto ba = comparability_test(b, a);
    EXPECT_EQ(ab.statistic, ba.statistic);
    EXPECT_EQ(ab.p_value, ba.p_value);
  }
}

TEST(Comparability, MetricMismatch) {
  auto cost = fixture_class("urban_rail.csv", "urban_rail.json");
  auto ridership = fixture_class("urban_rail.csv", "urban_rail_ridership.json");
  EXPECT_EQ(code_of([&] { comparability_test(cost, ridership); }), ErrorCode::MetricMismatch);
}

TEST(Comparability, CalibratedUnderTheNull) {
  std::mt19937_64 rng(2024);
  int comparable = 0;
  for (int t = 0; t < 1000; ++t) {
    auto a = random_class(rng, 30);
    auto b = random_class(rng, 30);
    comparable += comparability_test(a, b).comparable;
  }
  EXPECT_GE(comparable, 950);
}

TEST(Comparability, DetectsAShiftedClass) {
  auto rail = fixture_class("rail_edinburgh.csv", "rail.json");
  auto road = fixture_class("road_dft.csv", "road.json");
  auto c = comparability_test(rail, road);
  EXPECT_FALSE(c.comparable);
  EXPECT_FALSE(c.exact);
}
