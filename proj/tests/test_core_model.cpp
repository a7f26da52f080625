#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "refcast/core_model.hpp"

using namespace refcast;

namespace {

ProjectRecord cost_record(double forecast, double actual) {
  ProjectRecord r;
  r.id = "P";
  r.project_type = "rail";
  r.year = 2000;
  r.forecast_cost = Money(forecast, "AUD", PriceBasis::Nominal);
  r.actual_cost = Money(actual, "AUD", PriceBasis::Nominal);
  return r;
}

}  // namespace

TEST(Money, RejectsInvalidAmounts) {
  EXPECT_THROW(Money(-1.0, "GBP", PriceBasis::Nominal), Error);
  EXPECT_THROW(Money(NAN, "GBP", PriceBasis::Nominal), Error);
  EXPECT_THROW(Money(INFINITY, "GBP", PriceBasis::Nominal), Error);
  EXPECT_THROW(Money(1.0, "", PriceBasis::Nominal), Error);
  EXPECT_THROW(Money(1.0, "GBP", PriceBasis::Constant), Error);
  EXPECT_NO_THROW(Money(0.0, "GBP", PriceBasis::Constant, 2004));
}

TEST(Money, NominalDropsBaseYear) {
  Money m(5.0, "GBP", PriceBasis::Nominal, 2004);
  EXPECT_FALSE(m.base_year().has_value());
  EXPECT_EQ(m.unit_label(), "GBP [nominal]");
  EXPECT_EQ(Money(5.0, "GBP", PriceBasis::Constant, 2004).unit_label(), "GBP [constant 2004]");
}

TEST(Money, ArithmeticRefusesMixedUnits) {
  Money a(10.0, "GBP", PriceBasis::Constant, 2004);
  Money b(5.0, "GBP", PriceBasis::Nominal);
  Money c(5.0, "GBP", PriceBasis::Constant, 2010);
  Money d(5.0, "USD", PriceBasis::Constant, 2004);
  for (const auto& other : {b, c, d}) {
    try {
      (void)(a + other);
      FAIL() << "mixed units were added";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MixedBasis);
    }
  }
  EXPECT_EQ((a + Money(5.0, "GBP", PriceBasis::Constant, 2004)).amount(), 15.0);
  EXPECT_EQ((a * 0.5).amount(), 5.0);
}

TEST(Deviation, OperaHouse) {
  auto r = cost_record(7.0, 102.0);
  EXPECT_NEAR(deviation(r, DeviationMetric::CostOverrun), 95.0 / 7.0, 1e-15);
  EXPECT_NEAR(deviation(r, DeviationMetric::CostOverrun), 13.571, 1e-3);
}

TEST(Deviation, IdentityIsZero) {
  EXPECT_EQ(deviation(cost_record(42.5, 42.5), DeviationMetric::CostOverrun), 0.0);
}

TEST(Deviation, ThesisScheduleSlip) {
  ProjectRecord r = cost_record(1.0, 1.0);
  r.forecast_duration_days = 33;
  r.actual_duration_days = 55;
  EXPECT_NEAR(deviation(r, DeviationMetric::ScheduleSlip), 2.0 / 3.0, 1e-15);
}

TEST(Deviation, RidershipShortfall) {
  ProjectRecord r = cost_record(1.0, 1.0);
  r.benefit_unit = "passengers";
  r.forecast_benefit = 100.0;
  r.actual_benefit = 50.0;
  EXPECT_EQ(deviation(r, DeviationMetric::BenefitShortfall), 0.5);
}

TEST(Deviation, MissingFieldsAndZeroForecast) {
  ProjectRecord r = cost_record(10.0, 12.0);
  r.actual_cost.reset();
  try {
    deviation(r, DeviationMetric::CostOverrun);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingField);
  }
  EXPECT_THROW(deviation(r, DeviationMetric::ScheduleSlip), Error);
  try {
    relative_deviation(0.0, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroForecast);
  }
}

TEST(Deviation, MixedBasisRecordRejected) {
  ProjectRecord r = cost_record(10.0, 12.0);
  r.actual_cost = Money(12.0, "AUD", PriceBasis::Constant, 1973);
  try {
    deviation(r, DeviationMetric::CostOverrun);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedBasis);
  }
}

TEST(DeviationProperty, RoundTripWithUplift) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_f(-3.0, 12.0);
  std::uniform_real_distribution<double> over(-0.95, 15.0);
  for (int i = 0; i < 10000; ++i) {
    const double f = std::exp(log_f(rng));
    const double o = over(rng);
    EXPECT_NEAR(relative_deviation(f, f * (1.0 + o)), o, 1e-12) << f << " " << o;
  }
}

TEST(DeviationProperty, ScaleInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 1000.0);
  for (int i = 0; i < 5000; ++i) {
    const double f = u(rng), a = u(rng), k = u(rng);
    const double d = relative_deviation(f, a);
    EXPECT_NEAR(relative_deviation(k * f, k * a), d, 1e-12 * std::max(1.0, std::fabs(d)));
  }
}

TEST(DeviationProperty, ShortfallAntisymmetricToOverrun) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(1.0, 500.0);
  for (int i = 0; i < 2000; ++i) {
    const double f = u(rng), a = u(rng);
    ProjectRecord r = cost_record(f, a);
    r.benefit_unit = "units";
    r.forecast_benefit = a;
    r.actual_benefit = f;
    // Swapping forecast and actual turns an overrun of a over f into a
    // shortfall with the same magnitude relative to the same base.
    const double overrun = deviation(r, DeviationMetric::CostOverrun);
    const double shortfall_swapped = (a - f) / a;
    EXPECT_EQ(deviation(r, DeviationMetric::BenefitShortfall), shortfall_swapped);
    EXPECT_EQ(-relative_deviation(a, f), shortfall_swapped);
    EXPECT_EQ(overrun, relative_deviation(f, a));
  }
}

TEST(Stage, NamesRoundTrip) {
  for (auto s : {Stage::ProgrammeEntry, Stage::ConditionalApproval, Stage::FullApproval,
                 Stage::Completed}) {
    EXPECT_EQ(parse_stage(to_string(s)), s);
  }
  EXPECT_FALSE(parse_stage("done").has_value());
  for (auto m : {DeviationMetric::CostOverrun, DeviationMetric::BenefitShortfall,
                 DeviationMetric::ScheduleSlip}) {
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
}
