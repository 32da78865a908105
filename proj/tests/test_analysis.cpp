#include <gtest/gtest.h>

#include "ptrobust/analysis.hpp"
#include "ptrobust/attack.hpp"
#include "ptrobust/oracle.hpp"

using namespace ptrobust;

namespace {

SystemModel example_loop() { return SystemModel::control_loop(ControllerSpec::example_eq4()); }
SystemModel holloway() { return SystemModel::diff_error(InjectionSpec::holloway(1, 1, 1)); }

const double kStarts[] = {0.0, 0.3, 0.6};
const std::vector<Vector> kGrid = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                   Eigen::Vector2d(10, -10)};

}  // namespace

TEST(Deadline, ExampleLoopPassesGrid) {
  const auto r = check_absolute_deadline(example_loop(), kStarts, kGrid, 1e-3, 0.1, {});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.cases.size(), 9u);
  for (const auto& c : r.cases) {
    EXPECT_LE(c.terminal_norm, c.threshold);
    EXPECT_DOUBLE_EQ(c.threshold, 0.1 * std::max(1.0, c.xi.norm()));
  }
}

TEST(Deadline, HollowayPassesGrid) {
  const auto r = check_absolute_deadline(holloway(), kStarts, kGrid, 1e-3, 0.1, {});
  EXPECT_TRUE(r.pass);
}

TEST(Deadline, OpenLoopChainFails) {
  const auto m = SystemModel::control_loop(ControllerSpec::open_loop(1.0, 2));
  const std::vector<Vector> ic = {Eigen::Vector2d(0, 1)};
  const double s[] = {0.0};
  const auto r = check_absolute_deadline(m, s, ic, 1e-3, 0.1, {});
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.cases.front().terminal_norm, std::hypot(1.0 - 1e-3, 1.0), 1e-9);
}

TEST(Deadline, IntegrationFailureFailsVerdict) {
  IntegrationOptions opts;
  opts.max_norm = 1.0;
  const std::vector<Vector> ic = {Eigen::Vector2d(10, -10)};
  const double s[] = {0.0};
  const auto r = check_absolute_deadline(example_loop(), s, ic, 1e-3, 0.1, opts);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.cases.front().failure.empty());
}

TEST(Deadline, TerminalNormsShrinkAtLeastLinearly) {
  const double ladder[] = {1e-2, 1e-3, 1e-4};
  for (const auto& m : {example_loop(), holloway()}) {
    for (double s : kStarts) {
      for (const auto& xi : kGrid) {
        const auto order = deadline_convergence_order(m, s, xi, ladder, {});
        EXPECT_GE(order.fitted_slope, 0.95);
        for (std::size_t i = 1; i < order.terminal_norm.size(); ++i) {
          EXPECT_LT(order.terminal_norm[i], order.terminal_norm[i - 1]);
        }
      }
    }
  }
}

TEST(GainScan, ExampleSupremumAtCorner) {
  const double ladder[] = {1e-2};
  const auto t = gain_supremum_scan(ControllerSpec::example_eq4(), 1.0, ladder);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.rows[0].supremum, 6.0 / 1e-4 + 4.0 / 1e-2, 1e-8);
  EXPECT_NEAR(t.rows[0].t, 0.99, 1e-15);
  EXPECT_EQ(std::abs(t.rows[0].arg(0)), 1.0);
  EXPECT_EQ(t.pole_order, 2);
  EXPECT_DOUBLE_EQ(t.leading_coefficient, -6.0);
}

TEST(GainScan, HollowaySecondChannelDominates) {
  const double ladder[] = {1e-1};
  const auto t = gain_supremum_scan(InjectionSpec::holloway(1, 1, 1), 1.0, ladder);
  EXPECT_NEAR(t.rows[0].supremum, 631.0, 1e-9);
  EXPECT_EQ(t.rows[0].channel, 2);
  EXPECT_EQ(t.pole_order, 2);
}

TEST(GainScan, SupremaStrictlyIncreaseAsRhoShrinks) {
  const double ladder[] = {1e-1, 1e-2, 1e-3};
  const auto a = gain_supremum_scan(ControllerSpec::example_eq4(), 1.0, ladder);
  const auto b = gain_supremum_scan(InjectionSpec::holloway(1, 1, 1), 1.0, ladder);
  for (const auto* t : {&a, &b}) {
    for (std::size_t i = 1; i < t->rows.size(); ++i) {
      EXPECT_GT(t->rows[i].supremum, t->rows[i - 1].supremum);
    }
  }
  // Leading-order ratio tends to 1 as rho -> 0.
  EXPECT_NEAR(a.rows[2].supremum * 1e-6 / 6.0, 1.0, 1e-3);
  const double bad[] = {1e-2, 1e-1};
  EXPECT_THROW(gain_supremum_scan(ControllerSpec::example_eq4(), 1.0, bad),
               std::invalid_argument);
  EXPECT_THROW(gain_supremum_scan(ControllerSpec::example_eq4(), 0.0, ladder),
               std::invalid_argument);
}

TEST(GainScan, BoundedGainHasNoPole) {
  const auto spec = ControllerSpec::rational(1.0, {RationalGain({{-1.0, 0}}),
                                                   RationalGain({{-2.0, 0}})});
  const double ladder[] = {1e-1, 1e-3};
  const auto t = gain_supremum_scan(spec, 1.0, ladder);
  EXPECT_EQ(t.pole_order, 0);
  EXPECT_DOUBLE_EQ(t.rows[0].supremum, t.rows[1].supremum);
}

TEST(Falsify, WitnessFromUnitDelta) {
  const auto w = falsify_uniform_stability(example_loop(), 1.0, 2.0, 2.5, {});
  EXPECT_DOUBLE_EQ(w.s, 0.6);
  EXPECT_TRUE(w.falsified);
  ASSERT_TRUE(w.crossing_time.has_value());
  EXPECT_GT(*w.crossing_time, 0.6);
  const ClosedFormPeak exact = closed_form_peak(0.6, Eigen::Vector2d(1, 0));
  EXPECT_NEAR(w.peak_norm, exact.norm, 1e-5);  // sampled, not continuous, maximum
  EXPECT_GE(w.peak_norm, 3.7);
}

TEST(Falsify, EqualDeltaAndEpsilon) {
  for (double d : {0.5, 1.0, 4.0}) {
    const auto w = falsify_uniform_stability(example_loop(), d, d, std::nullopt, {});
    EXPECT_TRUE(w.falsified) << d;
    EXPECT_GT(w.peak_norm, d);
  }
}

TEST(Falsify, SmallDeltaStartsNearDeadline) {
  const auto w = falsify_uniform_stability(example_loop(), 1e-3, 1.0, std::nullopt, {});
  EXPECT_GT(w.s, 0.999);
  EXPECT_TRUE(w.falsified);
}

TEST(Falsify, RequiresControlLoop) {
  EXPECT_THROW(falsify_uniform_stability(holloway(), 1.0, 2.0, 2.5, {}),
               std::invalid_argument);
}

TEST(FitLine, PerfectAndNoisyData) {
  const double x[] = {1, 2, 3, 4};
  const double y[] = {3, 5, 7, 9};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  const double flat[] = {0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(fit_line(x, flat).r_squared, 1.0);
}

TEST(StopTime, ResidualMatchesClosedForm) {
  const std::vector<Vector> ics = {Eigen::Vector2d(1, 0)};
  const auto r = evaluate_stop_time(example_loop(), 0.9, ics, {}, {});
  ASSERT_EQ(r.cases.size(), 1u);
  // 3u^2 - 2u^3 and 6u^2 - 6u at u = 0.1.
  EXPECT_NEAR(r.cases[0].residual(0), 0.028, 1e-6);
  EXPECT_NEAR(r.cases[0].residual(1), -0.54, 1e-6);
  EXPECT_FALSE(r.fit.has_value());
}

TEST(StopTime, ResidualScalesLinearly) {
  const std::vector<Vector> ics = {Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0),
                                   Eigen::Vector2d(5, 0), Eigen::Vector2d(10, 0)};
  const auto r = evaluate_stop_time(example_loop(), 0.9, ics, {}, {});
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_GE(r.fit->r_squared, 0.999);
  EXPECT_NEAR(r.cases[1].residual_norm, 2.0 * r.cases[0].residual_norm,
              1e-6 * r.cases[1].residual_norm);
  const std::vector<Vector> zero = {Vector::Zero(2)};
  EXPECT_EQ(evaluate_stop_time(example_loop(), 0.9, zero, {}, {}).cases[0].residual_norm, 0.0);
  EXPECT_THROW(evaluate_stop_time(example_loop(), 1.0, zero, {}, {}), std::invalid_argument);
}

TEST(Deadzone, EntryMovesTowardDeadlineForLargerStates) {
  const std::vector<Vector> ics = {Eigen::Vector2d(1, 0), Eigen::Vector2d(10, 0),
                                   Eigen::Vector2d(100, 0)};
  const auto r = evaluate_deadzone(example_loop(), 1e-2, ics, {}, {});
  ASSERT_EQ(r.cases.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) ASSERT_TRUE(r.cases[i].entry_time.has_value());
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_GT(*r.cases[i].entry_time, *r.cases[i - 1].entry_time);
    EXPECT_GT(r.cases[i].gain_at_entry, r.cases[i - 1].gain_at_entry);
  }
  EXPECT_FALSE(r.any_no_entry);
}

TEST(Deadzone, StartInsideEntersAtZero) {
  const std::vector<Vector> ics = {Eigen::Vector2d(1e-3, 0)};
  const auto r = evaluate_deadzone(example_loop(), 1e-2, ics, {}, {});
  ASSERT_TRUE(r.cases[0].entry_time.has_value());
  EXPECT_EQ(*r.cases[0].entry_time, 0.0);
}

TEST(Deadzone, DivergenceNoiseCanPreventEntry) {
  const std::vector<Vector> ics = {Eigen::Vector2d(10, 0)};
  bool seen_no_entry = false;
  for (int k_max : {6, 40}) {
    ScheduleParams p;
    p.k_max = k_max;
    const NoiseFactory noise = [p] {
      return std::make_unique<ControllerDivergenceNoise>(1e-2, 2, 1.0, p);
    };
    const auto r = evaluate_deadzone(example_loop(), 1e-2, ics, noise, {});
    seen_no_entry = seen_no_entry || r.any_no_entry;
  }
  EXPECT_TRUE(seen_no_entry);
}
