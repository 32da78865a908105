#include <gtest/gtest.h>

#include "ptrobust/core.hpp"

using namespace ptrobust;

namespace {

Vector vec2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST(Horizon, RejectsInvalidDeadlineAndDistance) {
  EXPECT_THROW(Horizon(0.0, 1e-9), std::invalid_argument);
  EXPECT_THROW(Horizon(-1.0, 1e-9), std::invalid_argument);
  EXPECT_THROW(Horizon(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(Horizon(1.0, 1.0), std::invalid_argument);
  const Horizon h = Horizon::with_default_rho(2.0);
  EXPECT_DOUBLE_EQ(h.T, 2.0);
  EXPECT_DOUBLE_EQ(h.rho_min, 2e-9);
}

TEST(RationalGain, EvaluatesPolesAndReportsLeadingTerm) {
  const RationalGain g({{-6.0, 2}, {1.0, 0}});
  EXPECT_DOUBLE_EQ(g.at_time_to_go(0.5), -6.0 / 0.25 + 1.0);
  EXPECT_EQ(g.pole_order(), 2);
  EXPECT_DOUBLE_EQ(g.leading_coefficient(), -6.0);
  // Coefficients of equal order are summed before deciding the pole order.
  const RationalGain cancel({{3.0, 2}, {-3.0, 2}, {2.0, 1}});
  EXPECT_EQ(cancel.pole_order(), 1);
  EXPECT_TRUE(RationalGain({{0.0, 3}}).is_zero());
  EXPECT_EQ(RationalGain().pole_order(), -1);
}

TEST(RationalGain, TemplatedOnScalar) {
  const RationalGain g({{-4.0, 1}});
  EXPECT_FLOAT_EQ(g.at_time_to_go(0.5f), -8.0f);
  EXPECT_EQ(g.at_time_to_go(0.25L), -16.0L);
}

TEST(ExampleController, MatchesHandEvaluation) {
  EXPECT_DOUBLE_EQ(eval_example_controller(0.0, Eigen::Vector2d(0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(eval_example_controller(0.0, Eigen::Vector2d(1, 0)), -6.0);
  EXPECT_DOUBLE_EQ(eval_example_controller(0.5, Eigen::Vector2d(1, 1)), -32.0);
  EXPECT_FLOAT_EQ(eval_example_controller(0.5f, Eigen::Vector2f(1, 1)), -32.0f);
  const ControllerSpec spec = ControllerSpec::example_eq4();
  EXPECT_DOUBLE_EQ(spec.evaluate(0.5, vec2(1, 1)), -32.0);
  EXPECT_DOUBLE_EQ(spec.evaluate(0.3, vec2(0.7, -2.0)),
                   eval_example_controller(0.3, Eigen::Vector2d(0.7, -2.0)));
}

TEST(ExampleController, SingularAtDeadline) {
  EXPECT_THROW(eval_example_controller(1.0, Eigen::Vector2d(1, 0)), SingularityError);
  EXPECT_THROW(eval_example_controller(1.5, Eigen::Vector2d(1, 0)), SingularityError);
  EXPECT_THROW(eval_example_controller(0.0, Eigen::Vector3d(1, 0, 0)), std::invalid_argument);
  EXPECT_THROW(ControllerSpec::example_eq4().evaluate(1.0, vec2(1, 0)), SingularityError);
}

TEST(HollowayInjection, MatchesHandEvaluation) {
  const InjectionSpec spec = InjectionSpec::holloway(1.0, 1.0, 1.0);
  EXPECT_TRUE(eval_holloway_injection(0.0, 0.0, spec).isZero());
  const Eigen::Vector2d a = eval_holloway_injection(0.0, 1.0, spec);
  EXPECT_DOUBLE_EQ(a(0), -7.0);
  EXPECT_DOUBLE_EQ(a(1), -10.0);
  const Eigen::Vector2d b = eval_holloway_injection(0.9, 1.0, spec);
  EXPECT_NEAR(b(0), -61.0, 1e-12);
  EXPECT_NEAR(b(1), -631.0, 1e-10);
  // The rational representation agrees with the direct formula.
  const Vector c = spec.evaluate(0.9, 1.0);
  EXPECT_NEAR(c(0), b(0), 1e-12);
  EXPECT_NEAR(c(1), b(1), 1e-10);
  EXPECT_THROW(spec.evaluate(1.0, 1.0), SingularityError);
}

TEST(ControlLoopRhs, ChainWithControllerOnLastState) {
  const SystemModel m = SystemModel::control_loop(ControllerSpec::example_eq4());
  const Vector z = Vector::Zero(2);
  EXPECT_TRUE(control_loop_rhs(0.0, vec2(1, 0), z, m).isApprox(vec2(0, -6)));
  EXPECT_TRUE(control_loop_rhs(0.0, z, z, m).isZero());
  EXPECT_TRUE(control_loop_rhs(0.0, vec2(1, 0), vec2(0.1, 0), m).isApprox(vec2(0, -6.6)));
  EXPECT_THROW(control_loop_rhs(1.0, vec2(1, 0), z, m), SingularityError);
  EXPECT_THROW(control_loop_rhs(0.0, Vector::Zero(3), z, m), std::invalid_argument);
}

TEST(DiffErrorRhs, InjectionsOnEveryChannel) {
  const SystemModel m = SystemModel::diff_error(InjectionSpec::holloway(1, 1, 1));
  EXPECT_TRUE(diff_error_rhs(0.0, vec2(1, 0), 0.0, m).isApprox(vec2(-7, -10)));
  EXPECT_TRUE(diff_error_rhs(0.0, vec2(0, 0), 0.0, m).isZero());
  EXPECT_TRUE(diff_error_rhs(0.0, vec2(1, 1), 0.0, m).isApprox(vec2(-6, -10)));
  EXPECT_THROW(diff_error_rhs(1.0, vec2(1, 0), 0.0, m), SingularityError);
  EXPECT_THROW(m.rhs(0.0, vec2(1, 0), vec2(0, 0)), std::invalid_argument);
}

TEST(ControllerSpec, RationalAndOpenLoop) {
  const auto spec = ControllerSpec::rational(2.0, {RationalGain({{-1.0, 1}}),
                                                   RationalGain({{-2.0, 0}})});
  EXPECT_DOUBLE_EQ(spec.evaluate(1.0, vec2(1, 1)), -1.0 - 2.0);
  EXPECT_THROW(ControllerSpec::rational(1.0, {RationalGain({{-1.0, 1}})}),
               std::invalid_argument);
  const auto open = ControllerSpec::open_loop(1.0, 3);
  EXPECT_EQ(open.dimension(), 3);
  EXPECT_DOUBLE_EQ(open.evaluate(0.99, Vector::Ones(3)), 0.0);
}

TEST(Disturbance, EvaluatesAndRespectsBound) {
  EXPECT_DOUBLE_EQ(DisturbanceSpec::zero().evaluate(0.3), 0.0);
  EXPECT_DOUBLE_EQ(DisturbanceSpec::constant(0.5, 1.0).evaluate(0.3), 0.5);
  EXPECT_THROW(DisturbanceSpec::constant(2.0, 1.0).validate(), std::invalid_argument);
  const auto sine = DisturbanceSpec::sinusoid(0.5, 2.0, 0.0, 0.5);
  EXPECT_NEAR(sine.evaluate(0.25), 0.5 * std::sin(0.5), 1e-15);
  const auto pw = DisturbanceSpec::piecewise(0.25, {1.0, -1.0}, 1.0);
  EXPECT_DOUBLE_EQ(pw.evaluate(0.1), 1.0);
  EXPECT_DOUBLE_EQ(pw.evaluate(0.3), -1.0);
  EXPECT_DOUBLE_EQ(pw.evaluate(0.6), 0.0);
  ASSERT_TRUE(pw.next_breakpoint(0.1).has_value());
  EXPECT_DOUBLE_EQ(*pw.next_breakpoint(0.1), 0.25);
  EXPECT_FALSE(DisturbanceSpec::constant(0.5, 1.0).next_breakpoint(0.1).has_value());
}

TEST(Disturbance, EntersLastChannel) {
  const SystemModel m = SystemModel::control_loop(ControllerSpec::example_eq4(),
                                                  DisturbanceSpec::constant(0.25, 1.0));
  EXPECT_TRUE(m.rhs(0.0, vec2(0, 0), vec2(0, 0)).isApprox(vec2(0, 0.25)));
  EXPECT_TRUE(m.switched_off_rhs(0.0, vec2(1, 2)).isApprox(vec2(2, 0.25)));
}

TEST(Noise, BoundCheck) {
  EXPECT_NO_THROW(check_noise_bound(vec2(0.6, 0.8), 1.0));
  EXPECT_NO_THROW(check_noise_bound(vec2(1.0 + 1e-15, 0.0), 1.0));
  EXPECT_THROW(check_noise_bound(vec2(0.6, 0.81), 1.0), NoiseBoundViolation);
  EXPECT_THROW(ConstantNoise(vec2(2, 0), 1.0), NoiseBoundViolation);
  ZeroNoise z(3);
  EXPECT_EQ(z.dimension(), 3);
  EXPECT_TRUE(z.value(0.5).isZero());
}

TEST(SystemModel, ShapeAndGainMagnitude) {
  const SystemModel loop = SystemModel::control_loop(ControllerSpec::example_eq4());
  EXPECT_TRUE(loop.is_control_loop());
  EXPECT_EQ(loop.noise_dimension(), 2);
  EXPECT_DOUBLE_EQ(loop.gain_magnitude(0.5), 24.0);
  EXPECT_DOUBLE_EQ(loop.gain_output(0.5, vec2(1, 0), vec2(0, 1)), -32.0);
  const SystemModel diff = SystemModel::diff_error(InjectionSpec::holloway(1, 1, 1));
  EXPECT_FALSE(diff.is_control_loop());
  EXPECT_EQ(diff.noise_dimension(), 1);
  EXPECT_DOUBLE_EQ(diff.gain_output(0.0, vec2(1, 0), Vector::Zero(1)), -10.0);
  EXPECT_THROW(loop.gain_magnitude(1.0), SingularityError);
}

// Linear in the state: v(t, a x + b y) = a v(t, x) + b v(t, y).
TEST(Properties, ControllerIsLinearInState) {
  const ControllerSpec spec = ControllerSpec::example_eq4();
  for (double t : {0.0, 0.3, 0.77, 0.999}) {
    const Vector x = vec2(0.3, -1.2);
    const Vector y = vec2(-2.0, 0.5);
    EXPECT_NEAR(spec.evaluate(t, 2.0 * x - 3.0 * y),
                2.0 * spec.evaluate(t, x) - 3.0 * spec.evaluate(t, y),
                1e-9 * std::abs(spec.evaluate(t, x - y)) + 1e-9);
  }
}
