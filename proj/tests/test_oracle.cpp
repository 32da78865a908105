#include <gtest/gtest.h>

#include "ptrobust/oracle.hpp"

using namespace ptrobust;

TEST(ClosedForm, ReproducesInitialCondition) {
  const Eigen::Vector2d x = closed_form_example<double>(0.0, Eigen::Vector2d(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(x(0), 1.0);
  EXPECT_DOUBLE_EQ(x(1), 0.0);
  for (double s : {0.0, 0.25, 0.8}) {
    const Eigen::Vector2d xi(0.7, -3.1);
    EXPECT_LT((closed_form_example<double>(s, xi, s) - xi).norm(), 1e-14);
  }
}

TEST(ClosedForm, VanishesAtDeadline) {
  for (double s : {0.0, 0.3, 0.6, 0.99}) {
    for (const Eigen::Vector2d xi : {Eigen::Vector2d(1, 0), Eigen::Vector2d(-4, 9)}) {
      EXPECT_TRUE(closed_form_example<double>(s, xi, 1.0).isZero());
    }
  }
}

TEST(ClosedForm, HalfwayValue) {
  const Eigen::Vector2d x = closed_form_example<double>(0.0, Eigen::Vector2d(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(x(0), 0.5);
  EXPECT_DOUBLE_EQ(x(1), -1.5);
}

TEST(ClosedForm, RejectsOutOfRangeTimes) {
  const Eigen::Vector2d xi(1, 0);
  EXPECT_THROW(closed_form_example<double>(1.0, xi, 1.0), std::invalid_argument);
  EXPECT_THROW(closed_form_example<double>(0.5, xi, 0.4), std::invalid_argument);
  EXPECT_THROW(closed_form_example<double>(0.5, xi, 1.1), std::invalid_argument);
}

// The closed form solves x1' = x2, x2' = v(t, x): check by central differences.
TEST(ClosedForm, SatisfiesTheOde) {
  const Eigen::Vector2d xi(1.3, -0.4);
  const double s = 0.2;
  const long double h = 1e-6L;
  for (double t : {0.3, 0.55, 0.9, 0.97}) {
    const Eigen::Matrix<long double, 2, 1> xil = xi.cast<long double>();
    const auto xp = closed_form_example<long double>(s, xil, t + h);
    const auto xm = closed_form_example<long double>(s, xil, t - h);
    const auto x = closed_form_example<long double>(s, xil, t);
    const Eigen::Matrix<long double, 2, 1> dx = (xp - xm) / (2 * h);
    EXPECT_NEAR(static_cast<double>(dx(0)), static_cast<double>(x(1)), 1e-6);
    EXPECT_NEAR(static_cast<double>(dx(1)),
                static_cast<double>(eval_example_controller<Eigen::Matrix<long double, 2, 1>>(t, x)),
                1e-5 * (1.0 + std::abs(static_cast<double>(dx(1)))));
  }
}

TEST(ClosedFormPeak, WitnessStartReachesPredictedNorm) {
  const ClosedFormPeak p = closed_form_peak(0.6, Eigen::Vector2d(1, 0));
  // x2 = 93.75 u^2 - 37.5 u has its extremum at u = 0.2 where |x2| = 3.75.
  EXPECT_GT(p.norm, 3.78);
  EXPECT_LT(p.norm, 3.79);
  EXPECT_NEAR(p.t, 0.8, 0.01);
}

TEST(WitnessTime, FormulaAndFeasibility) {
  EXPECT_DOUBLE_EQ(stability_witness_time({1.0, 2.0, 2.5, 1.0}), 0.6);
  EXPECT_NEAR(stability_witness_time({0.1, 10.0, 10.1, 1.0}), 1.0 - 0.1 / 10.1, 1e-15);
  EXPECT_NEAR(stability_witness_time({0.1, 10.0, 10.1, 1.0}), 0.990099, 1e-6);
  EXPECT_NEAR(stability_witness_time({1.0, 0.5, 1.2, 1.0}), 1.0 - 1.0 / 1.2, 1e-15);
  EXPECT_THROW(stability_witness_time({1.0, 0.5, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(stability_witness_time({1.0, 2.0, 1.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(stability_witness_time({0.0, 2.0, 2.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(stability_witness_time({5.0, 2.0, 5.5, 0.5}), InfeasibleError);
  EXPECT_DOUBLE_EQ(default_epsilon_prime(1.0, 2.0), 2.1);
}

TEST(OracleVerification, ZeroCaseHasZeroError) {
  const OracleCase c{0.0, Eigen::Vector2d::Zero()};
  const OracleReport r = verify_solver_against_oracle(std::span(&c, 1), 1e-6, {});
  EXPECT_EQ(r.max_rel_error, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(OracleVerification, TwentyRandomCasesPass) {
  const OracleReport r = verify_solver_against_oracle(20, 1e-6, 7, {});
  EXPECT_EQ(r.cases.size(), 20u);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(OracleVerification, RoundOffFloorFailsTinyTolerance) {
  const OracleReport r = verify_solver_against_oracle(20, 1e-15, 7, {});
  EXPECT_FALSE(r.pass);
}

TEST(OracleVerification, CasesAreSeededAndBounded) {
  const auto a = random_oracle_cases(50, 3);
  const auto b = random_oracle_cases(50, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].s, b[i].s);
    EXPECT_EQ(a[i].xi, b[i].xi);
    EXPECT_GE(a[i].s, 0.0);
    EXPECT_LE(a[i].s, 0.9);
    EXPECT_LE(a[i].xi.norm(), 10.0);
  }
  EXPECT_THROW(verify_solver_against_oracle(0, 1e-6, 1, {}), std::invalid_argument);
}
