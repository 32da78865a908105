#ifndef PTROBUST_ORACLE_HPP_
#define PTROBUST_ORACLE_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ptrobust/integrate.hpp"

namespace ptrobust {

struct ClosedFormQuery {
  double s = 0.0;
  Eigen::Vector2d xi = Eigen::Vector2d::Zero();
  double t = 0.0;
};

/// Exact solution of the example loop v = -6/(1-t)^2 x1 - 4/(1-t) x2 started
/// from x(s) = xi, evaluated at t in [s, 1].
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> closed_form_example(
    Scalar s, const Eigen::Matrix<Scalar, 2, 1>& xi, Scalar t) {
  if (!(s >= Scalar(0) && s < Scalar(1))) {
    throw std::invalid_argument("closed form requires s in [0, 1)");
  }
  if (!(t >= s && t <= Scalar(1))) {
    throw std::invalid_argument("closed form requires t in [s, 1]");
  }
  const Scalar a = Scalar(1) - s;
  const Scalar u = Scalar(1) - t;
  const Scalar u2 = u * u;
  const Scalar u3 = u2 * u;
  const Scalar a2 = a * a;
  const Scalar a3 = a2 * a;
  Eigen::Matrix<Scalar, 2, 1> x;
  x(0) = (Scalar(3) * u2 / a2 - Scalar(2) * u3 / a3) * xi(0) +
         (u2 / a - u3 / a2) * xi(1);
  x(1) = (Scalar(6) * u2 / a3 - Scalar(6) * u / a2) * xi(0) +
         (Scalar(3) * u2 / a2 - Scalar(2) * u / a) * xi(1);
  return x;
}

inline Eigen::Vector2d closed_form_example(const ClosedFormQuery& q) {
  return closed_form_example<double>(q.s, q.xi, q.t);
}

/// Largest ||x(t)|| of the closed form over [s, 1] and its argument.
struct ClosedFormPeak {
  double t = 0.0;
  double norm = 0.0;
};
ClosedFormPeak closed_form_peak(double s, const Eigen::Vector2d& xi);

struct WitnessQuery {
  double delta = 0.0;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  double T = 1.0;
};

/// Start time s = T - delta / epsilon' past which any deadline trajectory
/// with |x1(s')| >= delta must exceed norm epsilon before T.
double stability_witness_time(const WitnessQuery& q);

/// 1.05 max(epsilon, delta), the default free choice of epsilon'.
double default_epsilon_prime(double delta, double epsilon);

struct OracleCase {
  double s = 0.0;
  Eigen::Vector2d xi = Eigen::Vector2d::Zero();
};

struct OracleCaseResult {
  OracleCase input;
  double abs_error = 0.0;  ///< sup-norm error over the run
  double rel_error = 0.0;  ///< abs_error / sup ||x_exact|| (abs when zero)
};

struct OracleReport {
  std::vector<OracleCaseResult> cases;
  double max_rel_error = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Random cases s in [0, 0.9], ||xi|| <= 10 drawn from a seeded generator.
std::vector<OracleCase> random_oracle_cases(int count, std::uint64_t seed);

/// Integrates the example loop from every case over [s, 1 - 1e-4] and
/// compares each accepted step and a dense 200-point grid to the closed form.
OracleReport verify_solver_against_oracle(std::span<const OracleCase> cases,
                                          double tol,
                                          const IntegrationOptions& opts);

OracleReport verify_solver_against_oracle(int sample_count, double tol,
                                          std::uint64_t seed,
                                          const IntegrationOptions& opts);

}  // namespace ptrobust

#endif  // PTROBUST_ORACLE_HPP_
