#include "ptrobust/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ptrobust {

namespace {

constexpr double kOracleStopDistance = 1e-4;

}  // namespace

ClosedFormPeak closed_form_peak(double s, const Eigen::Vector2d& xi) {
  // Coarse scan, then golden-section refinement around the best sample.
  constexpr int kScan = 4000;
  ClosedFormPeak best{s, xi.norm()};
  int best_index = 0;
  for (int i = 0; i <= kScan; ++i) {
    const double t = s + (1.0 - s) * static_cast<double>(i) / kScan;
    const double n = closed_form_example<double>(s, xi, t).norm();
    if (n > best.norm) {
      best = {t, n};
      best_index = i;
    }
  }
  const double dt = (1.0 - s) / kScan;
  double a = std::max(s, s + (best_index - 1) * dt);
  double b = std::min(1.0, s + (best_index + 1) * dt);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double t) { return closed_form_example<double>(s, xi, t).norm(); };
  for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double t = 0.5 * (a + b);
  if (f(t) > best.norm) best = {t, f(t)};
  return best;
}

double stability_witness_time(const WitnessQuery& q) {
  if (!(q.delta > 0.0) || !(q.epsilon > 0.0)) {
    throw std::invalid_argument("delta and epsilon must be positive");
  }
  if (!(q.epsilon_prime > std::max(q.epsilon, q.delta))) {
    throw std::invalid_argument("epsilon' must exceed max(epsilon, delta)");
  }
  if (!(q.T > 0.0)) {
    throw std::invalid_argument("T must be positive");
  }
  const double s = q.T - q.delta / q.epsilon_prime;
  if (s < 0.0) {
    throw InfeasibleError("witness time T - delta/epsilon' is negative");
  }
  return s;
}

double default_epsilon_prime(double delta, double epsilon) {
  return 1.05 * std::max(delta, epsilon);
}

std::vector<OracleCase> random_oracle_cases(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<OracleCase> cases;
  cases.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    OracleCase c;
    c.s = 0.9 * unit(rng);
    const double angle = 2.0 * M_PI * unit(rng);
    const double radius = 10.0 * std::sqrt(unit(rng));
    c.xi = radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    cases.push_back(c);
  }
  return cases;
}

OracleReport verify_solver_against_oracle(std::span<const OracleCase> cases,
                                          double tol,
                                          const IntegrationOptions& opts) {
  if (cases.empty()) {
    throw std::invalid_argument("oracle verification needs at least one case");
  }
  const SystemModel model = SystemModel::control_loop(ControllerSpec::example_eq4());
  const double t_end = 1.0 - kOracleStopDistance;

  OracleReport report;
  report.tol = tol;
  for (const auto& c : cases) {
    ZeroNoise noise(2);
    const Trajectory traj = integrate(model, noise, c.xi, c.s, t_end, opts);
    if (!traj.reached_end()) {
      throw NumericalFailure("oracle run terminated early");
    }
    double err = 0.0;
    double scale = 0.0;
    auto compare = [&](double t, const Vector& x) {
      const Eigen::Vector2d exact = closed_form_example<double>(c.s, c.xi, t);
      err = std::max(err, (x - exact).lpNorm<Eigen::Infinity>());
      scale = std::max(scale, exact.lpNorm<Eigen::Infinity>());
    };
    for (const auto& sample : traj.samples) compare(sample.t, sample.x);
    constexpr int kDense = 200;
    for (int i = 0; i <= kDense; ++i) {
      const double t = c.s + (t_end - c.s) * static_cast<double>(i) / kDense;
      compare(t, traj.state_at(t));
    }
    OracleCaseResult r;
    r.input = c;
    r.abs_error = err;
    r.rel_error = scale > 0.0 ? err / scale : err;
    report.max_rel_error = std::max(report.max_rel_error, r.rel_error);
    report.cases.push_back(r);
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

OracleReport verify_solver_against_oracle(int sample_count, double tol,
                                          std::uint64_t seed,
                                          const IntegrationOptions& opts) {
  if (sample_count < 1) {
    throw std::invalid_argument("sample_count must be >= 1");
  }
  const auto cases = random_oracle_cases(sample_count, seed);
  return verify_solver_against_oracle(cases, tol, opts);
}

}  // namespace ptrobust
