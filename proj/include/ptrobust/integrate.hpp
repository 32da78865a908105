#ifndef PTROBUST_INTEGRATE_HPP_
#define PTROBUST_INTEGRATE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ptrobust/core.hpp"

namespace ptrobust {

enum class OutputGrid {
  StepBoundaries,  ///< one sample per accepted step
  Uniform,         ///< grid_count points uniform in t over [t0, t_end]
  Geometric,       ///< grid_count points geometric in T - t over [t0, t_end]
};

struct IntegrationOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double initial_step = 1e-4;
  double min_step = 1e-14;
  double rho_min = 1e-9;
  double max_norm = 1e9;
  /// Steps never exceed kappa * (T - t).
  double kappa = 0.1;
  OutputGrid grid = OutputGrid::StepBoundaries;
  int grid_count = 0;
  /// Switch the algorithm off once ||x||_inf <= deadzone.
  std::optional<double> deadzone;

  /// Defaults scaled to a horizon T.
  static IntegrationOptions for_horizon(const Horizon& horizon);
  void validate() const;
};

struct Sample {
  double t = 0.0;
  Vector x;
  Vector eta;
  double gain_output = 0.0;
};

struct BlowUpEvent {
  double t = 0.0;
  double norm = 0.0;
  int channel = 0;
};

/// Dormand-Prince continuous extension over one accepted step.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  Eigen::MatrixXd coeffs;  // n x 5

  double t1() const { return t0 + h; }
  Vector at(double t) const;
};

enum class Termination { ReachedEnd, BlowUp, StepUnderflow };

struct Trajectory {
  double T = 1.0;
  double rho_min = 1e-9;
  double t0 = 0.0;
  double t_last = 0.0;
  double t_end = 0.0;
  std::vector<Sample> samples;
  std::vector<DenseSegment> segments;
  /// Instants at which the noise source reported a discontinuity.
  std::vector<double> switch_times;
  Termination termination = Termination::ReachedEnd;
  std::optional<BlowUpEvent> blow_up;
  std::optional<double> underflow_time;
  std::optional<double> switch_off_time;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;

  bool reached_end() const { return termination == Termination::ReachedEnd; }
  /// Dense-output state at t in [t0, t_last].
  Vector state_at(double t) const;
  const Vector& final_state() const { return samples.back().x; }
  double max_state_norm() const;
  double max_noise_norm() const;
};

/// Generic right-hand side f(t, x, eta).
using Dynamics = std::function<Vector(double, const Vector&, const Vector&)>;

struct OdeProblem {
  Dynamics rhs;
  /// Used after a deadzone switch-off; defaults to rhs with zero noise.
  std::function<Vector(double, const Vector&)> switched_off_rhs;
  std::function<double(double, const Vector&, const Vector&)> gain_output;
  std::function<std::optional<double>(double)> next_breakpoint;
  double T = 1.0;
};

/// Adaptive Dormand-Prince 5(4) integration on [t0, t_end] with
/// t_end <= T - rho_min. Steps are clamped to kappa (T - t), land exactly on
/// noise switching instants and disturbance breakpoints, and stop early on
/// blow-up or step underflow.
Trajectory integrate(const SystemModel& model, NoiseSource& noise,
                     const Vector& x0, double t0, double t_end,
                     const IntegrationOptions& opts);

Trajectory integrate_ode(const OdeProblem& problem, NoiseSource& noise,
                         const Vector& x0, double t0, double t_end,
                         const IntegrationOptions& opts);

/// x(T - rho) by dense interpolation.
Vector terminal_state(const Trajectory& traj, double rho);

struct PeakCrossing {
  double threshold = 0.0;
  std::optional<double> time;
};

/// First time ||x|| reaches each threshold, refined within a step by
/// bisection on the dense output.
std::vector<PeakCrossing> detect_peaks(const Trajectory& traj,
                                       std::span<const double> thresholds);

}  // namespace ptrobust

#endif  // PTROBUST_INTEGRATE_HPP_
