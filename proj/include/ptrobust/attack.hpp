#ifndef PTROBUST_ATTACK_HPP_
#define PTROBUST_ATTACK_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptrobust/core.hpp"
#include "ptrobust/integrate.hpp"

namespace ptrobust {

/// Free choices of the divergence constructions. Targets grow as
/// epsilon_k = eps0 * growth^k for k = 0..k_max.
struct ScheduleParams {
  double eps0 = 0.0;       ///< <= 0 selects max(1, eta_bar)
  double growth = 2.0;
  int k_max = 6;
  double delta = 0.0;      ///< <= 0 selects eta_bar / 2 (controller attack)
  double placement = 0.1;  ///< t_k = m + placement (T - m) above the lower bound m
  double closeness = 1e-3; ///< relative z2 tolerance (differentiator attack)

  double resolved_eps0(double eta_bar) const;
  double resolved_delta(double eta_bar) const;
  void validate(double eta_bar) const;
};

/// Switching instants and targets realized during one attack run.
struct SwitchingSchedule {
  std::vector<double> t_k;
  std::vector<double> epsilon_k;
  /// Instants at which ||x|| was first seen above epsilon_k after t_k.
  std::vector<double> t_prime;
  double delta = 0.0;
};

/// Piecewise-constant vector noise eta = delta sign(x1(t_k)) e1 on
/// [t_k, t_{k+1}), with each t_{k+1} placed after the witness time of the
/// next target and after the observed crossing of the current one.
class ControllerDivergenceNoise final : public NoiseSource {
 public:
  ControllerDivergenceNoise(double eta_bar, int n, double T,
                            ScheduleParams params = {});

  double bound() const override { return eta_bar_; }
  int dimension() const override { return n_; }
  Vector value(double t) const override;
  std::optional<double> next_switch(double t) const override;
  bool observe(double t, const Vector& x, bool guard_fired) override;

  const SwitchingSchedule& schedule() const { return schedule_; }
  /// Lower bound T - delta / (epsilon_k + eta_bar) for the k-th switch.
  double witness_time(int k) const;

 private:
  void schedule_next(double lower);

  double eta_bar_;
  int n_;
  double T_;
  ScheduleParams params_;
  SwitchingSchedule schedule_;
  int k_ = -1;
  double sign_ = 1.0;
  std::optional<double> pending_;
  bool awaiting_crossing_ = false;
};

/// Data of the terminal-error construction from a prepared start time s:
/// xi_eps(t) = profile (T - t), Psi_n(s) = -2 epsilon, Psi_i(s) = psi_init_i.
struct PsiCascade {
  double s = 0.0;
  double epsilon = 0.0;
  Vector profile;   // n - 1
  Vector psi_init;  // n - 1
  /// Psi_n(s); -2 epsilon unless the start state was observed.
  std::optional<double> psi_n_start;

  double resolved_psi_n_start() const {
    return psi_n_start.value_or(-2.0 * epsilon);
  }
};

/// max(T - eta_bar' / (12 epsilon), T - 1/2), eta_bar' = eta_bar / sqrt(n).
double terminal_error_window_start(double eta_bar, double epsilon, int n,
                                   double T);

/// Builds a feasible cascade for `controller`. For the example controller
/// the default profile is 4 epsilon / 3 (1 - t), which zeroes the control.
PsiCascade default_cascade(const ControllerSpec& controller, double eta_bar,
                           double epsilon,
                           std::optional<Vector> profile = std::nullopt);

/// eta(t) = xi'(t) + q - Psi(t) on [s, T), under which x = Psi solves the
/// loop and ends at norm >= epsilon.
class ControllerTerminalErrorNoise final : public NoiseSource {
 public:
  ControllerTerminalErrorNoise(ControllerSpec controller, double eta_bar,
                               PsiCascade cascade, double rho_min = 1e-9);

  double bound() const override { return eta_bar_; }
  int dimension() const override { return n_; }
  Vector value(double t) const override;

  /// Predicted solution Psi(t), t in [s, T - rho_min].
  Vector psi(double t) const;
  /// Psi_{n+1}(t) = v(t, xi'(t) + q).
  double forcing(double t) const;
  const PsiCascade& cascade() const { return cascade_; }
  bool closed_form() const { return closed_form_; }

 private:
  ControllerSpec controller_;
  double eta_bar_;
  PsiCascade cascade_;
  int n_;
  bool closed_form_ = false;
  std::optional<Trajectory> numeric_psi_;
};

/// Full signal: constant -eta_bar/8 e_{n-1} on [0, s0), zero until x_n
/// first reaches -2 epsilon at s, then the cascade noise built from x(s).
class SteeredTerminalErrorNoise final : public NoiseSource {
 public:
  SteeredTerminalErrorNoise(ControllerSpec controller, double eta_bar,
                            double epsilon, double s0, double rho_min = 1e-9);

  double bound() const override { return eta_bar_; }
  int dimension() const override { return n_; }
  Vector value(double t) const override;
  std::optional<double> next_switch(double t) const override;
  bool observe(double t, const Vector& x, bool guard_fired) override;
  std::optional<double> guard(double t, const Vector& x) const override;

  std::optional<double> start_time() const { return s_; }
  bool infeasible() const { return infeasible_; }
  const ControllerTerminalErrorNoise* cascade_noise() const {
    return cascade_ ? &*cascade_ : nullptr;
  }

 private:
  enum class Phase { Constant, Released, Cascade, Failed };

  ControllerSpec controller_;
  double eta_bar_;
  double epsilon_;
  double s0_;
  double rho_min_;
  int n_;
  Phase phase_ = Phase::Constant;
  std::optional<double> s_;
  bool infeasible_ = false;
  std::optional<ControllerTerminalErrorNoise> cascade_;
};

/// Locally Lipschitz scalar noise made of ramps from eta1(t_k) towards
/// -eta_bar sign(eta1(t_k)) at T; a new ramp starts at a step boundary once
/// |x2 + eta1'| <= closeness |eta1'|, t > T - 1/epsilon_k and the next slope
/// exceeds epsilon_{k+1}.
class DifferentiatorDivergenceNoise final : public NoiseSource {
 public:
  DifferentiatorDivergenceNoise(double eta_bar, double T,
                                ScheduleParams params = {});

  double bound() const override { return eta_bar_; }
  int dimension() const override { return 1; }
  Vector value(double t) const override;
  bool observe(double t, const Vector& x, bool guard_fired) override;

  /// eta1'(t) on the current segment.
  double slope() const;
  const SwitchingSchedule& schedule() const { return schedule_; }
  /// True once all k_max ramps have been started.
  bool schedule_complete() const { return k_ >= params_.k_max; }

 private:
  double eta_bar_;
  double T_;
  ScheduleParams params_;
  SwitchingSchedule schedule_;
  int k_ = -1;
  double t_k_ = 0.0;
  double eta_k_ = 0.0;
};

/// eta1 = -eta_bar on [0, s), -eta_bar + (t - s) epsilon on [s, T) with
/// s = T - 2 eta_bar / epsilon.
class DifferentiatorTerminalErrorNoise final : public NoiseSource {
 public:
  DifferentiatorTerminalErrorNoise(double eta_bar, double epsilon, double T);

  double bound() const override { return eta_bar_; }
  int dimension() const override { return 1; }
  Vector value(double t) const override;
  std::optional<double> next_switch(double t) const override;
  bool observe(double t, const Vector& x, bool guard_fired) override;

  double ramp_start() const { return s_; }

 private:
  double eta_bar_;
  double epsilon_;
  double T_;
  double s_;
  bool passed_ = false;
};

struct AttackOutcome {
  std::string name;
  double noise_bound_used = 0.0;
  double max_noise_norm = 0.0;
  SwitchingSchedule schedule;
  std::vector<PeakCrossing> peaks;
  std::optional<double> start_time;
  std::optional<Vector> terminal;
  double terminal_rho = 0.0;
  std::optional<double> tracking_error;
  bool verdict = false;
  std::string detail;
  Trajectory trajectory;
};

/// Ladder crossings must exist, increase strictly in time and stay before T.
bool ladder_crossed(const std::vector<PeakCrossing>& peaks, double T);

AttackOutcome run_controller_divergence(const SystemModel& model,
                                        double eta_bar,
                                        const ScheduleParams& params,
                                        const Vector& x0,
                                        std::span<const double> ladder,
                                        const IntegrationOptions& opts);

/// Prepared-state terminal-error attack integrated on [s, T - rho].
AttackOutcome run_controller_terminal_error(const SystemModel& model,
                                            double eta_bar,
                                            const PsiCascade& cascade,
                                            double rho,
                                            const IntegrationOptions& opts);

/// Best-effort full signal from x(0) = x0; searches s0 towards T.
AttackOutcome run_controller_terminal_error_steered(
    const SystemModel& model, double eta_bar, double epsilon, const Vector& x0,
    double rho, const IntegrationOptions& opts);

AttackOutcome run_differentiator_divergence(const SystemModel& model,
                                            double eta_bar,
                                            const ScheduleParams& params,
                                            const Vector& x0,
                                            std::span<const double> ladder,
                                            const IntegrationOptions& opts);

AttackOutcome run_differentiator_terminal_error(const SystemModel& model,
                                                double eta_bar, double epsilon,
                                                const Vector& x0, double rho,
                                                const IntegrationOptions& opts);

}  // namespace ptrobust

#endif  // PTROBUST_ATTACK_HPP_
