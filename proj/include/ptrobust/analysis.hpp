#ifndef PTROBUST_ANALYSIS_HPP_
#define PTROBUST_ANALYSIS_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptrobust/core.hpp"
#include "ptrobust/integrate.hpp"

namespace ptrobust {

struct DeadlineCase {
  double s = 0.0;
  Vector xi;
  double terminal_norm = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string failure;  ///< empty unless the integration failed
};

struct DeadlineReport {
  double rho = 0.0;
  double tol = 0.0;
  std::vector<DeadlineCase> cases;
  bool pass = false;
};

/// Noise-free runs from every (s, xi) pair; a case passes when
/// ||x(T - rho)|| <= tol max(1, ||xi||).
DeadlineReport check_absolute_deadline(const SystemModel& model,
                                       std::span<const double> start_times,
                                       std::span<const Vector> initial_conditions,
                                       double rho, double tol,
                                       const IntegrationOptions& opts);

/// Terminal norms of one (s, xi) case over a decreasing rho ladder and the
/// log-log slopes between consecutive rungs and of the least-squares fit.
struct ConvergenceOrder {
  std::vector<double> rho;
  std::vector<double> terminal_norm;
  std::vector<double> pairwise_slope;
  double fitted_slope = 0.0;
};

ConvergenceOrder deadline_convergence_order(const SystemModel& model, double s,
                                            const Vector& xi,
                                            std::span<const double> rho_ladder,
                                            const IntegrationOptions& opts);

struct GainScanRow {
  double rho = 0.0;
  double supremum = 0.0;
  double t = 0.0;       ///< time attaining the supremum
  Vector arg;           ///< maximizing box point (x, or x1 for injections)
  int channel = 0;      ///< maximizing injection channel, 0 for controllers
};

struct GainScanTable {
  double delta = 0.0;
  std::vector<GainScanRow> rows;
  int pole_order = -1;          ///< of the maximizing gain
  double leading_coefficient = 0.0;
};

/// sup over ||x||_inf <= delta and t in [0, T - rho] of |v(t, x)|, exact over
/// box corners.
GainScanTable gain_supremum_scan(const ControllerSpec& spec, double delta,
                                 std::span<const double> rho_ladder);

/// Same for max_i sup |phi_i(t, x1)| with |x1| <= delta.
GainScanTable gain_supremum_scan(const InjectionSpec& spec, double delta,
                                 std::span<const double> rho_ladder);

struct StabilityWitness {
  double delta = 0.0;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  double s = 0.0;
  std::optional<double> crossing_time;  ///< first t with ||x(t)|| > epsilon
  double crossing_norm = 0.0;
  double peak_time = 0.0;
  double peak_norm = 0.0;
  bool falsified = false;
  Trajectory trajectory;
};

/// Starts the noise-free loop at x(s) = delta e1 with s the witness time and
/// looks for ||x|| > epsilon before T - rho_min.
StabilityWitness falsify_uniform_stability(
    const SystemModel& model, double delta, double epsilon,
    std::optional<double> epsilon_prime, const IntegrationOptions& opts);

using NoiseFactory = std::function<std::unique_ptr<NoiseSource>()>;

struct WorkaroundCase {
  Vector xi;
  Vector residual;              ///< x(t_stop) (stop-time only)
  double residual_norm = 0.0;
  std::optional<double> entry_time;   ///< deadzone only
  double gain_at_entry = 0.0;
  bool no_entry = false;
  std::string failure;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double max_residual = 0.0;
};

struct WorkaroundReport {
  enum class Variant { StopTime, Deadzone };
  Variant variant = Variant::StopTime;
  double parameter = 0.0;  ///< t_stop or width
  std::vector<WorkaroundCase> cases;
  std::optional<LinearFit> fit;  ///< residual_norm against ||xi||, >= 3 cases
  bool any_no_entry = false;
  bool any_failure = false;
};

/// Ordinary least squares y = slope x + intercept with R^2.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

WorkaroundReport evaluate_stop_time(const SystemModel& model, double t_stop,
                                    std::span<const Vector> initial_conditions,
                                    const NoiseFactory& noise,
                                    const IntegrationOptions& opts);

/// Switches the algorithm off once ||x||_inf <= width and records the entry
/// time and the gain magnitude there.
WorkaroundReport evaluate_deadzone(const SystemModel& model, double width,
                                   std::span<const Vector> initial_conditions,
                                   const NoiseFactory& noise,
                                   const IntegrationOptions& opts);

}  // namespace ptrobust

#endif  // PTROBUST_ANALYSIS_HPP_
