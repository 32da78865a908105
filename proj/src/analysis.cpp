#include "ptrobust/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ptrobust/oracle.hpp"

namespace ptrobust {

namespace {

void check_ladder(std::span<const double> rho_ladder, double T) {
  if (rho_ladder.empty()) {
    throw std::invalid_argument("rho ladder must not be empty");
  }
  for (std::size_t i = 0; i < rho_ladder.size(); ++i) {
    if (!(rho_ladder[i] > 0.0 && rho_ladder[i] < T)) {
      throw std::invalid_argument("rho ladder entries must lie in (0, T)");
    }
    if (i > 0 && !(rho_ladder[i] < rho_ladder[i - 1])) {
      throw std::invalid_argument("rho ladder must be strictly decreasing");
    }
  }
}

// Time-to-go values tau in [rho, T], geometric, always containing rho and T.
std::vector<double> tau_grid(double rho, double T) {
  constexpr int kPoints = 2000;
  std::vector<double> taus;
  taus.reserve(kPoints + 1);
  for (int i = 0; i <= kPoints; ++i) {
    const double f = static_cast<double>(i) / kPoints;
    taus.push_back(T * std::pow(rho / T, f));
  }
  taus.back() = rho;
  return taus;
}

template <typename Score>
GainScanTable scan(double T, double delta, std::span<const double> rho_ladder,
                   const Score& score) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  check_ladder(rho_ladder, T);
  GainScanTable table;
  table.delta = delta;
  GainScanRow best;
  best.supremum = -1.0;
  // The smallest rho grid covers every larger rho; walking it from T down
  // keeps a running maximum so rows are monotone by construction.
  const auto taus = tau_grid(rho_ladder.back(), T);
  std::size_t next = 0;
  auto consider = [&](double tau) {
    GainScanRow row = score(tau);
    if (row.supremum > best.supremum) best = row;
  };
  for (double tau : taus) {
    while (next < rho_ladder.size() && tau < rho_ladder[next]) {
      consider(rho_ladder[next]);
      best.rho = rho_ladder[next];
      table.rows.push_back(best);
      ++next;
    }
    consider(tau);
  }
  while (next < rho_ladder.size()) {
    consider(rho_ladder[next]);
    best.rho = rho_ladder[next];
    table.rows.push_back(best);
    ++next;
  }
  return table;
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

DeadlineReport check_absolute_deadline(const SystemModel& model,
                                       std::span<const double> start_times,
                                       std::span<const Vector> initial_conditions,
                                       double rho, double tol,
                                       const IntegrationOptions& opts) {
  if (!(rho >= opts.rho_min && rho < model.T())) {
    throw std::invalid_argument("rho must lie in [rho_min, T)");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (start_times.empty() || initial_conditions.empty()) {
    throw std::invalid_argument("deadline grid must not be empty");
  }
  DeadlineReport report;
  report.rho = rho;
  report.tol = tol;
  report.pass = true;
  for (double s : start_times) {
    for (const Vector& xi : initial_conditions) {
      DeadlineCase c;
      c.s = s;
      c.xi = xi;
      c.threshold = tol * std::max(1.0, xi.norm());
      try {
        ZeroNoise noise(model.noise_dimension());
        const Trajectory traj = integrate(model, noise, xi, s, model.T() - rho, opts);
        if (!traj.reached_end()) {
          c.failure = traj.blow_up ? "blow-up" : "step underflow";
        } else {
          c.terminal_norm = terminal_state(traj, rho).norm();
          c.pass = c.terminal_norm <= c.threshold;
        }
      } catch (const std::exception& e) {
        c.failure = e.what();
      }
      if (!c.failure.empty()) {
        c.terminal_norm = std::nan("");
        c.pass = false;
      }
      report.pass = report.pass && c.pass;
      report.cases.push_back(std::move(c));
    }
  }
  return report;
}

ConvergenceOrder deadline_convergence_order(const SystemModel& model, double s,
                                            const Vector& xi,
                                            std::span<const double> rho_ladder,
                                            const IntegrationOptions& opts) {
  check_ladder(rho_ladder, model.T() - s);
  if (rho_ladder.size() < 2) {
    throw std::invalid_argument("convergence order needs at least two rho values");
  }
  ZeroNoise noise(model.noise_dimension());
  const Trajectory traj =
      integrate(model, noise, xi, s, model.T() - rho_ladder.back(), opts);
  if (!traj.reached_end()) {
    throw NumericalFailure("deadline run terminated early");
  }
  ConvergenceOrder order;
  std::vector<double> log_rho;
  std::vector<double> log_norm;
  for (double rho : rho_ladder) {
    const double norm = terminal_state(traj, rho).norm();
    order.rho.push_back(rho);
    order.terminal_norm.push_back(norm);
    log_rho.push_back(std::log(rho));
    log_norm.push_back(std::log(norm));
  }
  for (std::size_t i = 1; i < order.rho.size(); ++i) {
    order.pairwise_slope.push_back((log_norm[i - 1] - log_norm[i]) /
                                   (log_rho[i - 1] - log_rho[i]));
  }
  order.fitted_slope = fit_line(log_rho, log_norm).slope;
  return order;
}

GainScanTable gain_supremum_scan(const ControllerSpec& spec, double delta,
                                 std::span<const double> rho_ladder) {
  const int n = spec.dimension();
  auto score = [&](double tau) {
    GainScanRow row;
    row.t = spec.T - tau;
    row.arg = Vector(n);
    for (int i = 0; i < n; ++i) {
      const double g = spec.gains[static_cast<std::size_t>(i)].at_time_to_go(tau);
      row.arg(i) = delta * sign_of(g);
      row.supremum += delta * std::abs(g);
    }
    return row;
  };
  GainScanTable table = scan(spec.T, delta, rho_ladder, score);
  // Report the dominant pole among the gains.
  for (const auto& g : spec.gains) {
    if (g.pole_order() > table.pole_order ||
        (g.pole_order() == table.pole_order &&
         std::abs(g.leading_coefficient()) > std::abs(table.leading_coefficient))) {
      table.pole_order = g.pole_order();
      table.leading_coefficient = g.leading_coefficient();
    }
  }
  return table;
}

GainScanTable gain_supremum_scan(const InjectionSpec& spec, double delta,
                                 std::span<const double> rho_ladder) {
  const int n = spec.dimension();
  auto score = [&](double tau) {
    GainScanRow row;
    row.t = spec.T - tau;
    for (int i = 0; i < n; ++i) {
      const double g = spec.gains[static_cast<std::size_t>(i)].at_time_to_go(tau);
      const double v = delta * std::abs(g);
      if (v > row.supremum || i == 0) {
        row.supremum = v;
        row.channel = i + 1;
        row.arg = Vector::Constant(1, delta * sign_of(g));
      }
    }
    return row;
  };
  GainScanTable table = scan(spec.T, delta, rho_ladder, score);
  const auto& g = spec.gains[static_cast<std::size_t>(table.rows.back().channel - 1)];
  table.pole_order = g.pole_order();
  table.leading_coefficient = g.leading_coefficient();
  return table;
}

StabilityWitness falsify_uniform_stability(const SystemModel& model,
                                           double delta, double epsilon,
                                           std::optional<double> epsilon_prime,
                                           const IntegrationOptions& opts) {
  if (!model.is_control_loop()) {
    throw std::invalid_argument("stability falsification needs a control loop");
  }
  if (!(delta > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("delta and epsilon must be positive");
  }
  StabilityWitness w;
  w.delta = delta;
  w.epsilon = epsilon;
  w.epsilon_prime = epsilon_prime.value_or(default_epsilon_prime(delta, epsilon));
  w.s = stability_witness_time({delta, epsilon, w.epsilon_prime, model.T()});

  Vector x0 = Vector::Zero(model.dimension());
  x0(0) = delta;
  ZeroNoise noise(model.noise_dimension());
  w.trajectory = integrate(model, noise, x0, w.s, model.T() - opts.rho_min, opts);

  w.peak_time = w.s;
  w.peak_norm = delta;
  for (const auto& sample : w.trajectory.samples) {
    if (sample.x.norm() > w.peak_norm) {
      w.peak_norm = sample.x.norm();
      w.peak_time = sample.t;
    }
  }
  // Interior probes of each step catch a peak between step boundaries.
  for (const auto& seg : w.trajectory.segments) {
    constexpr int kProbes = 16;
    for (int i = 1; i < kProbes; ++i) {
      const double t = seg.t0 + seg.h * static_cast<double>(i) / kProbes;
      const double norm = seg.at(t).norm();
      if (norm > w.peak_norm) {
        w.peak_norm = norm;
        w.peak_time = t;
      }
    }
  }

  const double thresholds[] = {epsilon};
  const auto peaks = detect_peaks(w.trajectory, thresholds);
  if (peaks.front().time) {
    w.crossing_time = peaks.front().time;
    w.crossing_norm = w.trajectory.state_at(*w.crossing_time).norm();
  }
  w.falsified = w.crossing_time.has_value() && w.peak_norm > epsilon;
  return w;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("line fit needs two or more paired points");
  }
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = x[static_cast<std::size_t>(i)];
    a(i, 1) = 1.0;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd residual = b - a * coef;
  const double ss_res = residual.squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  LinearFit fit;
  fit.slope = coef(0);
  fit.intercept = coef(1);
  fit.max_residual = residual.lpNorm<Eigen::Infinity>();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

WorkaroundReport evaluate_stop_time(const SystemModel& model, double t_stop,
                                    std::span<const Vector> initial_conditions,
                                    const NoiseFactory& noise,
                                    const IntegrationOptions& opts) {
  if (!(t_stop > 0.0 && t_stop < model.T() - opts.rho_min)) {
    throw std::invalid_argument("t_stop must lie in (0, T - rho_min)");
  }
  WorkaroundReport report;
  report.variant = WorkaroundReport::Variant::StopTime;
  report.parameter = t_stop;
  std::vector<double> sizes;
  std::vector<double> norms;
  for (const Vector& xi : initial_conditions) {
    WorkaroundCase c;
    c.xi = xi;
    try {
      std::unique_ptr<NoiseSource> source =
          noise ? noise() : std::make_unique<ZeroNoise>(model.noise_dimension());
      const Trajectory traj = integrate(model, *source, xi, 0.0, t_stop, opts);
      if (!traj.reached_end()) {
        c.failure = traj.blow_up ? "blow-up" : "step underflow";
      } else {
        c.residual = traj.final_state();
        c.residual_norm = c.residual.norm();
        sizes.push_back(xi.norm());
        norms.push_back(c.residual_norm);
      }
    } catch (const std::exception& e) {
      c.failure = e.what();
    }
    report.any_failure = report.any_failure || !c.failure.empty();
    report.cases.push_back(std::move(c));
  }
  if (sizes.size() >= 3) report.fit = fit_line(sizes, norms);
  return report;
}

WorkaroundReport evaluate_deadzone(const SystemModel& model, double width,
                                   std::span<const Vector> initial_conditions,
                                   const NoiseFactory& noise,
                                   const IntegrationOptions& opts) {
  if (!(width > 0.0)) throw std::invalid_argument("deadzone width must be positive");
  WorkaroundReport report;
  report.variant = WorkaroundReport::Variant::Deadzone;
  report.parameter = width;
  IntegrationOptions dz = opts;
  dz.deadzone = width;
  for (const Vector& xi : initial_conditions) {
    WorkaroundCase c;
    c.xi = xi;
    try {
      std::unique_ptr<NoiseSource> source =
          noise ? noise() : std::make_unique<ZeroNoise>(model.noise_dimension());
      const Trajectory traj =
          integrate(model, *source, xi, 0.0, model.T() - opts.rho_min, dz);
      if (traj.switch_off_time) {
        c.entry_time = traj.switch_off_time;
        c.gain_at_entry = model.gain_magnitude(*traj.switch_off_time);
      } else if (traj.reached_end()) {
        c.no_entry = true;
      } else {
        c.failure = traj.blow_up ? "blow-up" : "step underflow";
        c.no_entry = true;
      }
      c.residual = traj.final_state();
      c.residual_norm = c.residual.norm();
    } catch (const std::exception& e) {
      c.failure = e.what();
    }
    report.any_no_entry = report.any_no_entry || c.no_entry;
    report.any_failure = report.any_failure || !c.failure.empty();
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace ptrobust
