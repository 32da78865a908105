#include "ptrobust/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptrobust {

namespace {

// Dormand-Prince 5(4) tableau and Hairer's dense-output weights.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0,
                 kA74 = 125.0 / 192.0, kA75 = -2187.0 / 6784.0,
                 kA76 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kD1 = -12715105075.0 / 11282082432.0,
                 kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0,
                 kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0,
                 kD7 = 69997945.0 / 29380423.0;

constexpr double kEventTimeTol = 1e-12;

struct StepAttempt {
  bool finite = false;
  double err = std::numeric_limits<double>::infinity();
  Vector y1;
  Vector k7;
  DenseSegment segment;
};

double inf_norm(const Vector& x) { return x.lpNorm<Eigen::Infinity>(); }

class Stepper {
 public:
  Stepper(const OdeProblem& problem, NoiseSource& noise,
          const IntegrationOptions& opts, Trajectory& traj)
      : problem_(problem), noise_(noise), opts_(opts), traj_(traj) {}

  bool switched_off = false;

  Vector eval(double t, const Vector& x) {
    const Vector eta = noise_.value(t);
    check_noise_bound(eta, noise_.bound());
    ++traj_.rhs_evaluations;
    if (switched_off) return problem_.switched_off_rhs(t, x);
    return problem_.rhs(t, x, eta);
  }

  double gain_output(double t, const Vector& x, const Vector& eta) const {
    if (switched_off || !problem_.gain_output) return 0.0;
    return problem_.gain_output(t, x, eta);
  }

  StepAttempt attempt(double t, const Vector& x, const Vector& k1, double h) {
    StepAttempt out;
    try {
      const Vector k2 = eval(t + kC2 * h, x + h * kA21 * k1);
      const Vector k3 = eval(t + kC3 * h, x + h * (kA31 * k1 + kA32 * k2));
      const Vector k4 =
          eval(t + kC4 * h, x + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
      const Vector k5 = eval(
          t + kC5 * h, x + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
      const Vector k6 =
          eval(t + h, x + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 +
                               kA65 * k5));
      out.y1 = x + h * (kA71 * k1 + kA73 * k3 + kA74 * k4 + kA75 * k5 +
                        kA76 * k6);
      out.k7 = eval(t + h, out.y1);
      const Vector err_vec = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 +
                                  kE6 * k6 + kE7 * out.k7);
      if (!out.y1.allFinite() || !err_vec.allFinite()) return out;

      double acc = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale =
            opts_.abs_tol +
            opts_.rel_tol * std::max(std::abs(x(i)), std::abs(out.y1(i)));
        const double r = err_vec(i) / scale;
        acc += r * r;
      }
      out.err = std::sqrt(acc / static_cast<double>(x.size()));
      out.finite = std::isfinite(out.err);

      out.segment.t0 = t;
      out.segment.h = h;
      out.segment.coeffs.resize(x.size(), 5);
      const Vector dy = out.y1 - x;
      const Vector bspl = h * k1 - dy;
      out.segment.coeffs.col(0) = x;
      out.segment.coeffs.col(1) = dy;
      out.segment.coeffs.col(2) = bspl;
      out.segment.coeffs.col(3) = dy - h * out.k7 - bspl;
      out.segment.coeffs.col(4) =
          h * (kD1 * k1 + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 +
               kD7 * out.k7);
    } catch (const NumericalFailure&) {
      out.finite = false;
    }
    return out;
  }

 private:
  const OdeProblem& problem_;
  NoiseSource& noise_;
  const IntegrationOptions& opts_;
  Trajectory& traj_;
};

std::vector<double> make_grid(const IntegrationOptions& opts, double T,
                              double t0, double t_end) {
  std::vector<double> grid;
  if (opts.grid == OutputGrid::StepBoundaries) return grid;
  const int n = opts.grid_count;
  grid.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    if (opts.grid == OutputGrid::Uniform) {
      grid.push_back(t0 + f * (t_end - t0));
    } else {
      const double tau0 = T - t0;
      const double tau1 = T - t_end;
      grid.push_back(T - tau0 * std::pow(tau1 / tau0, f));
    }
  }
  grid.front() = t0;
  grid.back() = t_end;
  return grid;
}

// First time in (0, 1] (as a fraction of the step) at which g <= 0, given
// g(0) > 0 and g(1) <= 0.
template <typename Guard>
double bisect_event(const DenseSegment& seg, Guard&& g) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && (hi - lo) * seg.h > kEventTimeTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(seg.t0 + mid * seg.h, seg.at(seg.t0 + mid * seg.h)) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

IntegrationOptions IntegrationOptions::for_horizon(const Horizon& horizon) {
  IntegrationOptions opts;
  opts.rho_min = horizon.rho_min;
  opts.initial_step = 1e-4 * horizon.T;
  opts.min_step = std::min(1e-14 * horizon.T, horizon.rho_min);
  return opts;
}

void IntegrationOptions::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("integration tolerances must be positive");
  }
  if (!(min_step > 0.0) || !(rho_min >= min_step)) {
    throw std::invalid_argument("require rho_min >= min_step > 0");
  }
  if (!(initial_step > 0.0)) {
    throw std::invalid_argument("initial_step must be positive");
  }
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("max_norm must be positive");
  }
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1)");
  }
  if (grid != OutputGrid::StepBoundaries && grid_count < 2) {
    throw std::invalid_argument("output grid needs at least 2 points");
  }
  if (deadzone && !(*deadzone > 0.0)) {
    throw std::invalid_argument("deadzone width must be positive");
  }
}

Vector DenseSegment::at(double t) const {
  const double theta = h > 0.0 ? (t - t0) / h : 0.0;
  const double theta1 = 1.0 - theta;
  return coeffs.col(0) +
         theta * (coeffs.col(1) +
                  theta1 * (coeffs.col(2) +
                            theta * (coeffs.col(3) + theta1 * coeffs.col(4))));
}

Vector Trajectory::state_at(double t) const {
  const double slack = 1e-14 * std::max(1.0, std::abs(T));
  if (t < t0 - slack || t > t_last + slack) {
    throw std::out_of_range("time outside the integrated range");
  }
  if (segments.empty()) return samples.front().x;
  auto it = std::upper_bound(
      segments.begin(), segments.end(), t,
      [](double value, const DenseSegment& seg) { return value < seg.t0; });
  if (it != segments.begin()) --it;
  return it->at(std::clamp(t, it->t0, it->t1()));
}

double Trajectory::max_state_norm() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.x.norm());
  return m;
}

double Trajectory::max_noise_norm() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.eta.norm());
  return m;
}

Trajectory integrate_ode(const OdeProblem& problem, NoiseSource& noise,
                         const Vector& x0, double t0, double t_end,
                         const IntegrationOptions& opts) {
  opts.validate();
  const double T = problem.T;
  if (!(t0 >= 0.0 && t0 < t_end)) {
    throw std::invalid_argument("invalid integration interval");
  }
  if (t_end > T - opts.rho_min * (1.0 - 1e-9)) {
    throw std::invalid_argument("t_end must not exceed T - rho_min");
  }
  if (!x0.allFinite()) {
    throw std::invalid_argument("initial state must be finite");
  }

  OdeProblem prob = problem;
  if (!prob.switched_off_rhs) {
    prob.switched_off_rhs = [&problem, &noise](double t, const Vector& x) {
      return problem.rhs(t, x, Vector::Zero(noise.dimension()));
    };
  }

  Trajectory traj;
  traj.T = T;
  traj.rho_min = opts.rho_min;
  traj.t0 = t0;
  traj.t_last = t0;
  traj.t_end = t_end;

  Stepper stepper(prob, noise, opts, traj);
  double t = t0;
  Vector x = x0;

  if (opts.deadzone && inf_norm(x) <= *opts.deadzone) {
    stepper.switched_off = true;
    traj.switch_off_time = t0;
  }
  if (noise.observe(t, x, false)) traj.switch_times.push_back(t);

  const std::vector<double> grid = make_grid(opts, T, t0, t_end);
  std::size_t grid_index = 0;

  auto record = [&](double ts, const Vector& xs) {
    Sample s;
    s.t = ts;
    s.x = xs;
    s.eta = noise.value(ts);
    check_noise_bound(s.eta, noise.bound());
    s.gain_output = stepper.gain_output(ts, xs, s.eta);
    traj.samples.push_back(std::move(s));
  };

  if (grid.empty()) {
    record(t, x);
  } else {
    record(grid[0], x);
    grid_index = 1;
  }

  auto blow_up_check = [&](double ts, const Vector& xs) {
    const double norm = xs.norm();
    if (norm >= opts.max_norm || !std::isfinite(norm)) {
      Eigen::Index channel = 0;
      xs.cwiseAbs().maxCoeff(&channel);
      traj.termination = Termination::BlowUp;
      traj.blow_up = BlowUpEvent{ts, norm, static_cast<int>(channel)};
      return true;
    }
    return false;
  };

  if (blow_up_check(t, x)) return traj;

  Vector k1;
  bool have_k1 = false;
  double h = std::min(opts.initial_step, t_end - t0);

  auto underflow = [&](double ts) {
    traj.termination = Termination::StepUnderflow;
    traj.underflow_time = ts;
  };

  while (t < t_end) {
    if (!have_k1) {
      try {
        k1 = stepper.eval(t, x);
      } catch (const NumericalFailure&) {
        underflow(t);
        break;
      }
      have_k1 = true;
    }

    double target = t_end;
    if (auto sw = noise.next_switch(t); sw && *sw > t) target = std::min(target, *sw);
    if (prob.next_breakpoint) {
      if (auto bp = prob.next_breakpoint(t); bp && *bp > t) target = std::min(target, *bp);
    }
    const double geometric_cap = opts.kappa * (T - t);

    double h_step = std::min(h, geometric_cap);
    double t_new = t + h_step;
    bool lands_on_target = false;
    if (t_new >= target - 1e-15 * std::max(1.0, std::abs(target))) {
      t_new = target;
      h_step = target - t;
      lands_on_target = true;
    }
    if (!(t_new > t)) {
      underflow(t);
      break;
    }

    StepAttempt step = stepper.attempt(t, x, k1, h_step);
    if (!step.finite || step.err > 1.0) {
      ++traj.rejected_steps;
      const double fac =
          step.finite ? std::max(0.2, 0.9 * std::pow(step.err, -0.2)) : 0.25;
      h = h_step * fac;
      if (h < opts.min_step) {
        underflow(t);
        break;
      }
      continue;
    }

    // Zero crossings of the deadzone and noise guards within the step.
    bool deadzone_fired = false;
    bool guard_fired = false;
    {
      std::optional<double> event_theta;
      bool event_is_deadzone = false;
      if (opts.deadzone && !stepper.switched_off) {
        const double width = *opts.deadzone;
        auto g = [width](double, const Vector& xs) { return inf_norm(xs) - width; };
        if (g(t, x) > 0.0 && g(t_new, step.y1) <= 0.0) {
          event_theta = bisect_event(step.segment, g);
          event_is_deadzone = true;
        }
      }
      const auto g0 = noise.guard(t, x);
      const auto g1 = noise.guard(t_new, step.y1);
      if (g0 && g1 && *g0 > 0.0 && *g1 <= 0.0) {
        const double theta = bisect_event(step.segment, [&noise](double ts, const Vector& xs) {
          return noise.guard(ts, xs).value_or(1.0);
        });
        if (!event_theta || theta < *event_theta) {
          event_theta = theta;
          event_is_deadzone = false;
        }
      }
      if (event_theta) {
        if (*event_theta < 1.0) {
          const double h_event = *event_theta * h_step;
          StepAttempt redo = stepper.attempt(t, x, k1, h_event);
          if (redo.finite) {
            step = std::move(redo);
            h_step = h_event;
            t_new = t + h_event;
            lands_on_target = false;
          }
        }
        deadzone_fired = event_is_deadzone;
        guard_fired = !event_is_deadzone;
      }
    }

    ++traj.accepted_steps;
    traj.segments.push_back(step.segment);

    if (!grid.empty()) {
      while (grid_index < grid.size() && grid[grid_index] <= t_new) {
        const double tg = grid[grid_index];
        record(tg, tg == t_new ? step.y1 : step.segment.at(tg));
        ++grid_index;
      }
    }

    const bool reached_breakpoint = lands_on_target && t_new < t_end;
    t = t_new;
    x = step.y1;
    k1 = step.k7;
    traj.t_last = t;

    if (deadzone_fired) {
      stepper.switched_off = true;
      traj.switch_off_time = t;
      have_k1 = false;
    }
    if (noise.observe(t, x, guard_fired)) {
      traj.switch_times.push_back(t);
      have_k1 = false;
    }
    if (reached_breakpoint) have_k1 = false;

    if (grid.empty()) record(t, x);
    if (blow_up_check(t, x)) break;

    const double fac =
        step.err > 0.0 ? std::clamp(0.9 * std::pow(step.err, -0.2), 0.2, 10.0)
                       : 10.0;
    const double proposal = h_step * fac;
    // A step shortened to hit a target says nothing about the next one.
    h = lands_on_target ? std::max(h, proposal) : proposal;
    if (h < opts.min_step) {
      underflow(t);
      break;
    }
  }
  return traj;
}

Trajectory integrate(const SystemModel& model, NoiseSource& noise,
                     const Vector& x0, double t0, double t_end,
                     const IntegrationOptions& opts) {
  if (noise.dimension() != model.noise_dimension()) {
    throw std::invalid_argument("noise shape does not match the model variant");
  }
  if (x0.size() != model.dimension()) {
    throw std::invalid_argument("initial state dimension mismatch");
  }
  OdeProblem problem;
  problem.T = model.T();
  problem.rhs = [&model](double t, const Vector& x, const Vector& eta) {
    return model.rhs(t, x, eta);
  };
  problem.switched_off_rhs = [&model](double t, const Vector& x) {
    return model.switched_off_rhs(t, x);
  };
  problem.gain_output = [&model](double t, const Vector& x, const Vector& eta) {
    return model.gain_output(t, x, eta);
  };
  if (!model.disturbance().is_zero()) {
    problem.next_breakpoint = [&model](double t) {
      return model.disturbance().next_breakpoint(t);
    };
  }
  return integrate_ode(problem, noise, x0, t0, t_end, opts);
}

Vector terminal_state(const Trajectory& traj, double rho) {
  if (rho < traj.rho_min * (1.0 - 1e-9)) {
    throw std::invalid_argument("rho below rho_min");
  }
  if (!traj.reached_end()) {
    throw std::runtime_error("trajectory terminated early");
  }
  const double t = traj.T - rho;
  if (t < traj.t0 || t > traj.t_last + 1e-14 * std::max(1.0, traj.T)) {
    throw std::out_of_range("T - rho outside the sampled range");
  }
  return traj.state_at(std::min(t, traj.t_last));
}

std::vector<PeakCrossing> detect_peaks(const Trajectory& traj,
                                       std::span<const double> thresholds) {
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("thresholds must be strictly increasing");
    }
  }
  std::vector<PeakCrossing> out;
  for (double thr : thresholds) out.push_back({thr, std::nullopt});
  if (out.empty() || traj.samples.empty()) return out;

  std::size_t next = 0;
  const double n0 = traj.samples.front().x.norm();
  while (next < out.size() && n0 >= out[next].threshold) {
    out[next++].time = traj.t0;
  }

  constexpr int kProbes = 5;
  for (const auto& seg : traj.segments) {
    if (next == out.size()) break;
    double a = seg.t0;
    for (int p = 1; p <= kProbes && next < out.size(); ++p) {
      const double b = seg.t0 + seg.h * static_cast<double>(p) / kProbes;
      const double nb = seg.at(b).norm();
      while (next < out.size() && nb >= out[next].threshold) {
        const double thr = out[next].threshold;
        double lo = a;
        double hi = b;
        while (hi - lo > kEventTimeTol) {
          const double mid = 0.5 * (lo + hi);
          if (seg.at(mid).norm() >= thr) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        out[next++].time = hi;
      }
      a = b;
    }
  }
  return out;
}

}  // namespace ptrobust
