#include "ptrobust/attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "ptrobust/oracle.hpp"

namespace ptrobust {

namespace {

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

std::vector<double> target_sequence(const ScheduleParams& p, double eta_bar) {
  std::vector<double> eps;
  const double e0 = p.resolved_eps0(eta_bar);
  for (int k = 0; k <= p.k_max; ++k) {
    eps.push_back(e0 * std::pow(p.growth, k));
  }
  return eps;
}

// Geometric sample of t in [s, T - rho_min], dense near T.
std::vector<double> probe_times(double s, double T, double rho_min) {
  constexpr int kProbes = 400;
  std::vector<double> ts;
  const double tau0 = T - s;
  const double tau1 = std::min(rho_min, tau0);
  for (int i = 0; i <= kProbes; ++i) {
    const double f = static_cast<double>(i) / kProbes;
    ts.push_back(T - tau0 * std::pow(tau1 / tau0, f));
  }
  return ts;
}

// Collected coefficients of Psi_{n+1}(tau) = sum_i g_i(tau) xi'_i + g_n(tau) (-2 eps)
// by power of tau.
std::map<int, double> forcing_table(const ControllerSpec& controller,
                                    const Vector& profile, double epsilon) {
  std::map<int, double> table;
  const int n = controller.dimension();
  for (int i = 0; i + 1 < n; ++i) {
    for (const auto& term : controller.gains[static_cast<std::size_t>(i)].terms()) {
      table[1 - term.order] += term.coeff * profile(i);
    }
  }
  for (const auto& term : controller.gains.back().terms()) {
    table[-term.order] += term.coeff * (-2.0 * epsilon);
  }
  return table;
}

bool forcing_vanishes(const ControllerSpec& controller, const Vector& profile,
                      double epsilon) {
  for (const auto& [power, coeff] : forcing_table(controller, profile, epsilon)) {
    (void)power;
    if (std::abs(coeff) > 1e-13 * std::max(1.0, epsilon)) return false;
  }
  return true;
}

double supremum_forcing_bound(const ControllerTerminalErrorNoise& noise, double s,
                              double T, double rho_min) {
  double sup = 0.0;
  for (double t : probe_times(s, T, rho_min)) {
    sup = std::max(sup, std::abs(noise.forcing(t)));
  }
  return (T - s) * sup;
}

}  // namespace

double ScheduleParams::resolved_eps0(double eta_bar) const {
  return eps0 > 0.0 ? eps0 : std::max(1.0, eta_bar);
}

double ScheduleParams::resolved_delta(double eta_bar) const {
  return delta > 0.0 ? delta : 0.5 * eta_bar;
}

void ScheduleParams::validate(double eta_bar) const {
  if (!(eta_bar > 0.0)) {
    throw std::invalid_argument("eta_bar must be positive");
  }
  if (!(growth > 1.0)) {
    throw std::invalid_argument("target growth must exceed 1");
  }
  if (k_max < 1) {
    throw std::invalid_argument("k_max must be >= 1");
  }
  if (!(placement > 0.0 && placement < 1.0)) {
    throw std::invalid_argument("placement must lie in (0, 1)");
  }
  if (!(closeness > 0.0)) {
    throw std::invalid_argument("closeness must be positive");
  }
  const double d = resolved_delta(eta_bar);
  if (!(d > 0.0 && d <= eta_bar)) {
    throw std::invalid_argument("delta must lie in (0, eta_bar]");
  }
}

// ---------------------------------------------------------------------------

ControllerDivergenceNoise::ControllerDivergenceNoise(double eta_bar, int n,
                                                     double T,
                                                     ScheduleParams params)
    : eta_bar_(eta_bar), n_(n), T_(T), params_(params) {
  params_.validate(eta_bar);
  if (n < 2) throw std::invalid_argument("noise dimension must be >= 2");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  schedule_.delta = params_.resolved_delta(eta_bar);
  schedule_.epsilon_k = target_sequence(params_, eta_bar);
}

double ControllerDivergenceNoise::witness_time(int k) const {
  const double eps = schedule_.epsilon_k.at(static_cast<std::size_t>(k));
  WitnessQuery q{schedule_.delta, eps, eps + eta_bar_, T_};
  if (q.T - q.delta / q.epsilon_prime < 0.0) return 0.0;
  return stability_witness_time(q);
}

Vector ControllerDivergenceNoise::value(double) const {
  Vector eta = Vector::Zero(n_);
  eta(0) = sign_ * schedule_.delta;
  return eta;
}

std::optional<double> ControllerDivergenceNoise::next_switch(double t) const {
  if (pending_ && *pending_ > t) return pending_;
  return std::nullopt;
}

void ControllerDivergenceNoise::schedule_next(double lower) {
  const double t_next = lower + params_.placement * (T_ - lower);
  if (!(t_next > lower) || !(t_next < T_)) {
    throw InfeasibleError("switching instant collapsed onto T");
  }
  if (!schedule_.t_k.empty() && !(t_next > schedule_.t_k.back())) {
    throw InfeasibleError("switching instants must increase strictly");
  }
  pending_ = t_next;
}

bool ControllerDivergenceNoise::observe(double t, const Vector& x, bool) {
  if (k_ < 0) {
    k_ = 0;
    sign_ = sign_of(x(0));
    schedule_.t_k.push_back(t);
    schedule_.t_prime.push_back(t);
    const double eps1 = schedule_.epsilon_k[1];
    schedule_next(std::max({witness_time(1), t, T_ - 1.0 / eps1}));
    return false;
  }
  if (pending_ && t >= *pending_) {
    ++k_;
    sign_ = sign_of(x(0));
    schedule_.t_k.push_back(t);
    pending_.reset();
    awaiting_crossing_ = true;
    return true;
  }
  const auto k = static_cast<std::size_t>(k_);
  if (awaiting_crossing_ && x.norm() > schedule_.epsilon_k[k]) {
    awaiting_crossing_ = false;
    schedule_.t_prime.push_back(t);
    if (k_ < params_.k_max) {
      const double eps_next = schedule_.epsilon_k[k + 1];
      schedule_next(std::max({witness_time(k_ + 1), schedule_.t_k.back(), t,
                              T_ - 1.0 / eps_next}));
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

double terminal_error_window_start(double eta_bar, double epsilon, int n,
                                   double T) {
  if (!(eta_bar > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("eta_bar and epsilon must be positive");
  }
  const double eta_prime = eta_bar / std::sqrt(static_cast<double>(n));
  return std::max(T - eta_prime / (12.0 * epsilon), T - 0.5);
}

PsiCascade default_cascade(const ControllerSpec& controller, double eta_bar,
                           double epsilon, std::optional<Vector> profile) {
  const int n = controller.dimension();
  const double T = controller.T;
  const double eta_prime = eta_bar / std::sqrt(static_cast<double>(n));

  PsiCascade cascade;
  cascade.epsilon = epsilon;
  cascade.psi_init = Vector::Zero(n - 1);
  if (profile) {
    if (profile->size() != n - 1) {
      throw std::invalid_argument("profile must have n - 1 entries");
    }
    cascade.profile = *profile;
  } else {
    cascade.profile = Vector::Zero(n - 1);
    // Cancel the leading pole of g_n(-2 eps) with the first coordinate when
    // the pole orders line up; exact for the example controller.
    const auto& g1 = controller.gains.front();
    const auto& gn = controller.gains.back();
    if (!gn.is_zero() && !g1.is_zero() && g1.pole_order() - 1 == gn.pole_order()) {
      cascade.profile(0) = 2.0 * epsilon * gn.leading_coefficient() /
                           g1.leading_coefficient();
    }
  }

  double lower = terminal_error_window_start(eta_bar, epsilon, n, T);
  const double c_inf = cascade.profile.lpNorm<Eigen::Infinity>();
  if (c_inf > 0.0) lower = std::max(lower, T - eta_prime / (2.0 * c_inf));

  double s = lower + 0.5 * (T - lower);
  for (int attempt = 0; attempt < 40; ++attempt) {
    cascade.s = s;
    PsiCascade probe = cascade;
    // Forcing only depends on the profile; probe it without building Psi.
    ControllerSpec c = controller;
    auto forcing = [&](double t) {
      Vector arg(n);
      arg.head(n - 1) = probe.profile * (T - t);
      arg(n - 1) = -2.0 * epsilon;
      return c.evaluate(t, arg);
    };
    double sup = 0.0;
    for (double t : probe_times(s, T, 1e-9 * T)) {
      sup = std::max(sup, std::abs(forcing(t)));
    }
    if ((T - s) * sup <= std::min(2.0 * epsilon, eta_prime)) return cascade;
    s = s + 0.5 * (T - s);
  }
  throw InfeasibleError("controller is unbounded along the terminal-error profile");
}

ControllerTerminalErrorNoise::ControllerTerminalErrorNoise(
    ControllerSpec controller, double eta_bar, PsiCascade cascade,
    double rho_min)
    : controller_(std::move(controller)),
      eta_bar_(eta_bar),
      cascade_(std::move(cascade)),
      n_(controller_.dimension()) {
  const double T = controller_.T;
  const double eps = cascade_.epsilon;
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (cascade_.profile.size() != n_ - 1 || cascade_.psi_init.size() != n_ - 1) {
    throw std::invalid_argument("cascade vectors must have n - 1 entries");
  }
  const double window = terminal_error_window_start(eta_bar, eps, n_, T);
  if (!(cascade_.s > window && cascade_.s < T)) {
    throw InfeasibleError("cascade start s outside the feasibility window");
  }
  const double eta_prime = eta_bar / std::sqrt(static_cast<double>(n_));
  if (cascade_.psi_init.lpNorm<Eigen::Infinity>() > eta_prime / 4.0) {
    throw InfeasibleError("initial Psi_i must satisfy |Psi_i(s)| <= eta_bar'/4");
  }
  if (cascade_.profile.lpNorm<Eigen::Infinity>() * (T - cascade_.s) >
      eta_prime / 2.0) {
    throw InfeasibleError("profile exceeds eta_bar'/2 on [s, T)");
  }

  closed_form_ = forcing_vanishes(controller_, cascade_.profile, eps);
  if (!closed_form_) {
    if (supremum_forcing_bound(*this, cascade_.s, T, rho_min) >
        std::min(2.0 * eps, eta_prime)) {
      throw InfeasibleError("controller is unbounded along the profile");
    }
    OdeProblem cascade_ode;
    cascade_ode.T = T;
    cascade_ode.rhs = [this](double t, const Vector& y, const Vector&) {
      Vector dy(n_);
      dy.head(n_ - 1) = y.tail(n_ - 1);
      dy(n_ - 1) = forcing(t);
      return dy;
    };
    IntegrationOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-12;
    opts.rho_min = rho_min;
    opts.min_step = std::min(1e-16, rho_min);
    opts.initial_step = 1e-6 * (T - cascade_.s);
    Vector y0(n_);
    y0.head(n_ - 1) = cascade_.psi_init;
    y0(n_ - 1) = cascade_.resolved_psi_n_start();
    ZeroNoise none(1);
    numeric_psi_ = integrate_ode(cascade_ode, none, y0, cascade_.s, T - rho_min, opts);
    if (!numeric_psi_->reached_end()) {
      throw InfeasibleError("Psi cascade integration failed");
    }
  }
}

double ControllerTerminalErrorNoise::forcing(double t) const {
  Vector arg(n_);
  arg.head(n_ - 1) = cascade_.profile * (controller_.T - t);
  arg(n_ - 1) = -2.0 * cascade_.epsilon;
  return controller_.evaluate(t, arg);
}

Vector ControllerTerminalErrorNoise::psi(double t) const {
  if (!closed_form_) return numeric_psi_->state_at(t);
  // Psi_{n+1} == 0, so the cascade is a Taylor polynomial around s.
  Vector start(n_);
  start.head(n_ - 1) = cascade_.psi_init;
  start(n_ - 1) = cascade_.resolved_psi_n_start();
  const double dt = t - cascade_.s;
  Vector out = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    double term = 1.0;
    for (int j = 0; i + j < n_; ++j) {
      if (j > 0) term *= dt / static_cast<double>(j);
      out(i) += start(i + j) * term;
    }
  }
  return out;
}

Vector ControllerTerminalErrorNoise::value(double t) const {
  Vector eta(n_);
  eta.head(n_ - 1) = cascade_.profile * (controller_.T - t);
  eta(n_ - 1) = -2.0 * cascade_.epsilon;
  return eta - psi(t);
}

// ---------------------------------------------------------------------------

SteeredTerminalErrorNoise::SteeredTerminalErrorNoise(ControllerSpec controller,
                                                     double eta_bar,
                                                     double epsilon, double s0,
                                                     double rho_min)
    : controller_(std::move(controller)),
      eta_bar_(eta_bar),
      epsilon_(epsilon),
      s0_(s0),
      rho_min_(rho_min),
      n_(controller_.dimension()) {
  if (!(s0 > 0.0 && s0 < controller_.T)) {
    throw std::invalid_argument("release time s0 must lie in (0, T)");
  }
}

Vector SteeredTerminalErrorNoise::value(double t) const {
  switch (phase_) {
    case Phase::Constant: {
      Vector eta = Vector::Zero(n_);
      eta(n_ - 2) = -eta_bar_ / 8.0;
      return eta;
    }
    case Phase::Cascade:
      return cascade_->value(t);
    case Phase::Released:
    case Phase::Failed:
      break;
  }
  return Vector::Zero(n_);
}

std::optional<double> SteeredTerminalErrorNoise::next_switch(double t) const {
  if (phase_ == Phase::Constant && t < s0_) return s0_;
  return std::nullopt;
}

std::optional<double> SteeredTerminalErrorNoise::guard(double,
                                                       const Vector& x) const {
  if (phase_ != Phase::Released) return std::nullopt;
  return x(n_ - 1) + 2.0 * epsilon_;
}

bool SteeredTerminalErrorNoise::observe(double t, const Vector& x,
                                        bool guard_fired) {
  if (phase_ == Phase::Constant && t >= s0_) {
    phase_ = Phase::Released;
    return true;
  }
  if (phase_ == Phase::Released && (guard_fired || x(n_ - 1) <= -2.0 * epsilon_)) {
    s_ = t;
    PsiCascade cascade;
    cascade.s = t;
    cascade.epsilon = epsilon_;
    cascade.psi_init = x.head(n_ - 1);
    cascade.psi_n_start = x(n_ - 1);
    try {
      cascade.profile = default_cascade(controller_, eta_bar_, epsilon_).profile;
      cascade_.emplace(controller_, eta_bar_, cascade, rho_min_);
      phase_ = Phase::Cascade;
    } catch (const InfeasibleError&) {
      infeasible_ = true;
      phase_ = Phase::Failed;
    }
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

DifferentiatorDivergenceNoise::DifferentiatorDivergenceNoise(double eta_bar,
                                                             double T,
                                                             ScheduleParams params)
    : eta_bar_(eta_bar), T_(T), params_(params) {
  params_.validate(eta_bar);
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  schedule_.epsilon_k = target_sequence(params_, eta_bar);
}

Vector DifferentiatorDivergenceNoise::value(double t) const {
  if (k_ < 0) return Vector::Constant(1, eta_bar_);
  const double target = eta_bar_ * sign_of(eta_k_);
  return Vector::Constant(1, eta_k_ - (target + eta_k_) * (t - t_k_) / (T_ - t_k_));
}

double DifferentiatorDivergenceNoise::slope() const {
  const double eta_k = k_ < 0 ? eta_bar_ : eta_k_;
  const double t_k = k_ < 0 ? 0.0 : t_k_;
  return -(eta_bar_ * sign_of(eta_k) + eta_k) / (T_ - t_k);
}

bool DifferentiatorDivergenceNoise::observe(double t, const Vector& x, bool) {
  if (k_ < 0) {
    k_ = 0;
    t_k_ = t;
    eta_k_ = eta_bar_;
    schedule_.t_k.push_back(t);
    return false;
  }
  const auto k = static_cast<std::size_t>(k_);
  if (schedule_.t_prime.size() < k + 1 && x.norm() > schedule_.epsilon_k[k]) {
    schedule_.t_prime.push_back(t);
  }
  if (k_ >= params_.k_max) return false;

  const double eta_now = value(t)(0);
  const double rate = slope();
  const bool settled = std::abs(x(1) + rate) <= params_.closeness * std::abs(rate);
  const bool late_enough = t > T_ - 1.0 / schedule_.epsilon_k[k];
  const bool steep_enough =
      (eta_bar_ + std::abs(eta_now)) / (T_ - t) > schedule_.epsilon_k[k + 1];
  if (!(settled && late_enough && steep_enough)) return false;

  ++k_;
  t_k_ = t;
  eta_k_ = eta_now;
  schedule_.t_k.push_back(t);
  return true;
}

// ---------------------------------------------------------------------------

DifferentiatorTerminalErrorNoise::DifferentiatorTerminalErrorNoise(double eta_bar,
                                                                   double epsilon,
                                                                   double T)
    : eta_bar_(eta_bar), epsilon_(epsilon), T_(T) {
  if (!(eta_bar > 0.0) || !(epsilon > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("eta_bar, epsilon and T must be positive");
  }
  s_ = T - 2.0 * eta_bar / epsilon;
  if (!(s_ > 0.0)) {
    throw InfeasibleError("ramp start T - 2 eta_bar / epsilon must be positive");
  }
}

Vector DifferentiatorTerminalErrorNoise::value(double t) const {
  if (t < s_) return Vector::Constant(1, -eta_bar_);
  // Clamp round-off at the very end of the ramp.
  const double v = std::min(eta_bar_, -eta_bar_ + (t - s_) * epsilon_);
  return Vector::Constant(1, v);
}

std::optional<double> DifferentiatorTerminalErrorNoise::next_switch(double t) const {
  if (t < s_) return s_;
  return std::nullopt;
}

bool DifferentiatorTerminalErrorNoise::observe(double t, const Vector&, bool) {
  if (passed_ || t < s_) return false;
  const bool first_call_after = t == s_;
  passed_ = true;
  return first_call_after;
}

// ---------------------------------------------------------------------------

bool ladder_crossed(const std::vector<PeakCrossing>& peaks, double T) {
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& p : peaks) {
    if (!p.time || !(*p.time > prev) || !(*p.time < T)) return false;
    prev = *p.time;
  }
  return !peaks.empty();
}

namespace {

std::string describe_peaks(const std::vector<PeakCrossing>& peaks) {
  std::string out;
  for (const auto& p : peaks) {
    if (!out.empty()) out += "; ";
    out += std::to_string(p.threshold) + "@" +
           (p.time ? std::to_string(*p.time) : std::string("none"));
  }
  return out;
}

}  // namespace

AttackOutcome run_controller_divergence(const SystemModel& model,
                                        double eta_bar,
                                        const ScheduleParams& params,
                                        const Vector& x0,
                                        std::span<const double> ladder,
                                        const IntegrationOptions& opts) {
  if (!model.is_control_loop()) {
    throw std::invalid_argument("controller attack requires a control loop");
  }
  ControllerDivergenceNoise noise(eta_bar, model.dimension(), model.T(), params);
  AttackOutcome out;
  out.name = "thm1i";
  out.noise_bound_used = eta_bar;
  out.trajectory = integrate(model, noise, x0, 0.0, model.T() - opts.rho_min, opts);
  out.schedule = noise.schedule();
  out.max_noise_norm = out.trajectory.max_noise_norm();
  out.peaks = detect_peaks(out.trajectory, ladder);
  out.verdict = ladder_crossed(out.peaks, model.T()) && out.max_noise_norm <= eta_bar;
  out.detail = describe_peaks(out.peaks);
  return out;
}

AttackOutcome run_controller_terminal_error(const SystemModel& model,
                                            double eta_bar,
                                            const PsiCascade& cascade,
                                            double rho,
                                            const IntegrationOptions& opts) {
  if (!model.is_control_loop()) {
    throw std::invalid_argument("controller attack requires a control loop");
  }
  ControllerTerminalErrorNoise noise(model.loop().controller, eta_bar, cascade,
                                     opts.rho_min);
  AttackOutcome out;
  out.name = "thm1ii";
  out.noise_bound_used = eta_bar;
  out.start_time = cascade.s;
  out.terminal_rho = rho;
  const Vector xs = noise.psi(cascade.s);
  out.trajectory = integrate(model, noise, xs, cascade.s, model.T() - rho, opts);
  out.max_noise_norm = out.trajectory.max_noise_norm();
  double tracking = 0.0;
  for (const auto& sample : out.trajectory.samples) {
    tracking = std::max(tracking,
                        (sample.x - noise.psi(sample.t)).lpNorm<Eigen::Infinity>());
  }
  out.tracking_error = tracking;
  if (out.trajectory.reached_end()) {
    out.terminal = terminal_state(out.trajectory, rho);
  }
  out.verdict = out.terminal && out.terminal->norm() >= cascade.epsilon &&
                tracking <= 1e-6 && out.max_noise_norm <= eta_bar;
  out.detail = "s=" + std::to_string(cascade.s) +
               " tracking=" + std::to_string(tracking) + " terminal_norm=" +
               (out.terminal ? std::to_string(out.terminal->norm()) : "n/a");
  return out;
}

AttackOutcome run_controller_terminal_error_steered(
    const SystemModel& model, double eta_bar, double epsilon, const Vector& x0,
    double rho, const IntegrationOptions& opts) {
  if (!model.is_control_loop()) {
    throw std::invalid_argument("controller attack requires a control loop");
  }
  const double T = model.T();
  const double window =
      terminal_error_window_start(eta_bar, epsilon, model.dimension(), T);
  AttackOutcome out;
  out.name = "thm1ii-steered";
  out.noise_bound_used = eta_bar;
  out.terminal_rho = rho;
  double fraction = 0.5;
  for (int attempt = 0; attempt < 16; ++attempt, fraction *= 0.5) {
    const double s0 = T - fraction * (T - window);
    SteeredTerminalErrorNoise noise(model.loop().controller, eta_bar, epsilon, s0,
                                    opts.rho_min);
    Trajectory traj = integrate(model, noise, x0, 0.0, T - rho, opts);
    if (!noise.start_time() || noise.infeasible() || !traj.reached_end()) continue;

    out.trajectory = std::move(traj);
    out.start_time = noise.start_time();
    out.schedule.t_k = {0.0, s0, *noise.start_time()};
    out.max_noise_norm = out.trajectory.max_noise_norm();
    double tracking = 0.0;
    for (const auto& sample : out.trajectory.samples) {
      if (sample.t < *out.start_time) continue;
      tracking = std::max(tracking, (sample.x - noise.cascade_noise()->psi(sample.t))
                                        .lpNorm<Eigen::Infinity>());
    }
    out.tracking_error = tracking;
    out.terminal = terminal_state(out.trajectory, rho);
    out.verdict = out.terminal->norm() >= epsilon && out.max_noise_norm <= eta_bar;
    out.detail = "s0=" + std::to_string(s0) + " s=" + std::to_string(*out.start_time) +
                 " terminal_norm=" + std::to_string(out.terminal->norm());
    return out;
  }
  out.verdict = false;
  out.detail = "no release time s0 produced a feasible start state";
  return out;
}

AttackOutcome run_differentiator_divergence(const SystemModel& model,
                                            double eta_bar,
                                            const ScheduleParams& params,
                                            const Vector& x0,
                                            std::span<const double> ladder,
                                            const IntegrationOptions& opts) {
  if (model.is_control_loop()) {
    throw std::invalid_argument("differentiator attack requires an error system");
  }
  DifferentiatorDivergenceNoise noise(eta_bar, model.T(), params);
  AttackOutcome out;
  out.name = "thm2i";
  out.noise_bound_used = eta_bar;
  out.trajectory = integrate(model, noise, x0, 0.0, model.T() - opts.rho_min, opts);
  out.schedule = noise.schedule();
  out.max_noise_norm = out.trajectory.max_noise_norm();
  out.peaks = detect_peaks(out.trajectory, ladder);
  out.verdict = ladder_crossed(out.peaks, model.T()) && out.max_noise_norm <= eta_bar;
  out.detail = describe_peaks(out.peaks);
  if (!noise.schedule_complete()) {
    out.detail += " (schedule stopped before k_max)";
  }
  return out;
}

AttackOutcome run_differentiator_terminal_error(const SystemModel& model,
                                                double eta_bar, double epsilon,
                                                const Vector& x0, double rho,
                                                const IntegrationOptions& opts) {
  if (model.is_control_loop()) {
    throw std::invalid_argument("differentiator attack requires an error system");
  }
  DifferentiatorTerminalErrorNoise noise(eta_bar, epsilon, model.T());
  AttackOutcome out;
  out.name = "thm2ii";
  out.noise_bound_used = eta_bar;
  out.start_time = noise.ramp_start();
  out.schedule.t_k = {0.0, noise.ramp_start()};
  out.terminal_rho = rho;
  out.trajectory = integrate(model, noise, x0, 0.0, model.T() - rho, opts);
  out.max_noise_norm = out.trajectory.max_noise_norm();
  if (out.trajectory.reached_end()) {
    out.terminal = terminal_state(out.trajectory, rho);
  }
  const double x2 = out.terminal ? (*out.terminal)(1) : std::nan("");
  out.verdict = out.terminal && std::abs(x2 + epsilon) <= 1e-3 * epsilon &&
                out.max_noise_norm <= eta_bar;
  out.detail = "s=" + std::to_string(noise.ramp_start()) +
               " terminal_x2=" + std::to_string(x2);
  return out;
}

}  // namespace ptrobust
