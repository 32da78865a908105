#include "ptrobust/core.hpp"

#include <algorithm>
#include <limits>

namespace ptrobust {

Horizon::Horizon(double deadline, double min_distance)
    : T(deadline), rho_min(min_distance) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("horizon T must be positive and finite");
  }
  if (!(rho_min > 0.0 && rho_min < T)) {
    throw std::invalid_argument("rho_min must lie in (0, T)");
  }
}

RationalGain::RationalGain(std::vector<PoleTerm> terms)
    : terms_(std::move(terms)) {
  for (const auto& term : terms_) {
    if (term.order < 0) {
      throw std::invalid_argument("pole order must be nonnegative");
    }
    if (!std::isfinite(term.coeff)) {
      throw std::invalid_argument("gain coefficient must be finite");
    }
  }
}

int RationalGain::pole_order() const {
  // Terms may repeat an order; only the summed coefficient counts.
  int order = -1;
  for (const auto& term : terms_) {
    if (term.order > order) {
      double c = 0.0;
      for (const auto& other : terms_) {
        if (other.order == term.order) c += other.coeff;
      }
      if (c != 0.0) order = term.order;
    }
  }
  return order;
}

double RationalGain::leading_coefficient() const {
  const int order = pole_order();
  double c = 0.0;
  for (const auto& term : terms_) {
    if (term.order == order) c += term.coeff;
  }
  return c;
}

ControllerSpec ControllerSpec::example_eq4() {
  ControllerSpec spec;
  spec.kind = Kind::ExampleEq4;
  spec.T = 1.0;
  spec.gains = {RationalGain({{-6.0, 2}}), RationalGain({{-4.0, 1}})};
  return spec;
}

ControllerSpec ControllerSpec::rational(double T, std::vector<RationalGain> gains) {
  if (gains.size() < 2) {
    throw std::invalid_argument("controller needs n >= 2 gains");
  }
  ControllerSpec spec;
  spec.kind = Kind::RationalTvg;
  spec.T = T;
  spec.gains = std::move(gains);
  return spec;
}

ControllerSpec ControllerSpec::open_loop(double T, int n) {
  return rational(T, std::vector<RationalGain>(static_cast<std::size_t>(n)));
}

double ControllerSpec::evaluate(double t, const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dimension()) {
    throw std::invalid_argument("controller: state dimension mismatch");
  }
  if (kind == Kind::ExampleEq4) {
    return eval_example_controller(t, x);
  }
  if (!(t < T)) {
    throw SingularityError("controller evaluated at t >= T");
  }
  const double tau = T - t;
  double v = 0.0;
  for (int i = 0; i < dimension(); ++i) {
    v += gains[static_cast<std::size_t>(i)].at_time_to_go(tau) * x(i);
  }
  return v;
}

InjectionSpec InjectionSpec::holloway(double ell1, double ell2, double T) {
  if (!(ell1 > 0.0) || !(ell2 > 0.0)) {
    throw std::invalid_argument("ell1 and ell2 must be positive");
  }
  if (!(T > 0.0)) {
    throw std::invalid_argument("T must be positive");
  }
  InjectionSpec spec;
  spec.kind = Kind::HollowayEq6;
  spec.T = T;
  spec.ell1 = ell1;
  spec.ell2 = ell2;
  spec.gains = {RationalGain({{-ell1, 0}, {-6.0, 1}}),
                RationalGain({{-ell2, 0}, {-3.0 * ell1, 1}, {-6.0, 2}})};
  return spec;
}

InjectionSpec InjectionSpec::rational(double T, std::vector<RationalGain> gains) {
  if (gains.size() < 2) {
    throw std::invalid_argument("injection needs n >= 2 gains");
  }
  InjectionSpec spec;
  spec.kind = Kind::RationalTvg;
  spec.T = T;
  spec.gains = std::move(gains);
  return spec;
}

Vector InjectionSpec::evaluate(double t, double y) const {
  if (kind == Kind::HollowayEq6) {
    return eval_holloway_injection(t, y, *this);
  }
  if (!(t < T)) {
    throw SingularityError("injection evaluated at t >= T");
  }
  const double tau = T - t;
  Vector phi(dimension());
  for (int i = 0; i < dimension(); ++i) {
    phi(i) = gains[static_cast<std::size_t>(i)].at_time_to_go(tau) * y;
  }
  return phi;
}

DisturbanceSpec DisturbanceSpec::constant(double value, double bound) {
  DisturbanceSpec d;
  d.kind = Kind::Constant;
  d.value = value;
  d.bound = bound;
  d.validate();
  return d;
}

DisturbanceSpec DisturbanceSpec::sinusoid(double amplitude, double omega,
                                          double phase, double bound) {
  DisturbanceSpec d;
  d.kind = Kind::Sinusoid;
  d.amplitude = amplitude;
  d.omega = omega;
  d.phase = phase;
  d.bound = bound;
  d.validate();
  return d;
}

DisturbanceSpec DisturbanceSpec::piecewise(double dt, std::vector<double> samples,
                                           double bound) {
  DisturbanceSpec d;
  d.kind = Kind::PiecewiseSamples;
  d.sample_dt = dt;
  d.samples = std::move(samples);
  d.bound = bound;
  d.validate();
  return d;
}

void DisturbanceSpec::validate() const {
  if (!(bound >= 0.0)) {
    throw std::invalid_argument("disturbance bound L must be >= 0");
  }
  switch (kind) {
    case Kind::Zero:
      return;
    case Kind::Constant:
      if (std::abs(value) > bound) {
        throw std::invalid_argument("constant disturbance exceeds its bound");
      }
      return;
    case Kind::Sinusoid:
      if (std::abs(amplitude) > bound) {
        throw std::invalid_argument("sinusoid amplitude exceeds its bound");
      }
      return;
    case Kind::PiecewiseSamples:
      if (!(sample_dt > 0.0)) {
        throw std::invalid_argument("disturbance sample period must be positive");
      }
      for (double s : samples) {
        if (std::abs(s) > bound) {
          throw std::invalid_argument("disturbance sample exceeds its bound");
        }
      }
      return;
  }
}

double DisturbanceSpec::evaluate(double t) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value;
    case Kind::Sinusoid:
      return amplitude * std::sin(omega * t + phase);
    case Kind::PiecewiseSamples: {
      if (t < 0.0) return 0.0;
      const auto k = static_cast<std::size_t>(std::floor(t / sample_dt));
      return k < samples.size() ? samples[k] : 0.0;
    }
  }
  return 0.0;
}

std::optional<double> DisturbanceSpec::next_breakpoint(double t) const {
  if (kind != Kind::PiecewiseSamples) return std::nullopt;
  const double k = std::floor(t / sample_dt) + 1.0;
  if (k > static_cast<double>(samples.size())) return std::nullopt;
  double next = k * sample_dt;
  if (next <= t) next = (k + 1.0) * sample_dt;
  return next;
}

ConstantNoise::ConstantNoise(Vector value, double bound)
    : value_(std::move(value)), bound_(bound) {
  check_noise_bound(value_, bound_);
}

void check_noise_bound(const Vector& eta, double bound) {
  const double norm = eta.norm();
  if (!std::isfinite(norm) || norm > bound * (1.0 + 1e-12) + 1e-300) {
    throw NoiseBoundViolation("noise norm " + std::to_string(norm) +
                              " exceeds declared bound " +
                              std::to_string(bound));
  }
}

SystemModel::SystemModel(std::variant<ControlLoop, DiffError> variant,
                         Horizon horizon, int n)
    : variant_(std::move(variant)), horizon_(horizon), n_(n) {}

SystemModel SystemModel::control_loop(ControllerSpec controller,
                                      DisturbanceSpec disturbance,
                                      std::optional<double> rho_min) {
  const int n = controller.dimension();
  if (n < 2) {
    throw std::invalid_argument("control loop requires n >= 2");
  }
  disturbance.validate();
  const double T = controller.T;
  Horizon horizon = rho_min ? Horizon(T, *rho_min) : Horizon::with_default_rho(T);
  return SystemModel(ControlLoop{std::move(controller), std::move(disturbance)},
                     horizon, n);
}

SystemModel SystemModel::diff_error(InjectionSpec injection,
                                    DisturbanceSpec disturbance,
                                    std::optional<double> rho_min) {
  const int n = injection.dimension();
  if (n < 2) {
    throw std::invalid_argument("differentiator error system requires n >= 2");
  }
  disturbance.validate();
  const double T = injection.T;
  Horizon horizon = rho_min ? Horizon(T, *rho_min) : Horizon::with_default_rho(T);
  return SystemModel(DiffError{std::move(injection), std::move(disturbance)},
                     horizon, n);
}

const DisturbanceSpec& SystemModel::disturbance() const {
  return is_control_loop() ? loop().disturbance : diff().disturbance;
}

const std::vector<RationalGain>& SystemModel::gains() const {
  return is_control_loop() ? loop().controller.gains : diff().injection.gains;
}

Vector SystemModel::rhs(double t, const Vector& x, const Vector& eta) const {
  if (is_control_loop()) return control_loop_rhs(t, x, eta, *this);
  if (eta.size() != 1) {
    throw std::invalid_argument("differentiator noise must be scalar");
  }
  return diff_error_rhs(t, x, eta(0), *this);
}

Vector SystemModel::switched_off_rhs(double t, const Vector& x) const {
  Vector dx(n_);
  dx.head(n_ - 1) = x.tail(n_ - 1);
  dx(n_ - 1) = disturbance().evaluate(t);
  return dx;
}

double SystemModel::gain_output(double t, const Vector& x, const Vector& eta) const {
  if (is_control_loop()) {
    return loop().controller.evaluate(t, x + eta);
  }
  const Vector phi = diff().injection.evaluate(t, x(0) + eta(0));
  return phi(n_ - 1);
}

double SystemModel::gain_magnitude(double t) const {
  if (!(t < T())) {
    throw SingularityError("gain evaluated at t >= T");
  }
  double g = 0.0;
  for (const auto& gain : gains()) {
    g = std::max(g, std::abs(gain.at_time_to_go(T() - t)));
  }
  return g;
}

namespace {

void require_finite(const Vector& dx, const char* what) {
  if (!dx.allFinite()) {
    throw NumericalFailure(std::string(what) + " produced a non-finite value");
  }
}

}  // namespace

Vector control_loop_rhs(double t, const Vector& x, const Vector& eta,
                        const SystemModel& model) {
  if (!model.is_control_loop()) {
    throw std::invalid_argument("control_loop_rhs: model is not a control loop");
  }
  const int n = model.dimension();
  if (x.size() != n || eta.size() != n) {
    throw std::invalid_argument("control_loop_rhs: dimension mismatch");
  }
  if (!(t < model.T())) {
    throw SingularityError("control_loop_rhs evaluated at t >= T");
  }
  const auto& loop = model.loop();
  Vector dx(n);
  dx.head(n - 1) = x.tail(n - 1);
  dx(n - 1) = loop.controller.evaluate(t, x + eta) + loop.disturbance.evaluate(t);
  require_finite(dx, "controller");
  return dx;
}

Vector diff_error_rhs(double t, const Vector& x, double eta1,
                      const SystemModel& model) {
  if (model.is_control_loop()) {
    throw std::invalid_argument("diff_error_rhs: model is not a differentiator");
  }
  const int n = model.dimension();
  if (x.size() != n) {
    throw std::invalid_argument("diff_error_rhs: dimension mismatch");
  }
  if (!(t < model.T())) {
    throw SingularityError("diff_error_rhs evaluated at t >= T");
  }
  const auto& diff = model.diff();
  const Vector phi = diff.injection.evaluate(t, x(0) + eta1);
  Vector dx(n);
  dx.head(n - 1) = x.tail(n - 1) + phi.head(n - 1);
  dx(n - 1) = diff.disturbance.evaluate(t) + phi(n - 1);
  require_finite(dx, "injection");
  return dx;
}

}  // namespace ptrobust
