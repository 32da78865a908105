#ifndef PTROBUST_CORE_HPP_
#define PTROBUST_CORE_HPP_

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ptrobust {

using Vector = Eigen::VectorXd;

/// Raised when an evaluation is requested at or beyond the deadline T.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a right-hand side produces a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when construction parameters leave no admissible choice.
class InfeasibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a noise source returns a value outside its declared bound.
class NoiseBoundViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Deadline instant T together with the closest distance to T that any
/// integration is allowed to reach.
struct Horizon {
  double T = 1.0;
  double rho_min = 1e-9;

  Horizon() = default;
  Horizon(double deadline, double min_distance);

  static Horizon with_default_rho(double deadline) {
    return Horizon(deadline, 1e-9 * deadline);
  }
};

/// A single term c / (T - t)^p.
struct PoleTerm {
  double coeff = 0.0;
  int order = 0;
};

/// Time-varying gain g(t) = sum_k c_k / (T - t)^{p_k}, stored as a table of
/// pole terms so that pole orders stay visible to analysis code.
class RationalGain {
 public:
  RationalGain() = default;
  explicit RationalGain(std::vector<PoleTerm> terms);

  /// Evaluates the gain at time-to-go tau = T - t > 0.
  template <typename Scalar>
  Scalar at_time_to_go(Scalar tau) const {
    using std::pow;
    Scalar g(0);
    for (const auto& term : terms_) {
      g += Scalar(term.coeff) / pow(tau, term.order);
    }
    return g;
  }

  /// Highest pole order with a nonzero coefficient, or -1 for the zero gain.
  int pole_order() const;
  /// Sum of the coefficients sharing the highest pole order.
  double leading_coefficient() const;
  bool is_zero() const { return pole_order() < 0; }

  const std::vector<PoleTerm>& terms() const { return terms_; }

 private:
  std::vector<PoleTerm> terms_;
};

/// Closed-loop control law v(t, x) = sum_i g_i(t) x_i.
struct ControllerSpec {
  enum class Kind { ExampleEq4, RationalTvg };

  Kind kind = Kind::ExampleEq4;
  double T = 1.0;
  std::vector<RationalGain> gains;

  /// v(t, x) = -6/(1-t)^2 x1 - 4/(1-t) x2 with T = 1.
  static ControllerSpec example_eq4();
  static ControllerSpec rational(double T, std::vector<RationalGain> gains);
  /// Zero controller, i.e. an open-loop integrator chain.
  static ControllerSpec open_loop(double T, int n);

  int dimension() const { return static_cast<int>(gains.size()); }
  double evaluate(double t, const Eigen::Ref<const Vector>& x) const;
};

/// Output injections phi_i(t, y) = g_i(t) y of a differentiator error system.
struct InjectionSpec {
  enum class Kind { HollowayEq6, RationalTvg };

  Kind kind = Kind::HollowayEq6;
  double T = 1.0;
  double ell1 = 1.0;
  double ell2 = 1.0;
  std::vector<RationalGain> gains;

  static InjectionSpec holloway(double ell1, double ell2, double T);
  static InjectionSpec rational(double T, std::vector<RationalGain> gains);

  int dimension() const { return static_cast<int>(gains.size()); }
  Vector evaluate(double t, double y) const;
};

/// Matched disturbance d(t) with declared amplitude bound L.
struct DisturbanceSpec {
  enum class Kind { Zero, Constant, Sinusoid, PiecewiseSamples };

  Kind kind = Kind::Zero;
  double bound = 0.0;
  double value = 0.0;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  double sample_dt = 0.0;
  std::vector<double> samples;

  static DisturbanceSpec zero() { return {}; }
  static DisturbanceSpec constant(double value, double bound);
  static DisturbanceSpec sinusoid(double amplitude, double omega, double phase,
                                  double bound);
  /// Zero-order hold of `samples` with period `dt`; zero past the last sample.
  static DisturbanceSpec piecewise(double dt, std::vector<double> samples,
                                   double bound);

  bool is_zero() const { return kind == Kind::Zero; }
  double evaluate(double t) const;
  /// Next discontinuity strictly after t, if any.
  std::optional<double> next_breakpoint(double t) const;
  void validate() const;
};

/// Causal, possibly stateful measurement-noise generator.
///
/// The integrator calls observe() at the initial time and at every step
/// boundary; value() must depend only on the state gathered through
/// observe(). Discontinuities are announced ahead of time through
/// next_switch() so that no integration step straddles them, or decided at
/// the current boundary by returning true from observe(). An optional guard
/// function lets a source request an exact event when it crosses zero from
/// above.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;

  virtual double bound() const = 0;
  /// n for vector (control loop) noise, 1 for scalar (differentiator) noise.
  virtual int dimension() const = 0;
  virtual Vector value(double t) const = 0;

  virtual std::optional<double> next_switch(double /*t*/) const {
    return std::nullopt;
  }
  /// Returns true when the signal (or its derivative) is discontinuous at t.
  virtual bool observe(double /*t*/, const Vector& /*x*/, bool /*guard_fired*/) {
    return false;
  }
  virtual std::optional<double> guard(double /*t*/, const Vector& /*x*/) const {
    return std::nullopt;
  }
};

/// eta == 0.
class ZeroNoise final : public NoiseSource {
 public:
  explicit ZeroNoise(int dimension) : dimension_(dimension) {}
  double bound() const override { return 0.0; }
  int dimension() const override { return dimension_; }
  Vector value(double) const override { return Vector::Zero(dimension_); }

 private:
  int dimension_;
};

/// eta(t) == c with bound ||c||.
class ConstantNoise final : public NoiseSource {
 public:
  ConstantNoise(Vector value, double bound);
  double bound() const override { return bound_; }
  int dimension() const override { return static_cast<int>(value_.size()); }
  Vector value(double) const override { return value_; }

 private:
  Vector value_;
  double bound_;
};

/// Throws NoiseBoundViolation if ||eta|| exceeds `bound` beyond round-off.
void check_noise_bound(const Vector& eta, double bound);

struct ControlLoop {
  ControllerSpec controller;
  DisturbanceSpec disturbance;
};

struct DiffError {
  InjectionSpec injection;
  DisturbanceSpec disturbance;
};

/// Closed control loop over an integrator chain, or differentiator error
/// dynamics, on the horizon [0, T).
class SystemModel {
 public:
  static SystemModel control_loop(ControllerSpec controller,
                                  DisturbanceSpec disturbance = {},
                                  std::optional<double> rho_min = std::nullopt);
  static SystemModel diff_error(InjectionSpec injection,
                                DisturbanceSpec disturbance = {},
                                std::optional<double> rho_min = std::nullopt);

  bool is_control_loop() const {
    return std::holds_alternative<ControlLoop>(variant_);
  }
  const ControlLoop& loop() const { return std::get<ControlLoop>(variant_); }
  const DiffError& diff() const { return std::get<DiffError>(variant_); }
  const DisturbanceSpec& disturbance() const;

  const Horizon& horizon() const { return horizon_; }
  double T() const { return horizon_.T; }
  int dimension() const { return n_; }
  /// Shape of legal noise: n in the control case, 1 in the differentiator case.
  int noise_dimension() const { return is_control_loop() ? n_ : 1; }
  /// Gain functions g_i of the controller or injections.
  const std::vector<RationalGain>& gains() const;

  Vector rhs(double t, const Vector& x, const Vector& eta) const;
  /// Right-hand side with the algorithm switched off (v = 0 or phi = 0).
  Vector switched_off_rhs(double t, const Vector& x) const;
  /// v(t, x + eta) in the control case, phi_n(t, x1 + eta1) otherwise.
  double gain_output(double t, const Vector& x, const Vector& eta) const;
  /// max_i |g_i(t)|.
  double gain_magnitude(double t) const;

 private:
  SystemModel(std::variant<ControlLoop, DiffError> variant, Horizon horizon,
              int n);

  std::variant<ControlLoop, DiffError> variant_;
  Horizon horizon_;
  int n_ = 2;
};

/// v(t, x) = -6/(1-t)^2 x1 - 4/(1-t) x2.
template <typename Derived>
typename Derived::Scalar eval_example_controller(
    typename Derived::Scalar t, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != 2) {
    throw std::invalid_argument("example controller requires n = 2");
  }
  if (!(t < Scalar(1))) {
    throw SingularityError("example controller evaluated at t >= 1");
  }
  const Scalar tau = Scalar(1) - t;
  return -Scalar(6) / (tau * tau) * x(0) - Scalar(4) / tau * x(1);
}

/// (phi_1, phi_2) of the second-order prescribed-time differentiator.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> eval_holloway_injection(Scalar t, Scalar y,
                                                    Scalar ell1, Scalar ell2,
                                                    Scalar T) {
  if (!(t < T)) {
    throw SingularityError("injection evaluated at t >= T");
  }
  const Scalar tau = T - t;
  Eigen::Matrix<Scalar, 2, 1> phi;
  phi(0) = -(ell1 + Scalar(6) / tau) * y;
  phi(1) = -(ell2 + Scalar(3) * ell1 / tau + Scalar(6) / (tau * tau)) * y;
  return phi;
}

inline Eigen::Vector2d eval_holloway_injection(double t, double y,
                                               const InjectionSpec& spec) {
  if (spec.kind != InjectionSpec::Kind::HollowayEq6) {
    throw std::invalid_argument("spec is not the Holloway differentiator");
  }
  return eval_holloway_injection<double>(t, y, spec.ell1, spec.ell2, spec.T);
}

/// x_i' = x_{i+1}, x_n' = v(t, x + eta) + d(t).
Vector control_loop_rhs(double t, const Vector& x, const Vector& eta,
                        const SystemModel& model);

/// x_i' = x_{i+1} + phi_i(t, x1 + eta1), x_n' = d(t) + phi_n(t, x1 + eta1).
Vector diff_error_rhs(double t, const Vector& x, double eta1,
                      const SystemModel& model);

}  // namespace ptrobust

#endif  // PTROBUST_CORE_HPP_
