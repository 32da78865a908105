#ifndef PTROBUST_CONFIG_HPP_
#define PTROBUST_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ptrobust/attack.hpp"
#include "ptrobust/core.hpp"
#include "ptrobust/integrate.hpp"

namespace ptrobust {

enum class Scenario {
  Simulate,
  VerifyDeadline,
  AttackThm1i,
  AttackThm1ii,
  AttackThm2i,
  AttackThm2ii,
  GainScan,
  FalsifyStability,
  StopTime,
  Deadzone,
};

/// Config spelling, e.g. "attack.thm2ii".
std::string scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& text);

struct ConfigIssue {
  int line = 0;  ///< 0 for command-line overrides, -1 for absent keys
  std::string key;
  std::string message;

  std::string to_string() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct ExperimentConfig {
  // system
  std::string variant = "control_loop";  ///< control_loop | diff_error
  std::string controller = "example_eq4";  ///< example_eq4 | rational | open_loop
  std::string injection = "holloway";      ///< holloway | rational
  std::vector<RationalGain> gains;         ///< rational specs only
  double T = 1.0;
  int n = 2;
  double ell1 = 1.0;
  double ell2 = 1.0;
  DisturbanceSpec disturbance;

  IntegrationOptions integration;
  Scenario scenario = Scenario::Simulate;

  // simulate
  double sim_t0 = 0.0;
  Vector sim_x0;
  std::optional<double> sim_t_end;
  Vector sim_noise;  ///< constant noise value, empty for none
  double sim_noise_bound = 0.0;

  // verify-deadline
  std::vector<double> deadline_start_times{0.0, 0.3, 0.6};
  std::vector<Vector> deadline_ics;
  double deadline_rho = 1e-3;
  double deadline_tol = 0.1;
  std::vector<double> deadline_rho_ladder{1e-2, 1e-3, 1e-4};

  // attack
  double eta_bar = 0.0;
  double epsilon = 0.0;
  Vector attack_x0;
  double attack_rho = 1e-6;
  ScheduleParams schedule;
  std::vector<double> ladder{0.1, 1.0, 10.0};
  std::string thm1ii_mode = "prepared";  ///< prepared | steered
  std::optional<Vector> profile;

  // gain-scan
  double scan_delta = 1.0;
  std::vector<double> scan_rho_ladder{1e-1, 1e-2, 1e-3};

  // falsify-stability
  double falsify_delta = 1.0;
  double falsify_epsilon = 2.0;
  std::optional<double> falsify_epsilon_prime;

  // workaround
  double t_stop = 0.9;
  double width = 1e-2;
  std::vector<Vector> workaround_ics;
  std::string workaround_noise = "none";  ///< none | thm1i | thm2i
  double workaround_eta_bar = 0.0;

  // output
  std::string output_dir = ".";
  std::string output_prefix;
  bool plot = false;
  std::uint64_t seed = 1;

  /// Effective key = value pairs (defaults included, output.* excluded) in
  /// key order, for artifact headers.
  std::vector<std::pair<std::string, std::string>> echo;

  int noise_dimension() const { return variant == "control_loop" ? n : 1; }
};

/// Parses `key = value` lines; '#' starts a comment. Overrides are applied
/// after the text and win over it. Throws ConfigError listing every issue.
ExperimentConfig parse_config(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Gain syntax "c^p, c^p ; c^p" with one ';'-separated group per state.
std::vector<RationalGain> parse_gains(const std::string& text);

SystemModel build_model(const ExperimentConfig& config);

/// Every recognised key.
std::vector<std::string> config_keys();

}  // namespace ptrobust

#endif  // PTROBUST_CONFIG_HPP_
