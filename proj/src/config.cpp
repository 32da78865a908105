#include "ptrobust/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ptrobust {

namespace {

// Keys with a default value; keys mapped to nullopt are unset unless given.
const std::vector<std::pair<std::string, std::optional<std::string>>>& key_table() {
  static const std::vector<std::pair<std::string, std::optional<std::string>>> table = {
      {"system.variant", std::nullopt},
      {"system.controller", "example_eq4"},
      {"system.injection", "holloway"},
      {"system.gains", std::nullopt},
      {"system.T", "1"},
      {"system.n", "2"},
      {"system.ell1", "1"},
      {"system.ell2", "1"},
      {"disturbance.kind", "zero"},
      {"disturbance.L", "0"},
      {"disturbance.value", "0"},
      {"disturbance.amplitude", "0"},
      {"disturbance.omega", "0"},
      {"disturbance.phase", "0"},
      {"disturbance.dt", "0"},
      {"disturbance.samples", std::nullopt},
      {"integration.rel_tol", "1e-9"},
      {"integration.abs_tol", "1e-12"},
      {"integration.initial_step", "1e-4"},
      {"integration.min_step", "1e-14"},
      {"integration.rho_min", "1e-9"},
      {"integration.max_norm", "1e9"},
      {"integration.kappa", "0.1"},
      {"integration.grid", "steps"},
      {"integration.grid_count", "0"},
      {"scenario", std::nullopt},
      {"simulate.t0", "0"},
      {"simulate.x0", std::nullopt},
      {"simulate.t_end", std::nullopt},
      {"simulate.noise", std::nullopt},
      {"simulate.noise_bound", std::nullopt},
      {"deadline.start_times", "0, 0.3, 0.6"},
      {"deadline.initial_conditions", std::nullopt},
      {"deadline.rho", "1e-3"},
      {"deadline.tol", "0.1"},
      {"deadline.rho_ladder", "1e-2, 1e-3, 1e-4"},
      {"attack.eta_bar", std::nullopt},
      {"attack.epsilon", std::nullopt},
      {"attack.x0", std::nullopt},
      {"attack.rho", "1e-6"},
      {"attack.eps0", "0"},
      {"attack.growth", "2"},
      {"attack.k_max", "6"},
      {"attack.delta", "0"},
      {"attack.placement", "0.1"},
      {"attack.closeness", "1e-3"},
      {"attack.ladder", "0.1, 1, 10"},
      {"attack.mode", "prepared"},
      {"attack.profile", std::nullopt},
      {"gain_scan.delta", "1"},
      {"gain_scan.rho_ladder", "0.1, 0.01, 0.001"},
      {"falsify.delta", "1"},
      {"falsify.epsilon", "2"},
      {"falsify.epsilon_prime", std::nullopt},
      {"workaround.t_stop", "0.9"},
      {"workaround.width", "0.01"},
      {"workaround.initial_conditions", std::nullopt},
      {"workaround.noise", "none"},
      {"workaround.eta_bar", std::nullopt},
      {"workaround.k_max", "6"},
      {"output.dir", "."},
      {"output.prefix", ""},
      {"output.plot", "false"},
      {"seed", "1"},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::vector<double>> to_list(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) {
    const auto v = to_double(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Entry {
  std::string value;
  int line = -1;  // -1 default, 0 override
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries)
      : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& raw(const std::string& key) const { return entries_.at(key).value; }
  bool given(const std::string& key) const {
    return has(key) && entries_.at(key).line >= 0;
  }

  void issue(const std::string& key, const std::string& message) {
    const int line = has(key) ? entries_.at(key).line : -1;
    issues_.push_back({line, key, message});
  }

  std::string text(const std::string& key) const { return has(key) ? raw(key) : ""; }

  double real(const std::string& key, double fallback = 0.0) {
    if (!has(key)) return fallback;
    const auto v = to_double(raw(key));
    if (!v) {
      issue(key, "expected a real number, got '" + raw(key) + "'");
      return fallback;
    }
    return *v;
  }

  std::optional<double> optional_real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return real(key);
  }

  long long integer(const std::string& key, long long fallback = 0) {
    if (!has(key)) return fallback;
    const auto v = to_integer(raw(key));
    if (!v) {
      issue(key, "expected an integer, got '" + raw(key) + "'");
      return fallback;
    }
    return *v;
  }

  bool boolean(const std::string& key) {
    const std::string v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
    issue(key, "expected true or false, got '" + v + "'");
    return false;
  }

  std::vector<double> list(const std::string& key) {
    if (!has(key)) return {};
    const auto v = to_list(raw(key));
    if (!v) {
      issue(key, "expected a comma-separated list of reals");
      return {};
    }
    return *v;
  }

  std::vector<Vector> vectors(const std::string& key, int n) {
    std::vector<Vector> out;
    if (!has(key)) return out;
    for (const auto& group : split(raw(key), ';')) {
      const auto v = to_list(group);
      if (!v || v->empty()) {
        issue(key, "expected ';'-separated vectors of comma-separated reals");
        return {};
      }
      if (static_cast<int>(v->size()) != n) {
        issue(key, "vector '" + group + "' must have " + std::to_string(n) + " entries");
        return {};
      }
      out.push_back(to_vector(*v));
    }
    return out;
  }

  std::optional<Vector> vector(const std::string& key, int n) {
    if (!has(key)) return std::nullopt;
    const auto v = list(key);
    if (static_cast<int>(v.size()) != n) {
      issue(key, "must have " + std::to_string(n) + " entries");
      return std::nullopt;
    }
    return to_vector(v);
  }

  void require(const std::string& key) {
    if (!has(key)) issues_.push_back({-1, key, "missing required key"});
  }

  template <typename Pred>
  void check(const std::string& key, bool ok, const Pred& message) {
    if (!ok) issue(key, message());
  }

  std::vector<ConfigIssue>& issues() { return issues_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
  std::vector<ConfigIssue> issues_;
};

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Simulate: return "simulate";
    case Scenario::VerifyDeadline: return "verify-deadline";
    case Scenario::AttackThm1i: return "attack.thm1i";
    case Scenario::AttackThm1ii: return "attack.thm1ii";
    case Scenario::AttackThm2i: return "attack.thm2i";
    case Scenario::AttackThm2ii: return "attack.thm2ii";
    case Scenario::GainScan: return "gain-scan";
    case Scenario::FalsifyStability: return "falsify-stability";
    case Scenario::StopTime: return "workaround.stop-time";
    case Scenario::Deadzone: return "workaround.deadzone";
  }
  return "";
}

std::optional<Scenario> parse_scenario(const std::string& text) {
  for (Scenario s : {Scenario::Simulate, Scenario::VerifyDeadline, Scenario::AttackThm1i,
                     Scenario::AttackThm1ii, Scenario::AttackThm2i, Scenario::AttackThm2ii,
                     Scenario::GainScan, Scenario::FalsifyStability, Scenario::StopTime,
                     Scenario::Deadzone}) {
    if (scenario_name(s) == text) return s;
  }
  return std::nullopt;
}

std::string ConfigIssue::to_string() const {
  std::string where = line > 0    ? "line " + std::to_string(line)
                      : line == 0 ? "command line"
                                  : "config";
  return where + ": " + key + ": " + message;
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid configuration";
  for (const auto& i : issues) out += "\n  " + i.to_string();
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, def] : key_table()) keys.push_back(key);
  return keys;
}

std::vector<RationalGain> parse_gains(const std::string& text) {
  std::vector<RationalGain> gains;
  for (const auto& group : split(text, ';')) {
    std::vector<PoleTerm> terms;
    if (group.empty()) throw std::invalid_argument("empty gain group");
    for (const auto& item : split(group, ',')) {
      const auto caret = item.find('^');
      const auto coeff = to_double(trim(item.substr(0, caret)));
      std::optional<long long> order = 0;
      if (caret != std::string::npos) order = to_integer(trim(item.substr(caret + 1)));
      if (!coeff || !order || *order < 0) {
        throw std::invalid_argument("malformed gain term '" + item + "'");
      }
      terms.push_back({*coeff, static_cast<int>(*order)});
    }
    gains.emplace_back(std::move(terms));
  }
  return gains;
}

ExperimentConfig parse_config(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<ConfigIssue> issues;
  std::map<std::string, std::optional<std::string>> known(key_table().begin(),
                                                          key_table().end());
  std::map<std::string, Entry> entries;
  for (const auto& [key, def] : key_table()) {
    if (def) entries[key] = {*def, -1};
  }

  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({number, line, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known.count(key)) {
      issues.push_back({number, key, "unknown key"});
      continue;
    }
    if (entries.count(key) && entries[key].line > 0) {
      issues.push_back({number, key, "duplicate key (first set on line " +
                                         std::to_string(entries[key].line) + ")"});
      continue;
    }
    entries[key] = {value, number};
  }
  for (const auto& [key, value] : overrides) {
    if (!known.count(key)) {
      issues.push_back({0, key, "unknown key"});
      continue;
    }
    entries[key] = {trim(value), 0};
  }

  Reader r(std::move(entries));
  ExperimentConfig c;

  r.require("scenario");
  if (r.has("scenario")) {
    const auto s = parse_scenario(r.raw("scenario"));
    if (s) {
      c.scenario = *s;
    } else {
      r.issue("scenario", "unknown scenario '" + r.raw("scenario") + "'");
    }
  }
  const bool differentiator_scenario =
      c.scenario == Scenario::AttackThm2i || c.scenario == Scenario::AttackThm2ii;

  // system
  c.variant = r.has("system.variant") ? r.raw("system.variant")
                                      : (differentiator_scenario ? "diff_error" : "control_loop");
  const bool loop = c.variant == "control_loop";
  if (!loop && c.variant != "diff_error") {
    r.issue("system.variant", "expected control_loop or diff_error");
  }
  c.controller = r.text("system.controller");
  c.injection = r.text("system.injection");
  c.T = r.real("system.T", 1.0);
  r.check("system.T", c.T > 0.0, [] { return "T must be positive"; });
  c.n = static_cast<int>(r.integer("system.n", 2));
  c.ell1 = r.real("system.ell1", 1.0);
  c.ell2 = r.real("system.ell2", 1.0);

  const std::string& kind = loop ? c.controller : c.injection;
  const char* kind_key = loop ? "system.controller" : "system.injection";
  if (loop && kind != "example_eq4" && kind != "rational" && kind != "open_loop") {
    r.issue(kind_key, "expected example_eq4, rational or open_loop");
  }
  if (!loop && kind != "holloway" && kind != "rational") {
    r.issue(kind_key, "expected holloway or rational");
  }
  if (kind == "rational") {
    if (!r.has("system.gains")) {
      r.issue(kind_key, "rational gains need system.gains");
    } else {
      try {
        c.gains = parse_gains(r.raw("system.gains"));
        const int count = static_cast<int>(c.gains.size());
        if (r.given("system.n") && count != c.n) {
          r.issue("system.gains", "expected " + std::to_string(c.n) + " gain groups");
        }
        c.n = count;
      } catch (const std::invalid_argument& e) {
        r.issue("system.gains", e.what());
      }
    }
  } else if (kind == "example_eq4" || kind == "holloway") {
    if (r.given("system.n") && c.n != 2) r.issue("system.n", "must be 2 for " + kind);
    c.n = 2;
  }
  if (kind == "example_eq4" && c.T != 1.0) {
    r.issue("system.T", "example_eq4 is defined for T = 1");
  }
  r.check("system.n", c.n >= (loop ? 2 : 1), [] { return "dimension too small"; });
  if (kind == "holloway") {
    r.check("system.ell1", c.ell1 >= 0.0, [] { return "ell1 must be nonnegative"; });
    r.check("system.ell2", c.ell2 >= 0.0, [] { return "ell2 must be nonnegative"; });
  }

  // disturbance
  {
    const std::string dk = r.text("disturbance.kind");
    const double L = r.real("disturbance.L");
    try {
      if (dk == "zero") {
        c.disturbance = DisturbanceSpec::zero();
      } else if (dk == "constant") {
        c.disturbance = DisturbanceSpec::constant(r.real("disturbance.value"), L);
      } else if (dk == "sinusoid") {
        c.disturbance = DisturbanceSpec::sinusoid(
            r.real("disturbance.amplitude"), r.real("disturbance.omega"),
            r.real("disturbance.phase"), L);
      } else if (dk == "piecewise") {
        c.disturbance = DisturbanceSpec::piecewise(
            r.real("disturbance.dt"), r.list("disturbance.samples"), L);
      } else {
        r.issue("disturbance.kind", "expected zero, constant, sinusoid or piecewise");
      }
      c.disturbance.validate();
    } catch (const std::invalid_argument& e) {
      r.issue("disturbance.kind", e.what());
    }
  }

  // integration
  {
    auto& o = c.integration;
    o.rel_tol = r.real("integration.rel_tol");
    o.abs_tol = r.real("integration.abs_tol");
    o.initial_step = r.real("integration.initial_step");
    o.min_step = r.real("integration.min_step");
    o.rho_min = r.real("integration.rho_min");
    o.max_norm = r.real("integration.max_norm");
    o.kappa = r.real("integration.kappa");
    o.grid_count = static_cast<int>(r.integer("integration.grid_count"));
    const std::string grid = r.text("integration.grid");
    if (grid == "steps") {
      o.grid = OutputGrid::StepBoundaries;
    } else if (grid == "uniform") {
      o.grid = OutputGrid::Uniform;
    } else if (grid == "geometric") {
      o.grid = OutputGrid::Geometric;
    } else {
      r.issue("integration.grid", "expected steps, uniform or geometric");
    }
    r.check("integration.rel_tol", o.rel_tol > 0.0, [] { return "must be positive"; });
    r.check("integration.abs_tol", o.abs_tol > 0.0, [] { return "must be positive"; });
    r.check("integration.initial_step", o.initial_step > 0.0,
            [] { return "must be positive"; });
    r.check("integration.min_step", o.min_step > 0.0, [] { return "must be positive"; });
    r.check("integration.rho_min", o.rho_min >= o.min_step && o.rho_min < c.T,
            [] { return "must lie in [min_step, T)"; });
    r.check("integration.max_norm", o.max_norm > 0.0, [] { return "must be positive"; });
    r.check("integration.kappa", o.kappa > 0.0 && o.kappa < 1.0,
            [] { return "must lie in (0, 1)"; });
    r.check("integration.grid_count",
            o.grid == OutputGrid::StepBoundaries || o.grid_count >= 2,
            [] { return "grid needs at least 2 points"; });
  }
  const double rho_min = c.integration.rho_min;
  const int n = c.n;
  const int nd = loop ? n : 1;

  auto needs_loop = [&](bool want_loop) {
    if (loop != want_loop) {
      r.issue("scenario", scenario_name(c.scenario) + " requires system.variant = " +
                              (want_loop ? "control_loop" : "diff_error"));
    }
  };

  // Defaults that depend on n.
  Vector e1 = Vector::Zero(n);
  Vector en = Vector::Zero(n);
  if (n >= 1) {
    e1(0) = 1.0;
    en(n - 1) = 1.0;
  }

  switch (c.scenario) {
    case Scenario::Simulate: {
      c.sim_t0 = r.real("simulate.t0");
      c.sim_x0 = r.vector("simulate.x0", n).value_or(e1);
      c.sim_t_end = r.optional_real("simulate.t_end");
      r.check("simulate.t0", c.sim_t0 >= 0.0 && c.sim_t0 < c.T - rho_min,
              [] { return "must lie in [0, T - rho_min)"; });
      if (c.sim_t_end) {
        r.check("simulate.t_end", *c.sim_t_end > c.sim_t0 && *c.sim_t_end <= c.T - rho_min,
                [] { return "must lie in (t0, T - rho_min]"; });
      }
      if (r.has("simulate.noise")) {
        c.sim_noise = r.vector("simulate.noise", nd).value_or(Vector());
        c.sim_noise_bound = r.real("simulate.noise_bound", c.sim_noise.norm());
        r.check("simulate.noise_bound", c.sim_noise.norm() <= c.sim_noise_bound,
                [] { return "noise value exceeds its bound"; });
      }
      break;
    }
    case Scenario::VerifyDeadline: {
      c.deadline_start_times = r.list("deadline.start_times");
      c.deadline_ics = r.has("deadline.initial_conditions")
                           ? r.vectors("deadline.initial_conditions", n)
                           : std::vector<Vector>{e1, en, 10.0 * (e1 - en)};
      c.deadline_rho = r.real("deadline.rho");
      c.deadline_tol = r.real("deadline.tol");
      c.deadline_rho_ladder = r.list("deadline.rho_ladder");
      r.check("deadline.start_times",
              !c.deadline_start_times.empty() &&
                  std::all_of(c.deadline_start_times.begin(), c.deadline_start_times.end(),
                              [&](double s) { return s >= 0.0 && s < c.T - c.deadline_rho; }),
              [] { return "start times must lie in [0, T - rho)"; });
      r.check("deadline.initial_conditions", !c.deadline_ics.empty(),
              [] { return "need at least one initial condition"; });
      r.check("deadline.rho", c.deadline_rho >= rho_min && c.deadline_rho < c.T,
              [] { return "must lie in [rho_min, T)"; });
      r.check("deadline.tol", c.deadline_tol > 0.0, [] { return "must be positive"; });
      r.check("deadline.rho_ladder",
              c.deadline_rho_ladder.empty() ||
                  (c.deadline_rho_ladder.size() >= 2 &&
                   strictly_decreasing(c.deadline_rho_ladder) &&
                   c.deadline_rho_ladder.back() >= rho_min &&
                   c.deadline_rho_ladder.front() < c.T),
              [] { return "must be empty or >= 2 strictly decreasing values in [rho_min, T)"; });
      break;
    }
    case Scenario::AttackThm1i:
    case Scenario::AttackThm1ii:
    case Scenario::AttackThm2i:
    case Scenario::AttackThm2ii: {
      needs_loop(!differentiator_scenario);
      r.require("attack.eta_bar");
      c.eta_bar = r.real("attack.eta_bar");
      r.check("attack.eta_bar", !r.has("attack.eta_bar") || c.eta_bar > 0.0,
              [] { return "must be positive"; });
      c.attack_x0 = r.vector("attack.x0", n).value_or(Vector::Zero(n));
      c.attack_rho = r.real("attack.rho");
      r.check("attack.rho", c.attack_rho >= rho_min && c.attack_rho < c.T,
              [] { return "must lie in [rho_min, T)"; });
      const bool divergence =
          c.scenario == Scenario::AttackThm1i || c.scenario == Scenario::AttackThm2i;
      if (divergence) {
        auto& p = c.schedule;
        p.eps0 = r.real("attack.eps0");
        p.growth = r.real("attack.growth");
        p.k_max = static_cast<int>(r.integer("attack.k_max"));
        p.delta = r.real("attack.delta");
        p.placement = r.real("attack.placement");
        p.closeness = r.real("attack.closeness");
        c.ladder = r.list("attack.ladder");
        r.check("attack.growth", p.growth > 1.0, [] { return "must exceed 1"; });
        r.check("attack.k_max", p.k_max >= 1 && p.k_max <= 200,
                [] { return "must lie in [1, 200]"; });
        r.check("attack.placement", p.placement > 0.0 && p.placement < 1.0,
                [] { return "must lie in (0, 1)"; });
        r.check("attack.closeness", p.closeness > 0.0, [] { return "must be positive"; });
        if (c.eta_bar > 0.0) {
          r.check("attack.delta", p.delta <= c.eta_bar,
                  [] { return "must not exceed eta_bar"; });
        }
        r.check("attack.ladder",
                !c.ladder.empty() && c.ladder.front() > 0.0 && strictly_increasing(c.ladder),
                [] { return "must be positive and strictly increasing"; });
      } else {
        r.require("attack.epsilon");
        c.epsilon = r.real("attack.epsilon");
        r.check("attack.epsilon", !r.has("attack.epsilon") || c.epsilon > 0.0,
                [] { return "must be positive"; });
      }
      if (c.scenario == Scenario::AttackThm2ii && c.eta_bar > 0.0 && c.epsilon > 0.0) {
        r.check("attack.epsilon", c.T - 2.0 * c.eta_bar / c.epsilon > 0.0,
                [] { return "ramp start T - 2 eta_bar / epsilon must be positive"; });
      }
      if (c.scenario == Scenario::AttackThm1ii) {
        c.thm1ii_mode = r.text("attack.mode");
        r.check("attack.mode", c.thm1ii_mode == "prepared" || c.thm1ii_mode == "steered",
                [] { return "expected prepared or steered"; });
        if (r.has("attack.profile")) c.profile = r.vector("attack.profile", n - 1);
      }
      break;
    }
    case Scenario::GainScan: {
      c.scan_delta = r.real("gain_scan.delta");
      c.scan_rho_ladder = r.list("gain_scan.rho_ladder");
      r.check("gain_scan.delta", c.scan_delta > 0.0, [] { return "must be positive"; });
      r.check("gain_scan.rho_ladder",
              !c.scan_rho_ladder.empty() && strictly_decreasing(c.scan_rho_ladder) &&
                  c.scan_rho_ladder.back() > 0.0 && c.scan_rho_ladder.front() < c.T,
              [] { return "must be strictly decreasing values in (0, T)"; });
      break;
    }
    case Scenario::FalsifyStability: {
      needs_loop(true);
      c.falsify_delta = r.real("falsify.delta");
      c.falsify_epsilon = r.real("falsify.epsilon");
      c.falsify_epsilon_prime = r.optional_real("falsify.epsilon_prime");
      r.check("falsify.delta", c.falsify_delta > 0.0, [] { return "must be positive"; });
      r.check("falsify.epsilon", c.falsify_epsilon > 0.0, [] { return "must be positive"; });
      if (c.falsify_epsilon_prime) {
        r.check("falsify.epsilon_prime",
                *c.falsify_epsilon_prime > std::max(c.falsify_delta, c.falsify_epsilon),
                [] { return "must exceed max(delta, epsilon)"; });
        r.check("falsify.epsilon_prime",
                c.T - c.falsify_delta / *c.falsify_epsilon_prime >= 0.0,
                [] { return "witness time T - delta / epsilon_prime is negative"; });
      }
      break;
    }
    case Scenario::StopTime:
    case Scenario::Deadzone: {
      c.t_stop = r.real("workaround.t_stop");
      c.width = r.real("workaround.width");
      c.workaround_ics = r.has("workaround.initial_conditions")
                             ? r.vectors("workaround.initial_conditions", n)
                             : std::vector<Vector>{e1, 2.0 * e1, 5.0 * e1, 10.0 * e1};
      c.workaround_noise = r.text("workaround.noise");
      c.schedule.k_max = static_cast<int>(r.integer("workaround.k_max"));
      if (c.scenario == Scenario::StopTime) {
        r.check("workaround.t_stop", c.t_stop > 0.0 && c.t_stop < c.T - rho_min,
                [] { return "must lie in (0, T - rho_min)"; });
      } else {
        r.check("workaround.width", c.width > 0.0, [] { return "must be positive"; });
      }
      r.check("workaround.initial_conditions", !c.workaround_ics.empty(),
              [] { return "need at least one initial condition"; });
      const std::string& wn = c.workaround_noise;
      if (wn != "none" && wn != "thm1i" && wn != "thm2i") {
        r.issue("workaround.noise", "expected none, thm1i or thm2i");
      } else if (wn != "none") {
        if ((wn == "thm1i") != loop) {
          r.issue("workaround.noise", wn + " noise does not match system.variant");
        }
        r.require("workaround.eta_bar");
        c.workaround_eta_bar = r.real("workaround.eta_bar");
        r.check("workaround.eta_bar", !r.has("workaround.eta_bar") || c.workaround_eta_bar > 0.0,
                [] { return "must be positive"; });
        r.check("workaround.k_max", c.schedule.k_max >= 1 && c.schedule.k_max <= 200,
                [] { return "must lie in [1, 200]"; });
      }
      break;
    }
  }

  c.output_dir = r.text("output.dir");
  c.output_prefix = r.text("output.prefix");
  c.plot = r.boolean("output.plot");
  const long long seed = r.integer("seed", 1);
  r.check("seed", seed >= 0, [] { return "must be nonnegative"; });
  c.seed = static_cast<std::uint64_t>(std::max(seed, 0LL));

  for (const auto& [key, entry] : r.entries()) {
    if (key.rfind("output.", 0) == 0) continue;
    c.echo.emplace_back(key, entry.value);
  }
  if (!r.has("system.variant")) {
    c.echo.emplace_back("system.variant", c.variant);
    std::sort(c.echo.begin(), c.echo.end());
  }

  issues.insert(issues.end(), r.issues().begin(), r.issues().end());
  if (!issues.empty()) {
    std::stable_sort(issues.begin(), issues.end(),
                     [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
    throw ConfigError(std::move(issues));
  }
  return c;
}

SystemModel build_model(const ExperimentConfig& c) {
  const std::optional<double> rho_min = c.integration.rho_min;
  if (c.variant == "control_loop") {
    ControllerSpec spec;
    if (c.controller == "example_eq4") {
      spec = ControllerSpec::example_eq4();
    } else if (c.controller == "open_loop") {
      spec = ControllerSpec::open_loop(c.T, c.n);
    } else {
      spec = ControllerSpec::rational(c.T, c.gains);
    }
    return SystemModel::control_loop(spec, c.disturbance, rho_min);
  }
  const InjectionSpec spec = c.injection == "holloway"
                                 ? InjectionSpec::holloway(c.ell1, c.ell2, c.T)
                                 : InjectionSpec::rational(c.T, c.gains);
  return SystemModel::diff_error(spec, c.disturbance, rho_min);
}

}  // namespace ptrobust
