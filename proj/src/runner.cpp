#include "ptrobust/runner.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ptrobust/analysis.hpp"
#include "ptrobust/attack.hpp"
#include "ptrobust/csv.hpp"
#include "ptrobust/oracle.hpp"

namespace ptrobust {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string vec(const Vector& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += num(v(i));
  }
  return out + ")";
}

std::string joined(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += " ";
    out += format_number(v[i]);
  }
  return out;
}

class Summary {
 public:
  explicit Summary(const ExperimentConfig& c) {
    add("scenario", scenario_name(c.scenario));
  }
  void add(const std::string& key, const std::string& value) {
    text_ += key + ": " + value + "\n";
  }
  void add(const std::string& key, double value) { add(key, num(value)); }
  void verdict(bool pass) { add("verdict", pass ? "pass" : "fail"); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class Writer {
 public:
  Writer(const ExperimentConfig& c, RunResult& result)
      : dir_(c.output_dir), prefix_(c.output_prefix), echo_(c.echo), result_(result) {}

  void csv(const std::string& name, CsvTable table) {
    auto comments = echo_comments(echo_);
    comments.insert(comments.end(), table.comments.begin(), table.comments.end());
    table.comments = std::move(comments);
    const auto path = dir_ / (prefix_ + name + ".csv");
    write_csv(path, table);
    result_.artifacts.push_back(path);
  }

  void text(const std::string& name, const std::string& body) {
    const auto path = dir_ / (prefix_ + name);
    write_text(path, body);
    result_.artifacts.push_back(path);
  }

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  const std::vector<std::pair<std::string, std::string>>& echo_;
  RunResult& result_;
};

std::vector<std::string> schedule_comments(const SwitchingSchedule& s,
                                           const Trajectory& traj,
                                           double noise_bound) {
  return {"noise_bound = " + format_number(noise_bound),
          "schedule t_k = " + joined(s.t_k),
          "schedule epsilon_k = " + joined(s.epsilon_k),
          "schedule t_prime = " + joined(s.t_prime),
          "schedule delta = " + format_number(s.delta),
          "switch_times = " + joined(traj.switch_times)};
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::ReachedEnd: return "reached_end";
    case Termination::BlowUp: return "blow_up";
    case Termination::StepUnderflow: return "step_underflow";
  }
  return "";
}

void describe_trajectory(Summary& s, const Trajectory& traj) {
  s.add("termination", termination_name(traj.termination));
  s.add("t_last", traj.t_last);
  s.add("final_state", vec(traj.final_state()));
  s.add("max_state_norm", traj.max_state_norm());
  s.add("max_noise_norm", traj.max_noise_norm());
  s.add("accepted_steps", std::to_string(traj.accepted_steps));
  s.add("rejected_steps", std::to_string(traj.rejected_steps));
  if (traj.blow_up) {
    s.add("blow_up", "t=" + num(traj.blow_up->t) + " norm=" + num(traj.blow_up->norm));
  }
}

void emit_trajectory(Writer& w, const ExperimentConfig& c, const Trajectory& traj,
                     std::vector<std::string> comments, const std::string& title) {
  w.csv("trajectory", trajectory_table(traj, std::move(comments)));
  if (c.plot) w.text("trajectory.svg", trajectory_svg(traj, title));
}

int simulate(const ExperimentConfig& c, const SystemModel& model, Writer& w, Summary& s) {
  std::unique_ptr<NoiseSource> noise;
  if (c.sim_noise.size() > 0) {
    noise = std::make_unique<ConstantNoise>(c.sim_noise, c.sim_noise_bound);
  } else {
    noise = std::make_unique<ZeroNoise>(model.noise_dimension());
  }
  const double t_end = c.sim_t_end.value_or(model.T() - c.integration.rho_min);
  const Trajectory traj = integrate(model, *noise, c.sim_x0, c.sim_t0, t_end, c.integration);
  emit_trajectory(w, c, traj,
                  {"noise_bound = " + format_number(noise->bound()),
                   "switch_times = " + joined(traj.switch_times)},
                  "simulate");
  describe_trajectory(s, traj);
  s.verdict(traj.reached_end());
  return traj.reached_end() ? kExitOk : kExitNumericalFailure;
}

int verify_deadline(const ExperimentConfig& c, const SystemModel& model, Writer& w,
                    Summary& s) {
  const DeadlineReport report = check_absolute_deadline(
      model, c.deadline_start_times, c.deadline_ics, c.deadline_rho, c.deadline_tol,
      c.integration);
  CsvTable table;
  table.comments = {"rho = " + format_number(report.rho), "tol = " + format_number(report.tol)};
  table.header.push_back("s");
  for (int i = 0; i < model.dimension(); ++i) table.header.push_back("xi" + std::to_string(i + 1));
  table.header.insert(table.header.end(), {"terminal_norm", "threshold", "pass"});
  int failures = 0;
  for (const auto& dc : report.cases) {
    std::vector<double> row{dc.s};
    for (Eigen::Index i = 0; i < dc.xi.size(); ++i) row.push_back(dc.xi(i));
    row.insert(row.end(), {dc.terminal_norm, dc.threshold, dc.pass ? 1.0 : 0.0});
    table.rows.push_back(std::move(row));
    if (!dc.failure.empty()) {
      s.add("failure", "s=" + num(dc.s) + " xi=" + vec(dc.xi) + ": " + dc.failure);
    }
    failures += dc.pass ? 0 : 1;
  }
  w.csv("deadline", table);

  if (!c.deadline_rho_ladder.empty()) {
    CsvTable order;
    order.comments = {"rho_ladder = " + joined(c.deadline_rho_ladder)};
    order.header.push_back("s");
    for (int i = 0; i < model.dimension(); ++i) order.header.push_back("xi" + std::to_string(i + 1));
    for (std::size_t k = 0; k < c.deadline_rho_ladder.size(); ++k) {
      order.header.push_back("norm_rho" + std::to_string(k + 1));
    }
    order.header.push_back("fitted_slope");
    double min_slope = std::numeric_limits<double>::infinity();
    for (double st : c.deadline_start_times) {
      for (const Vector& xi : c.deadline_ics) {
        std::vector<double> row{st};
        for (Eigen::Index i = 0; i < xi.size(); ++i) row.push_back(xi(i));
        try {
          const auto co =
              deadline_convergence_order(model, st, xi, c.deadline_rho_ladder, c.integration);
          row.insert(row.end(), co.terminal_norm.begin(), co.terminal_norm.end());
          row.push_back(co.fitted_slope);
          min_slope = std::min(min_slope, co.fitted_slope);
        } catch (const std::exception&) {
          row.resize(order.header.size(), kNaN);
        }
        order.rows.push_back(std::move(row));
      }
    }
    w.csv("deadline_order", order);
    s.add("min_fitted_slope", min_slope);
  }
  s.add("cases", std::to_string(report.cases.size()));
  s.add("failed_cases", std::to_string(failures));
  s.verdict(report.pass);
  return report.pass ? kExitOk : kExitPropertyFailed;
}

CsvTable peak_table(const std::vector<PeakCrossing>& peaks) {
  CsvTable t;
  t.header = {"threshold", "crossing_time"};
  for (const auto& p : peaks) t.rows.push_back({p.threshold, p.time.value_or(kNaN)});
  return t;
}

int attack(const ExperimentConfig& c, const SystemModel& model, Writer& w, Summary& s) {
  AttackOutcome out;
  switch (c.scenario) {
    case Scenario::AttackThm1i:
      out = run_controller_divergence(model, c.eta_bar, c.schedule, c.attack_x0, c.ladder,
                                      c.integration);
      break;
    case Scenario::AttackThm2i:
      out = run_differentiator_divergence(model, c.eta_bar, c.schedule, c.attack_x0,
                                          c.ladder, c.integration);
      break;
    case Scenario::AttackThm2ii:
      out = run_differentiator_terminal_error(model, c.eta_bar, c.epsilon, c.attack_x0,
                                              c.attack_rho, c.integration);
      break;
    default:
      if (c.thm1ii_mode == "steered") {
        out = run_controller_terminal_error_steered(model, c.eta_bar, c.epsilon, c.attack_x0,
                                                    c.attack_rho, c.integration);
      } else {
        const PsiCascade cascade =
            default_cascade(model.loop().controller, c.eta_bar, c.epsilon, c.profile);
        out = run_controller_terminal_error(model, c.eta_bar, cascade, c.attack_rho,
                                            c.integration);
      }
      break;
  }
  s.add("attack", out.name);
  s.add("noise_bound", out.noise_bound_used);
  if (!out.trajectory.samples.empty()) {
    emit_trajectory(w, c, out.trajectory,
                    schedule_comments(out.schedule, out.trajectory, out.noise_bound_used),
                    out.name);
    describe_trajectory(s, out.trajectory);
  }
  if (!out.peaks.empty()) {
    w.csv("peaks", peak_table(out.peaks));
    for (const auto& p : out.peaks) {
      s.add("crossing " + num(p.threshold), p.time ? num(*p.time) : "none");
    }
  }
  if (!out.schedule.t_k.empty()) s.add("switches", std::to_string(out.schedule.t_k.size()));
  if (out.start_time) s.add("start_time", *out.start_time);
  if (out.terminal) {
    s.add("terminal_rho", out.terminal_rho);
    s.add("terminal_state", vec(*out.terminal));
    s.add("terminal_norm", out.terminal->norm());
  }
  if (out.tracking_error) s.add("tracking_error", *out.tracking_error);
  s.add("detail", out.detail);
  s.verdict(out.verdict);
  return out.verdict ? kExitOk : kExitPropertyFailed;
}

int gain_scan(const ExperimentConfig& c, const SystemModel& model, Writer& w, Summary& s) {
  const GainScanTable table =
      model.is_control_loop()
          ? gain_supremum_scan(model.loop().controller, c.scan_delta, c.scan_rho_ladder)
          : gain_supremum_scan(model.diff().injection, c.scan_delta, c.scan_rho_ladder);
  CsvTable csv;
  csv.comments = {"delta = " + format_number(table.delta),
                  "pole_order = " + std::to_string(table.pole_order),
                  "leading_coefficient = " + format_number(table.leading_coefficient)};
  csv.header = {"rho", "supremum", "t", "channel", "leading_ratio"};
  const auto width = table.rows.empty() ? 0 : table.rows.front().arg.size();
  for (Eigen::Index i = 0; i < width; ++i) csv.header.push_back("arg" + std::to_string(i + 1));
  bool increasing = true;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    // supremum / (delta |c| rho^-p): tends to 1 as rho -> 0.
    const double lead = table.delta * std::abs(table.leading_coefficient) *
                        std::pow(r.rho, -static_cast<double>(table.pole_order));
    const double ratio = table.pole_order >= 0 && lead > 0.0 ? r.supremum / lead : kNaN;
    std::vector<double> row{r.rho, r.supremum, r.t, static_cast<double>(r.channel), ratio};
    for (Eigen::Index i = 0; i < r.arg.size(); ++i) row.push_back(r.arg(i));
    csv.rows.push_back(std::move(row));
    if (k > 0 && !(r.supremum > table.rows[k - 1].supremum)) increasing = false;
    s.add("rho " + num(r.rho), "sup=" + num(r.supremum) + " ratio=" + num(ratio));
  }
  w.csv("gain_scan", csv);
  s.add("pole_order", std::to_string(table.pole_order));
  s.add("leading_coefficient", table.leading_coefficient);
  s.verdict(increasing);
  return increasing ? kExitOk : kExitPropertyFailed;
}

int falsify(const ExperimentConfig& c, const SystemModel& model, Writer& w, Summary& s) {
  const StabilityWitness wit = falsify_uniform_stability(
      model, c.falsify_delta, c.falsify_epsilon, c.falsify_epsilon_prime, c.integration);
  emit_trajectory(w, c, wit.trajectory,
                  {"witness_s = " + format_number(wit.s),
                   "epsilon_prime = " + format_number(wit.epsilon_prime)},
                  "falsify-stability");
  s.add("delta", wit.delta);
  s.add("epsilon", wit.epsilon);
  s.add("epsilon_prime", wit.epsilon_prime);
  s.add("witness_s", wit.s);
  s.add("crossing_time", wit.crossing_time ? num(*wit.crossing_time) : "none");
  s.add("peak_norm", wit.peak_norm);
  s.add("peak_time", wit.peak_time);
  s.verdict(wit.falsified);
  return wit.falsified ? kExitOk : kExitPropertyFailed;
}

NoiseFactory workaround_noise(const ExperimentConfig& c, const SystemModel& model) {
  if (c.workaround_noise == "none") return {};
  ScheduleParams p;
  p.k_max = c.schedule.k_max;
  const double eta_bar = c.workaround_eta_bar;
  const double T = model.T();
  if (c.workaround_noise == "thm1i") {
    const int n = model.dimension();
    return [=] { return std::make_unique<ControllerDivergenceNoise>(eta_bar, n, T, p); };
  }
  return [=] { return std::make_unique<DifferentiatorDivergenceNoise>(eta_bar, T, p); };
}

int workaround(const ExperimentConfig& c, const SystemModel& model, Writer& w, Summary& s) {
  const NoiseFactory noise = workaround_noise(c, model);
  const bool stop = c.scenario == Scenario::StopTime;
  const WorkaroundReport report =
      stop ? evaluate_stop_time(model, c.t_stop, c.workaround_ics, noise, c.integration)
           : evaluate_deadzone(model, c.width, c.workaround_ics, noise, c.integration);
  CsvTable csv;
  csv.comments = {std::string(stop ? "t_stop" : "width") + " = " +
                  format_number(report.parameter)};
  const int n = model.dimension();
  for (int i = 0; i < n; ++i) csv.header.push_back("xi" + std::to_string(i + 1));
  if (stop) {
    for (int i = 0; i < n; ++i) csv.header.push_back("residual" + std::to_string(i + 1));
    csv.header.push_back("residual_norm");
  } else {
    csv.header.insert(csv.header.end(), {"entry_time", "gain_at_entry", "no_entry"});
  }
  for (const auto& wc : report.cases) {
    std::vector<double> row(wc.xi.data(), wc.xi.data() + wc.xi.size());
    if (stop) {
      for (int i = 0; i < n; ++i) row.push_back(wc.residual.size() == n ? wc.residual(i) : kNaN);
      row.push_back(wc.failure.empty() ? wc.residual_norm : kNaN);
      s.add("residual " + vec(wc.xi), wc.failure.empty() ? vec(wc.residual) : wc.failure);
    } else {
      row.push_back(wc.entry_time.value_or(kNaN));
      row.push_back(wc.entry_time ? wc.gain_at_entry : kNaN);
      row.push_back(wc.no_entry ? 1.0 : 0.0);
      s.add("entry " + vec(wc.xi),
            !wc.failure.empty() ? wc.failure
            : wc.entry_time     ? "t=" + num(*wc.entry_time) + " gain=" + num(wc.gain_at_entry)
                                : std::string("no entry before T - rho_min"));
    }
    csv.rows.push_back(std::move(row));
  }
  if (report.fit) {
    csv.comments.push_back("fit slope = " + format_number(report.fit->slope) +
                           " intercept = " + format_number(report.fit->intercept) +
                           " r_squared = " + format_number(report.fit->r_squared));
  }
  w.csv("workaround", csv);
  s.add("noise", c.workaround_noise);
  if (report.fit) {
    s.add("fit_slope", report.fit->slope);
    s.add("fit_r_squared", report.fit->r_squared);
  }
  if (!stop) s.add("any_no_entry", report.any_no_entry ? "yes" : "no");
  if (report.any_failure) {
    s.verdict(false);
    return kExitNumericalFailure;
  }
  bool pass = true;
  if (stop && c.workaround_noise == "none" && report.fit) {
    pass = report.fit->r_squared >= 0.999;
  }
  s.verdict(pass);
  return pass ? kExitOk : kExitPropertyFailed;
}

}  // namespace

RunResult run(const ExperimentConfig& c, std::ostream& diag) {
  RunResult result;
  Summary s(c);
  Writer w(c, result);
  try {
    const SystemModel model = build_model(c);
    switch (c.scenario) {
      case Scenario::Simulate: result.exit_code = simulate(c, model, w, s); break;
      case Scenario::VerifyDeadline: result.exit_code = verify_deadline(c, model, w, s); break;
      case Scenario::AttackThm1i:
      case Scenario::AttackThm1ii:
      case Scenario::AttackThm2i:
      case Scenario::AttackThm2ii: result.exit_code = attack(c, model, w, s); break;
      case Scenario::GainScan: result.exit_code = gain_scan(c, model, w, s); break;
      case Scenario::FalsifyStability: result.exit_code = falsify(c, model, w, s); break;
      case Scenario::StopTime:
      case Scenario::Deadzone: result.exit_code = workaround(c, model, w, s); break;
    }
  } catch (const NoiseBoundViolation& e) {
    diag << "noise bound violated: " << e.what() << "\n";
    s.add("error", e.what());
    result.exit_code = kExitPropertyFailed;
  } catch (const InfeasibleError& e) {
    diag << "infeasible parameters: " << e.what() << "\n";
    s.add("error", e.what());
    result.exit_code = kExitConfigError;
  } catch (const std::invalid_argument& e) {
    diag << "invalid parameters: " << e.what() << "\n";
    s.add("error", e.what());
    result.exit_code = kExitConfigError;
  } catch (const std::exception& e) {
    diag << "numerical failure: " << e.what() << "\n";
    s.add("error", e.what());
    result.exit_code = kExitNumericalFailure;
  }
  s.add("exit_code", std::to_string(result.exit_code));
  result.summary = s.text();
  try {
    w.text("summary.txt", result.summary);
  } catch (const std::exception& e) {
    diag << "cannot write summary: " << e.what() << "\n";
    if (result.exit_code == kExitOk) result.exit_code = kExitNumericalFailure;
  }
  return result;
}

namespace {

struct SelftestCase {
  const char* name;
  const char* config;
  int expected;
};

const SelftestCase kSelftest[] = {
    {"simulate", "scenario = simulate\nsimulate.x0 = 1, 0\nintegration.grid = geometric\n"
                 "integration.grid_count = 200\n", kExitOk},
    {"deadline_example", "scenario = verify-deadline\n", kExitOk},
    {"deadline_holloway", "system.variant = diff_error\nscenario = verify-deadline\n", kExitOk},
    {"deadline_open_loop", "system.controller = open_loop\nscenario = verify-deadline\n"
                           "deadline.initial_conditions = 0, 1\n", kExitPropertyFailed},
    {"thm1i", "scenario = attack.thm1i\nattack.eta_bar = 0.01\n", kExitOk},
    {"thm1ii", "scenario = attack.thm1ii\nattack.eta_bar = 0.1\nattack.epsilon = 0.5\n", kExitOk},
    {"thm2i", "scenario = attack.thm2i\nattack.eta_bar = 0.01\n", kExitOk},
    {"thm2ii", "scenario = attack.thm2ii\nattack.eta_bar = 0.1\nattack.epsilon = 1\n", kExitOk},
    {"gain_scan_example", "scenario = gain-scan\n", kExitOk},
    {"gain_scan_holloway", "system.variant = diff_error\nscenario = gain-scan\n", kExitOk},
    {"falsify", "scenario = falsify-stability\nfalsify.epsilon_prime = 2.5\n", kExitOk},
    {"stop_time", "scenario = workaround.stop-time\n", kExitOk},
    {"deadzone", "scenario = workaround.deadzone\n"
                 "workaround.initial_conditions = 1, 0; 10, 0; 100, 0\n", kExitOk},
};

}  // namespace

RunResult run_selftest(const std::filesystem::path& dir, std::uint64_t seed,
                       std::ostream& diag) {
  RunResult result;
  std::string summary = "selftest seed: " + std::to_string(seed) + "\n";
  bool all_expected = true;

  IntegrationOptions opts;
  const OracleReport oracle = verify_solver_against_oracle(20, 1e-6, seed, opts);
  CsvTable table;
  table.comments = {"seed = " + std::to_string(seed), "tol = " + format_number(oracle.tol)};
  table.header = {"s", "xi1", "xi2", "abs_error", "rel_error"};
  for (const auto& r : oracle.cases) {
    table.rows.push_back({r.input.s, r.input.xi(0), r.input.xi(1), r.abs_error, r.rel_error});
  }
  const auto oracle_path = dir / "oracle.csv";
  write_csv(oracle_path, table);
  result.artifacts.push_back(oracle_path);
  summary += std::string("oracle: ") + (oracle.pass ? "pass" : "fail") +
             " max_rel_error=" + num(oracle.max_rel_error) + "\n";
  all_expected = all_expected && oracle.pass;

  for (const auto& tc : kSelftest) {
    std::string code = std::string("output.dir = ") + (dir / tc.name).string() + "\n" + tc.config;
    int exit_code = kExitConfigError;
    try {
      const ExperimentConfig c = parse_config(code, {{"seed", std::to_string(seed)}});
      RunResult r = run(c, diag);
      exit_code = r.exit_code;
      result.artifacts.insert(result.artifacts.end(), r.artifacts.begin(), r.artifacts.end());
    } catch (const ConfigError& e) {
      diag << e.what() << "\n";
    }
    const bool ok = exit_code == tc.expected;
    all_expected = all_expected && ok;
    summary += std::string(tc.name) + ": exit " + std::to_string(exit_code) + " expected " +
               std::to_string(tc.expected) + (ok ? " ok" : " MISMATCH") + "\n";
  }
  result.exit_code = all_expected ? kExitOk : kExitPropertyFailed;
  summary += std::string("selftest: ") + (all_expected ? "pass" : "fail") + "\n";
  result.summary = summary;
  const auto path = dir / "selftest_summary.txt";
  write_text(path, summary);
  result.artifacts.push_back(path);
  return result;
}

}  // namespace ptrobust
