// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ptrobust/analysis.hpp"
#include "ptrobust/attack.hpp"
#include "ptrobust/oracle.hpp"
#include "ptrobust/runner.hpp"

using namespace ptrobust;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

SystemModel example_loop() { return SystemModel::control_loop(ControllerSpec::example_eq4()); }
SystemModel holloway() { return SystemModel::diff_error(InjectionSpec::holloway(1, 1, 1)); }

Verdict oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const OracleReport r = verify_solver_against_oracle(20, 1e-6, 1, {});
  const double elapsed = seconds_since(start);
  return {r.pass && r.cases.size() == 20 && elapsed < 10.0,
          fmt("max rel error %.3e over 20 cases, %.2f s", r.max_rel_error, elapsed)};
}

Verdict absolute_deadline() {
  const double starts[] = {0.0, 0.3, 0.6};
  const std::vector<Vector> grid = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                    Eigen::Vector2d(10, -10)};
  const double ladder[] = {1e-2, 1e-3, 1e-4};
  bool pass = true;
  double worst_ratio = 0.0;
  double min_slope = INFINITY;
  for (const auto& m : {example_loop(), holloway()}) {
    const auto r = check_absolute_deadline(m, starts, grid, 1e-3, 0.1, {});
    pass = pass && r.pass;
    for (const auto& c : r.cases) worst_ratio = std::max(worst_ratio, c.terminal_norm / c.threshold);
    for (double s : starts) {
      for (const auto& xi : grid) {
        const auto o = deadline_convergence_order(m, s, xi, ladder, {});
        min_slope = std::min(min_slope, o.fitted_slope);
      }
    }
  }
  pass = pass && min_slope >= 0.95;
  const auto open = SystemModel::control_loop(ControllerSpec::open_loop(1.0, 2));
  const bool control_fails = !check_absolute_deadline(open, starts, grid, 1e-3, 0.1, {}).pass;
  return {pass && control_fails,
          fmt("worst norm/threshold %.3e, min log-log slope %.4f, open loop rejected %.0f",
              worst_ratio, min_slope, control_fails ? 1.0 : 0.0)};
}

Verdict ramp_terminal_error() {
  const auto start = std::chrono::steady_clock::now();
  const std::pair<double, double> pairs[] = {{0.1, 1.0}, {0.01, 0.5}, {0.001, 0.2}};
  const Vector ics[] = {Vector::Zero(2), Eigen::Vector2d(5, -3)};
  bool pass = true;
  double worst = 0.0;
  for (const auto& [eta_bar, eps] : pairs) {
    for (const auto& x0 : ics) {
      const auto out = run_differentiator_terminal_error(holloway(), eta_bar, eps, x0, 1e-6, {});
      if (!out.terminal) {
        pass = false;
        continue;
      }
      const double err = std::abs((*out.terminal)(1) + eps) / eps;
      worst = std::max(worst, err);
      pass = pass && err <= 1e-3 && out.max_noise_norm <= eta_bar;
    }
  }
  const double elapsed = seconds_since(start);
  return {pass && elapsed < 30.0,
          fmt("worst |x2 + eps| / eps %.3e, %.2f s", worst, elapsed)};
}

Verdict prepared_terminal_error() {
  const auto m = example_loop();
  const PsiCascade cascade = default_cascade(m.loop().controller, 0.1, 0.5);
  const auto out = run_controller_terminal_error(m, 0.1, cascade, 1e-6, {});
  const double tracking = out.tracking_error.value_or(INFINITY);
  const double terminal = out.terminal ? out.terminal->norm() : 0.0;
  const bool pass = tracking <= 1e-6 && terminal >= 0.5 && out.max_noise_norm <= 0.1;
  return {pass, fmt("tracking error %.3e, terminal norm %.4f, max |eta| %.4f", tracking,
                    terminal, out.max_noise_norm)};
}

Verdict divergence_ladder() {
  const double ladder[] = {0.1, 1.0, 10.0};
  bool pass = true;
  std::string detail;
  for (double eta_bar : {1e-2, 1e-3}) {
    const auto a = run_controller_divergence(example_loop(), eta_bar, {}, Vector::Zero(2),
                                             ladder, {});
    const auto b = run_differentiator_divergence(holloway(), eta_bar, {}, Vector::Zero(2),
                                                 ladder, {});
    for (const auto* out : {&a, &b}) {
      const bool ok = ladder_crossed(out->peaks, 1.0 - 1e-9) && out->max_noise_norm <= eta_bar;
      pass = pass && ok;
      detail += out->name + fmt("(%.0e): last crossing %.9f; ", eta_bar,
                                out->peaks.empty() || !out->peaks.back().time
                                    ? NAN
                                    : *out->peaks.back().time);
    }
  }
  return {pass, detail};
}

Verdict gain_unboundedness() {
  const double ladder[] = {1e-1, 1e-2, 1e-3};
  const auto a = gain_supremum_scan(ControllerSpec::example_eq4(), 1.0, ladder);
  const auto b = gain_supremum_scan(InjectionSpec::holloway(1, 1, 1), 1.0, ladder);
  bool pass = true;
  std::string detail;
  for (const auto* t : {&a, &b}) {
    for (const auto& r : t->rows) {
      const double predicted = 6.0 / (r.rho * r.rho);
      const double rel = std::abs(r.supremum - predicted) / predicted;
      pass = pass && rel <= 0.05;
      detail += fmt("rho %.0e sup %.6g (%.2f%%); ", r.rho, r.supremum, 100.0 * rel);
    }
  }
  return {pass, detail};
}

Verdict stability_falsification() {
  const auto w = falsify_uniform_stability(example_loop(), 1.0, 2.0, 2.5, {});
  const bool pass = w.falsified && std::abs(w.s - 0.6) <= 1e-12 && w.peak_norm >= 3.7 &&
                    std::abs(w.peak_norm - 3.78) <= 0.02 * 3.78;
  return {pass, fmt("s %.6f, attained norm %.6f at t %.6f", w.s, w.peak_norm, w.peak_time)};
}

Verdict stop_time() {
  const std::vector<Vector> one = {Eigen::Vector2d(1, 0)};
  const auto r = evaluate_stop_time(example_loop(), 0.9, one, {}, {});
  const Vector& res = r.cases.front().residual;
  const double err = std::max(std::abs(res(0) - 0.028), std::abs(res(1) + 0.54));
  const std::vector<Vector> ics = {Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0),
                                   Eigen::Vector2d(5, 0), Eigen::Vector2d(10, 0)};
  const auto scaled = evaluate_stop_time(example_loop(), 0.9, ics, {}, {});
  const double r2 = scaled.fit ? scaled.fit->r_squared : 0.0;
  return {err <= 1e-6 && r2 >= 0.999,
          fmt("residual (%.9f, %.9f), R^2 %.12f", res(0), res(1), r2)};
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  const fs::path a = fs::temp_directory_path() / "ptrobust_acceptance_a";
  const fs::path b = fs::temp_directory_path() / "ptrobust_acceptance_b";
  fs::remove_all(a);
  fs::remove_all(b);
  std::ostringstream diag;
  const auto ra = run_selftest(a, 1, diag);
  const auto rb = run_selftest(b, 1, diag);
  const auto fa = files_under(a);
  const auto fb = files_under(b);
  std::size_t differing = fa == fb ? 0 : 1;
  if (fa == fb) {
    for (const auto& f : fa) differing += slurp(a / f) != slurp(b / f);
  }
  const bool pass = ra.exit_code == kExitOk && rb.exit_code == kExitOk && differing == 0 &&
                    !fa.empty();
  return {pass, fmt("%.0f files compared, %.0f differ, selftest exit %.0f",
                    static_cast<double>(fa.size()), static_cast<double>(differing),
                    static_cast<double>(ra.exit_code))};
}

}  // namespace

int main() {
  const std::function<Verdict()> criteria[] = {
      oracle_equivalence, absolute_deadline,       ramp_terminal_error,
      prepared_terminal_error, divergence_ladder,  gain_unboundedness,
      stability_falsification, stop_time,          determinism};
  int failures = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %zu: %s  %s\n", i + 1, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
