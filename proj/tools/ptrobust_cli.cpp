#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ptrobust/config.hpp"
#include "ptrobust/runner.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Accepts "--key=value" and "--key value" for every config key.
bool collect_key_flags(const std::vector<std::string>& args, Overrides& out) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) {
      std::cerr << "unexpected argument '" << a << "'\n";
      return false;
    }
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < args.size()) {
      out.emplace_back(a.substr(2), args[i + 1]);
      ++i;
    } else {
      std::cerr << "flag '" << a << "' needs a value\n";
      return false;
    }
  }
  return true;
}

bool split_assignment(const std::string& s, Overrides& out) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) {
    std::cerr << "--set expects key=value, got '" << s << "'\n";
    return false;
  }
  out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  return true;
}

struct Common {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("-c,--config", common.config_path, "Experiment config file");
  sub->add_option("-o,--output-dir", common.output_dir, "Artifact directory");
  sub->add_option("--set", common.sets, "Config override key=value (repeatable)");
  sub->allow_extras();
  sub->footer("Any config key may also be given as --key=value.");
}

int run_scenario(CLI::App* sub, const Common& common, const std::string& scenario) {
  std::string text;
  if (!common.config_path.empty()) {
    std::ifstream in(common.config_path);
    if (!in) {
      std::cerr << "cannot read config '" << common.config_path << "'\n";
      return ptrobust::kExitConfigError;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  Overrides overrides;
  if (const char* env = std::getenv("PTROBUST_OUTPUT_DIR"); env && *env) {
    overrides.emplace_back("output.dir", env);
  }
  for (const auto& s : common.sets) {
    if (!split_assignment(s, overrides)) return ptrobust::kExitConfigError;
  }
  if (!collect_key_flags(sub->remaining(), overrides)) return ptrobust::kExitConfigError;
  if (!common.output_dir.empty()) overrides.emplace_back("output.dir", common.output_dir);
  overrides.emplace_back("scenario", scenario);

  // Later overrides win; keep only the last assignment per key.
  Overrides last;
  for (auto it = overrides.rbegin(); it != overrides.rend(); ++it) {
    bool seen = false;
    for (const auto& kv : last) seen = seen || kv.first == it->first;
    if (!seen) last.push_back(*it);
  }

  ptrobust::ExperimentConfig config;
  try {
    config = ptrobust::parse_config(text, last);
  } catch (const ptrobust::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return ptrobust::kExitConfigError;
  }
  const ptrobust::RunResult result = ptrobust::run(config, std::cerr);
  std::cout << result.summary;
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-time robustness toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string attack_kind;
  std::string workaround_kind;

  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory");
  auto* deadline = app.add_subcommand("verify-deadline", "Check the absolute deadline on a grid");
  auto* attack = app.add_subcommand("attack", "Run an adversarial noise construction");
  auto* scan = app.add_subcommand("gain-scan", "Tabulate gain suprema near the deadline");
  auto* falsify = app.add_subcommand("falsify-stability", "Search a uniform-stability witness");
  auto* workaround = app.add_subcommand("workaround", "Evaluate stop-time or deadzone switching");
  auto* selftest = app.add_subcommand("selftest", "Run the fixed deterministic suite");

  for (auto* sub : {simulate, deadline, attack, scan, falsify, workaround}) {
    add_common(sub, common);
  }
  attack->add_option("kind", attack_kind, "thm1i | thm1ii | thm2i | thm2ii")
      ->required()
      ->check(CLI::IsMember({"thm1i", "thm1ii", "thm2i", "thm2ii"}));
  workaround->add_option("kind", workaround_kind, "stop-time | deadzone")
      ->required()
      ->check(CLI::IsMember({"stop-time", "deadzone"}));

  std::string selftest_dir = "selftest_out";
  std::uint64_t seed = 1;
  selftest->add_option("-o,--output-dir", selftest_dir, "Artifact directory");
  selftest->add_option("--seed", seed, "Seed for the randomized oracle cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ptrobust::kExitConfigError;
  }

  if (simulate->parsed()) return run_scenario(simulate, common, "simulate");
  if (deadline->parsed()) return run_scenario(deadline, common, "verify-deadline");
  if (attack->parsed()) return run_scenario(attack, common, "attack." + attack_kind);
  if (scan->parsed()) return run_scenario(scan, common, "gain-scan");
  if (falsify->parsed()) return run_scenario(falsify, common, "falsify-stability");
  if (workaround->parsed()) {
    return run_scenario(workaround, common, "workaround." + workaround_kind);
  }

  if (const char* env = std::getenv("PTROBUST_OUTPUT_DIR");
      env && *env && selftest->count("--output-dir") == 0) {
    selftest_dir = env;
  }
  try {
    const ptrobust::RunResult result = ptrobust::run_selftest(selftest_dir, seed, std::cerr);
    std::cout << result.summary;
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "selftest failed: " << e.what() << "\n";
    return ptrobust::kExitNumericalFailure;
  }
}
