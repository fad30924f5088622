#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geodecomp/harness_config.hpp"
#include "geodecomp/harness_emit.hpp"
#include "geodecomp/harness_run.hpp"

namespace fs = std::filesystem;
namespace h = geodecomp::harness;

namespace {

constexpr int kExitConfig = 2;

fs::path scenario_dir() {
  if (const char* env = std::getenv("GEODECOMP_SCENARIO_DIR")) {
    return env;
  }
  return GEODECOMP_SCENARIO_DIR;
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("GEODECOMP_JOBS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed GEODECOMP_JOBS='" << env << "'\n";
    }
  }
  return 1;
}

// A bare name resolves to a built-in scenario file.
std::string resolve_config(const std::string& arg) {
  if (fs::exists(arg)) {
    return arg;
  }
  const fs::path builtin = scenario_dir() / (arg + ".json");
  if (fs::exists(builtin)) {
    return builtin.string();
  }
  return arg;
}

std::vector<fs::path> builtin_scenarios() {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(scenario_dir(), ec)) {
    if (e.path().extension() == ".json") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void summarize(const h::RunReport& report) {
  for (const auto& c : report.checks) {
    std::cerr << "  " << h::to_string(c.status) << "  " << c.name;
    if (!c.message.empty()) {
      std::cerr << "  (" << c.message << ")";
    }
    std::cerr << "\n";
  }
  std::cerr << report.scenario << ": " << (report.any_failed() ? "FAIL" : "PASS") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic decomposition verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string format = "json";
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = default_jobs();
  bool timing = false;

  auto* run = app.add_subcommand("run", "Run a scenario and emit its report");
  run->add_option("config", config_path, "Scenario file or built-in scenario name")->required();
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--out", out_path, "Output file (default: stdout)");
  run->add_option("--seed", seed, "Override the configured seed");
  run->add_option("--jobs", jobs, "Worker threads, 0 = all cores (default: GEODECOMP_JOBS or 1)");
  run->add_flag("--timing", timing, "Include wall-clock timings (report is no longer reproducible)");

  auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("config", validate_path, "Scenario file or built-in scenario name")->required();

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& p : builtin_scenarios()) {
      try {
        const auto c = h::load_config(p.string());
        std::cout << c.name << "\t" << c.description << "\n";
      } catch (const std::exception& e) {
        std::cout << p.stem().string() << "\tinvalid: " << e.what() << "\n";
      }
    }
    return 0;
  }

  if (*validate) {
    try {
      const auto c = h::load_config(resolve_config(validate_path));
      std::cout << c.name << ": valid (" << c.checks.size() << " checks)\n";
      return 0;
    } catch (const h::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
  }

  h::ScenarioConfig config;
  try {
    config = h::load_config(resolve_config(config_path));
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  h::RunOptions options;
  options.seed = seed;
  options.jobs = jobs;
  options.timing = timing;
  h::RunReport report;
  try {
    report = h::run(config, options);
  } catch (const std::exception& e) {
    std::cerr << "scenario setup failed: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto fmt = h::format_from_string(format);
  try {
    if (out_path.empty()) {
      std::cout << h::render(report, fmt);
    } else {
      h::emit(report, fmt, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  summarize(report);
  return report.exit_code();
}
