// avgtrack: gain design, simulation and canned scenarios for distributed
// average tracking.
//
//   avgtrack gains --config scenario.json
//   avgtrack run --config scenario.json --out results/ [--dt X] [--t-end Y] [--seed S]
//   avgtrack scenario paper-sec5-static > scenario.json
//
// Exit codes: 0 success, 1 runtime/numerical failure, 2 config/validation
// failure.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "avgtrack/error.hpp"
#include "avgtrack/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int exit_code_for(const avgtrack::Error& e) {
  switch (e.kind()) {
    case avgtrack::ErrorKind::kNonFinite:
    case avgtrack::ErrorKind::kNoConvergence:
    case avgtrack::ErrorKind::kSingularSystem:
      return kExitRuntime;
    default:
      return kExitConfig;
  }
}

unsigned sweep_threads(std::size_t jobs) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AVGTRACK_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) cap = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed AVGTRACK_THREADS='" << env
                << "'\n";
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(cap, jobs));
}

int cmd_gains(const std::string& config_path) {
  const avgtrack::Scenario s = avgtrack::load_scenario(config_path);
  const avgtrack::GainReport report = avgtrack::design_report(s);
  std::cout << avgtrack::format_gain_report(s, report);
  return kExitOk;
}

struct RunJob {
  std::string config_path;
  std::filesystem::path out_dir;
};

int run_one(const RunJob& job, std::optional<double> dt,
            std::optional<double> t_end, std::optional<std::uint64_t> seed,
            std::mutex& log_mutex) {
  auto log = [&](const std::string& line) {
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << line << '\n';
  };
  try {
    avgtrack::Scenario s = avgtrack::load_scenario(job.config_path);
    if (dt) s.sim.dt = *dt;
    if (t_end) s.sim.t_end = *t_end;
    s.sim.validate();
    avgtrack::apply_random_initial_states(s, seed);
    const avgtrack::ScenarioRun run = avgtrack::run_scenario(s);
    avgtrack::write_run_outputs(job.out_dir, s, run, AVGTRACK_VERSION);
    const auto& m = run.analysis.summary;
    log(fmt::format("{}: {} samples, max final tracking error {:.3e}, "
                    "sup |S| {:.3e}, envelope violations {} -> {}",
                    s.name, run.trajectory.times.size(),
                    m.final_tracking_error_max, m.sup_sum_invariant,
                    m.envelope_violations, job.out_dir.string()));
    return kExitOk;
  } catch (const avgtrack::Error& e) {
    std::string where;
    if (e.time()) where = fmt::format(" (t = {})", *e.time());
    log(fmt::format("error: {}: {}{}", job.config_path, e.what(), where));
    return exit_code_for(e);
  }
}

int cmd_run(const std::vector<std::string>& configs, const std::string& out,
            std::optional<double> dt, std::optional<double> t_end,
            std::optional<std::uint64_t> seed) {
  std::vector<RunJob> jobs;
  if (configs.size() == 1) {
    jobs.push_back({configs.front(), out});
  } else {
    // Independent sweep members each get their own directory.
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const auto stem = std::filesystem::path(configs[k]).stem().string();
      jobs.push_back({configs[k],
                      std::filesystem::path(out) / fmt::format("{:03d}-{}", k, stem)});
    }
  }
  std::vector<int> codes(jobs.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const unsigned workers = sweep_threads(jobs.size());
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs.size(); k = next++) {
        codes[k] = run_one(jobs[k], dt, t_end, seed, log_mutex);
      }
    });
  }
  pool.clear();
  return *std::max_element(codes.begin(), codes.end());
}

int cmd_scenario(const std::string& name) {
  std::cout << avgtrack::to_json(avgtrack::canned_scenario(name)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed average tracking: gain design and simulation"};
  app.set_version_flag("--version", AVGTRACK_VERSION);
  app.require_subcommand(1);

  std::string gains_config;
  auto* gains = app.add_subcommand("gains", "Design and print controller gains");
  gains->add_option("--config", gains_config, "Scenario JSON")->required();

  std::vector<std::string> run_configs;
  std::string run_out;
  std::optional<double> run_dt;
  std::optional<double> run_t_end;
  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write results");
  run->add_option("--config", run_configs,
                  "Scenario JSON (repeat for a parallel sweep)")
      ->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--dt", run_dt, "Override the integration step");
  run->add_option("--t-end", run_t_end, "Override the horizon");
  run->add_option("--seed", run_seed,
                  "Seed for randomized initial states (if the scenario uses them)");

  std::string scenario_name;
  auto* scenario = app.add_subcommand("scenario", "Print a bundled scenario");
  scenario->add_option("name", scenario_name, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gains) return cmd_gains(gains_config);
    if (*run) return cmd_run(run_configs, run_out, run_dt, run_t_end, run_seed);
    if (*scenario) return cmd_scenario(scenario_name);
  } catch (const avgtrack::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
