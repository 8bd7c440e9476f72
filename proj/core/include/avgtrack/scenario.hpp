#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "avgtrack/analysis.hpp"
#include "avgtrack/control.hpp"
#include "avgtrack/graph.hpp"
#include "avgtrack/numerics.hpp"
#include "avgtrack/signals.hpp"
#include "avgtrack/sim.hpp"

namespace avgtrack {

/// Controller section of a scenario. c1/c2 left empty are designed from the
/// graph and the input bound; adaptive-only fields are required in adaptive
/// mode.
struct ControllerSpec {
  Eigen::MatrixXd q;
  BoundaryLayer layer;
  DesignMargins margins;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<double> mu;
  std::optional<double> nu;
  std::optional<double> theta;
  std::optional<double> chi;
  double alpha0 = 0.0;
  double beta0 = 0.0;
};

struct RandomInitialStates {
  std::uint64_t seed = 0;
  double scale = 1.0;
};

struct Scenario {
  std::string name;
  std::vector<std::string> assumptions;
  Algorithm mode = Algorithm::kStatic;
  Graph graph;
  ReferenceSet refs;
  ControllerSpec controller;
  IntegratorOptions sim;
  NumericsConfig numerics;
  std::optional<double> alpha_bar;
  std::optional<double> beta_bar;
  double envelope_slack = 1e-6;
  std::optional<RandomInitialStates> random_initial_states;
};

/// Parses and cross-validates a JSON scenario. Unknown keys, missing required
/// keys and dimension mismatches throw Error(kConfigInvalid).
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON (2-space indent). parse_scenario(to_json(s)) reproduces s.
std::string to_json(const Scenario& s);

const std::vector<std::string>& canned_scenario_names();
/// Throws Error(kConfigInvalid) naming the valid choices for unknown names.
Scenario canned_scenario(std::string_view name);

/// Replaces r_i(0) by uniform draws in [-scale, scale] when the scenario asks
/// for randomized initial states. `seed` overrides the configured seed.
void apply_random_initial_states(Scenario& s,
                                 std::optional<std::uint64_t> seed = {});

struct GainReport {
  bool stabilizable = false;
  Eigen::MatrixXd p;
  Eigen::MatrixXd k;
  Eigen::MatrixXd gamma_matrix;
  double are_residual = 0.0;
  int are_iterations = 0;
  double lambda2 = 0.0;
  double f0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double gamma = 0.0;
};

/// Runs the gain design steps in order: Riccati solve (needs a stabilizable
/// plant), then the coupling strengths (need a connected graph). Errors carry
/// the failing step in their message.
GainReport design_report(const Scenario& s);
std::string format_gain_report(const Scenario& s, const GainReport& r);

SimConfig build_sim_config(const Scenario& s);

struct ScenarioRun {
  SimConfig config;
  Trajectory trajectory;
  RunAnalysis analysis;
};

ScenarioRun run_scenario(const Scenario& s);

inline constexpr std::string_view kTrajectoryFile = "trajectory.csv";
inline constexpr std::string_view kDiagnosticsFile = "diagnostics.csv";
inline constexpr std::string_view kSummaryFile = "summary.json";

std::string trajectory_csv_header(Eigen::Index state_dim);
std::string diagnostics_csv_header();

/// Writes trajectory.csv, diagnostics.csv and summary.json into `out_dir`
/// (created if missing).
void write_run_outputs(const std::filesystem::path& out_dir, const Scenario& s,
                       const ScenarioRun& run, std::string_view version);

std::string summary_json(const Scenario& s, const ScenarioRun& run,
                         std::string_view version);

}  // namespace avgtrack
