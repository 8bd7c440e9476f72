#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "avgtrack/error.hpp"
#include "avgtrack/scenario.hpp"

namespace avgtrack {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path golden(const std::string& name) {
  return fs::path(AVGTRACK_GOLDEN_DIR) / name;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected avgtrack::Error";
  return ErrorKind::kInvalidArgument;
}

TEST(Scenario, CannedNamesRoundTrip) {
  for (const auto& name : canned_scenario_names()) {
    const Scenario s = canned_scenario(name);
    const Scenario back = parse_scenario(to_json(s));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.mode, s.mode);
    EXPECT_EQ(back.graph.edges(), s.graph.edges());
    EXPECT_EQ(to_json(back), to_json(s)) << name;
  }
}

TEST(Scenario, AdaptiveCannedParameters) {
  const json j = json::parse(to_json(canned_scenario("paper-sec5-adaptive")));
  EXPECT_EQ(j["controller"]["mu"], 10);
  EXPECT_EQ(j["controller"]["nu"], 10);
  EXPECT_EQ(j["controller"]["theta"], 0.01);
  EXPECT_EQ(j["controller"]["chi"], 0.01);
  EXPECT_EQ(j["controller"]["eps"], 5);
  EXPECT_EQ(j["controller"]["phi"], 0.5);
  EXPECT_FALSE(j["assumptions"].empty());
}

TEST(Scenario, StaticCannedSetup) {
  const Scenario s = canned_scenario("paper-sec5-static");
  EXPECT_EQ(s.graph.n_nodes(), 6u);
  EXPECT_EQ(s.graph.edges(), Graph::ring(6).edges());
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(s.refs.initial_states[i](0), double(i + 1));
    EXPECT_EQ(s.refs.initial_states[i](1), -double(i + 1));
    EXPECT_EQ(s.refs.inputs[i].amplitude(0), (i + 2) / 2.0);
  }
}

TEST(Scenario, TwinIntegratorIsDoubleIntegrator) {
  const Scenario s = canned_scenario("twin-integrator");
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0, 0;
  EXPECT_EQ(s.refs.plant.a, a);
}

TEST(Scenario, UnknownCannedNameListsChoices) {
  try {
    canned_scenario("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigInvalid);
    for (const auto& name : canned_scenario_names())
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST(Scenario, RejectsUnknownKeysAndBadJson) {
  EXPECT_EQ(kind_of([] { load_scenario(golden("unknown_key.json")); }),
            ErrorKind::kConfigInvalid);
  EXPECT_EQ(kind_of([] { parse_scenario("{not json"); }), ErrorKind::kConfigInvalid);
  EXPECT_EQ(kind_of([] { parse_scenario(R"({"algorithm": "static"})"); }),
            ErrorKind::kConfigInvalid);
}

TEST(Scenario, RandomInitialStatesAreSeeded) {
  Scenario a = canned_scenario("ring-demo");
  a.random_initial_states = RandomInitialStates{0, 2.0};
  Scenario b = a;
  Scenario c = a;
  apply_random_initial_states(a, 7);
  apply_random_initial_states(b, 7);
  apply_random_initial_states(c, 8);
  EXPECT_EQ(a.refs.initial_states, b.refs.initial_states);
  EXPECT_NE(a.refs.initial_states, c.refs.initial_states);
  for (const auto& r0 : a.refs.initial_states)
    EXPECT_LE(r0.cwiseAbs().maxCoeff(), 2.0);
}

TEST(GainReport, ScalarIntegratorPair) {
  const Scenario s = load_scenario(golden("p2_integrator.json"));
  const GainReport r = design_report(s);
  EXPECT_TRUE(r.stabilizable);
  EXPECT_NEAR(r.k(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(r.c1, 0.25, 1e-12);
  EXPECT_NEAR(r.c2, 0.5, 1e-12);
  const std::string text = format_gain_report(s, r);
  EXPECT_NE(text.find("-1.000000"), std::string::npos) << text;
}

TEST(GainReport, DisconnectedGraphNamesConnectivity) {
  try {
    design_report(load_scenario(golden("disconnected.json")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotConnected);
    EXPECT_NE(std::string(e.what()).find("connected"), std::string::npos);
  }
}

TEST(Outputs, CsvHeadersMatchGolden) {
  EXPECT_EQ(trajectory_csv_header(2) + "\n", read_file(golden("trajectory_header_n2.csv")));
  EXPECT_EQ(diagnostics_csv_header() + "\n", read_file(golden("diagnostics_header.csv")));
}

TEST(Outputs, WritesAllFilesWithSummaryKeys) {
  const Scenario s = load_scenario(golden("p2_integrator.json"));
  const ScenarioRun run = run_scenario(s);
  const fs::path dir = fs::temp_directory_path() / "avgtrack_test_outputs";
  fs::remove_all(dir);
  write_run_outputs(dir, s, run, "test");
  for (auto f : {kTrajectoryFile, kDiagnosticsFile, kSummaryFile})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const std::string traj = read_file(dir / kTrajectoryFile);
  EXPECT_EQ(traj.substr(0, traj.find('\n') + 1), trajectory_csv_header(1) + "\n");
  const json j = json::parse(read_file(dir / kSummaryFile));
  for (const char* key : {"gamma", "lambda2", "c1", "c2", "omega2_radius",
                          "final_tracking_error", "sup_sum_invariant",
                          "envelope_violations", "version", "config"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["omega2_radius"].is_null());
  EXPECT_EQ(j["envelope_violations"], 0);
  EXPECT_EQ(j["version"], "test");
  fs::remove_all(dir);
}

TEST(Outputs, SummaryIsDeterministic) {
  const Scenario s = canned_scenario("twin-integrator");
  auto short_run = s;
  short_run.sim.t_end = 1.0;
  EXPECT_EQ(summary_json(short_run, run_scenario(short_run), "v"),
            summary_json(short_run, run_scenario(short_run), "v"));
}

}  // namespace
}  // namespace avgtrack
