#include "avgtrack/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "avgtrack/error.hpp"

namespace avgtrack {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::kConfigInvalid, message);
}

void check_keys(const json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_error(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

const json& require(const json& obj, std::string_view where,
                    const std::string& key) {
  if (!obj.contains(key)) {
    config_error(fmt::format("missing key '{}' in {}", key, where));
  }
  return obj.at(key);
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) config_error(fmt::format("{} must be a number", what));
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(fmt::format("{} must be finite", what));
  return d;
}

std::optional<double> optional_number(const json& obj, const std::string& key,
                                      std::string_view where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj.at(key), fmt::format("{}.{}", where, key));
}

Eigen::VectorXd vector_of(const json& v, std::string_view what) {
  if (!v.is_array()) config_error(fmt::format("{} must be an array", what));
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = number(v[i], what);
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, std::string_view what) {
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
    config_error(fmt::format("{} must be a nonempty array of rows", what));
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      config_error(fmt::format("{} has ragged rows", what));
    }
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = number(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

json to_json_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json_matrix(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

InputDescriptor parse_input(const json& v, Eigen::Index input_dim,
                            const std::string& where) {
  const std::string kind =
      require(v, where, "kind").is_string() ? v.at("kind").get<std::string>()
                                            : std::string{};
  if (kind == "zero") {
    check_keys(v, where, {"kind"});
    return InputDescriptor::zero(input_dim);
  }
  if (kind == "constant") {
    check_keys(v, where, {"kind", "value"});
    return InputDescriptor::constant(
        vector_of(require(v, where, "value"), where + ".value"));
  }
  if (kind == "sinusoid") {
    check_keys(v, where, {"kind", "amp", "omega", "phase", "offset"});
    Eigen::VectorXd offset;
    if (v.contains("offset")) offset = vector_of(v.at("offset"), where + ".offset");
    return InputDescriptor::sinusoid(
        vector_of(require(v, where, "amp"), where + ".amp"),
        number(require(v, where, "omega"), where + ".omega"),
        v.contains("phase") ? number(v.at("phase"), where + ".phase") : 0.0,
        std::move(offset));
  }
  if (kind == "table") {
    check_keys(v, where, {"kind", "times", "values"});
    const Eigen::VectorXd times =
        vector_of(require(v, where, "times"), where + ".times");
    const json& values = require(v, where, "values");
    if (!values.is_array()) config_error(where + ".values must be an array");
    std::vector<Eigen::VectorXd> samples;
    for (const auto& s : values) samples.push_back(vector_of(s, where + ".values"));
    return InputDescriptor::table(
        std::vector<double>(times.data(), times.data() + times.size()),
        std::move(samples));
  }
  config_error(fmt::format(
      "{}.kind must be one of zero, constant, sinusoid, table", where));
}

json input_to_json(const InputDescriptor& d) {
  switch (d.kind) {
    case InputDescriptor::Kind::kZero:
      return {{"kind", "zero"}};
    case InputDescriptor::Kind::kConstant:
      return {{"kind", "constant"}, {"value", to_json_vector(d.value)}};
    case InputDescriptor::Kind::kSinusoid: {
      json out = {{"kind", "sinusoid"},
                  {"amp", to_json_vector(d.amplitude)},
                  {"omega", d.omega},
                  {"phase", d.phase}};
      if (d.value.size() > 0 && d.value.norm() > 0.0)
        out["offset"] = to_json_vector(d.value);
      return out;
    }
    case InputDescriptor::Kind::kTable: {
      json values = json::array();
      for (const auto& s : d.samples) values.push_back(to_json_vector(s));
      return {{"kind", "table"}, {"times", d.times}, {"values", values}};
    }
  }
  return {};
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(fmt::format("malformed JSON: {}", e.what()));
  }
  check_keys(root, "scenario",
             {"name", "assumptions", "algorithm", "graph", "signals",
              "random_initial_states", "controller", "analysis", "sim",
              "numerics"});

  Scenario s;
  try {
    s.name = root.value("name", std::string{"unnamed"});
    if (root.contains("assumptions")) {
      for (const auto& a : root.at("assumptions")) {
        if (!a.is_string()) config_error("assumptions must be strings");
        s.assumptions.push_back(a.get<std::string>());
      }
    }
    const json& algo = require(root, "scenario", "algorithm");
    if (!algo.is_string()) config_error("algorithm must be a string");
    s.mode = parse_algorithm(algo.get<std::string>());

    // graph
    const json& gj = require(root, "scenario", "graph");
    check_keys(gj, "graph", {"n", "edges"});
    const json& nj = require(gj, "graph", "n");
    if (!nj.is_number_integer() || nj.get<long long>() < 1) {
      config_error("graph.n must be a positive integer");
    }
    const auto n_nodes = nj.get<std::size_t>();
    std::vector<Graph::Edge> edges;
    const json& ej = require(gj, "graph", "edges");
    if (!ej.is_array()) config_error("graph.edges must be an array");
    for (const auto& e : ej) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer() || e[0].get<long long>() < 0 ||
          e[1].get<long long>() < 0) {
        config_error("graph.edges entries must be pairs of node indices");
      }
      edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    try {
      s.graph = Graph(n_nodes, std::move(edges));
    } catch (const Error& e) {
      config_error(fmt::format("graph: {}", e.what()));
    }

    // signals
    const json& sj = require(root, "scenario", "signals");
    check_keys(sj, "signals", {"A", "B", "agents"});
    s.refs.plant.a = matrix_of(require(sj, "signals", "A"), "signals.A");
    s.refs.plant.b = matrix_of(require(sj, "signals", "B"), "signals.B");
    try {
      s.refs.plant.validate();
    } catch (const Error& e) {
      config_error(fmt::format("signals: {}", e.what()));
    }
    const json& agents = require(sj, "signals", "agents");
    if (!agents.is_array()) config_error("signals.agents must be an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string where = fmt::format("signals.agents[{}]", i);
      check_keys(agents[i], where, {"r0", "input"});
      s.refs.initial_states.push_back(
          vector_of(require(agents[i], where, "r0"), where + ".r0"));
      if (agents[i].contains("input")) {
        s.refs.inputs.push_back(parse_input(agents[i].at("input"),
                                            s.refs.plant.input_dim(),
                                            where + ".input"));
      } else {
        s.refs.inputs.push_back(InputDescriptor::zero(s.refs.plant.input_dim()));
      }
    }
    try {
      s.refs.validate();
    } catch (const Error& e) {
      config_error(fmt::format("signals: {}", e.what()));
    }
    if (s.graph.n_nodes() != s.refs.size()) {
      config_error(fmt::format("graph.n = {} but {} agents are configured",
                               s.graph.n_nodes(), s.refs.size()));
    }

    if (root.contains("random_initial_states")) {
      const json& rj = root.at("random_initial_states");
      check_keys(rj, "random_initial_states", {"seed", "scale"});
      RandomInitialStates r;
      const json& seed = require(rj, "random_initial_states", "seed");
      if (!seed.is_number_unsigned()) {
        config_error("random_initial_states.seed must be a nonnegative integer");
      }
      r.seed = seed.get<std::uint64_t>();
      r.scale = number(require(rj, "random_initial_states", "scale"),
                       "random_initial_states.scale");
      if (!(r.scale > 0.0)) config_error("random_initial_states.scale must be > 0");
      s.random_initial_states = r;
    }

    // controller
    const json& cj = require(root, "scenario", "controller");
    check_keys(cj, "controller",
               {"Q", "eps", "phi", "margins", "c1", "c2", "mu", "nu", "theta",
                "chi", "alpha0", "beta0"});
    auto& c = s.controller;
    const Eigen::Index n = s.refs.plant.state_dim();
    c.q = cj.contains("Q") ? matrix_of(cj.at("Q"), "controller.Q")
                           : Eigen::MatrixXd::Identity(n, n);
    if (c.q.rows() != n || c.q.cols() != n) {
      config_error(fmt::format("controller.Q must be {}x{}", n, n));
    }
    c.layer.eps = number(require(cj, "controller", "eps"), "controller.eps");
    c.layer.phi = number(require(cj, "controller", "phi"), "controller.phi");
    try {
      c.layer.validate();
    } catch (const Error& e) {
      config_error(fmt::format("controller: {}", e.what()));
    }
    if (cj.contains("margins")) {
      const Eigen::VectorXd m = vector_of(cj.at("margins"), "controller.margins");
      if (m.size() != 2 || !(m(0) >= 1.0) || !(m(1) >= 1.0)) {
        config_error("controller.margins must be two numbers >= 1");
      }
      c.margins = {m(0), m(1)};
    }
    c.c1 = optional_number(cj, "c1", "controller");
    c.c2 = optional_number(cj, "c2", "controller");
    c.mu = optional_number(cj, "mu", "controller");
    c.nu = optional_number(cj, "nu", "controller");
    c.theta = optional_number(cj, "theta", "controller");
    c.chi = optional_number(cj, "chi", "controller");
    c.alpha0 = optional_number(cj, "alpha0", "controller").value_or(0.0);
    c.beta0 = optional_number(cj, "beta0", "controller").value_or(0.0);
    if ((c.c1 && *c.c1 < 0.0) || (c.c2 && *c.c2 < 0.0)) {
      config_error("controller.c1 and controller.c2 must be >= 0");
    }
    if (s.mode == Algorithm::kAdaptive) {
      for (const auto& [key, val] :
           {std::pair{"mu", c.mu}, std::pair{"nu", c.nu},
            std::pair{"theta", c.theta}, std::pair{"chi", c.chi}}) {
        if (!val) config_error(fmt::format("adaptive mode needs controller.{}", key));
        if (!(*val > 0.0)) config_error(fmt::format("controller.{} must be > 0", key));
      }
    }

    if (root.contains("analysis")) {
      const json& aj = root.at("analysis");
      check_keys(aj, "analysis", {"alpha_bar", "beta_bar", "envelope_slack"});
      s.alpha_bar = optional_number(aj, "alpha_bar", "analysis");
      s.beta_bar = optional_number(aj, "beta_bar", "analysis");
      s.envelope_slack =
          optional_number(aj, "envelope_slack", "analysis").value_or(1e-6);
    }

    const json& simj = require(root, "scenario", "sim");
    check_keys(simj, "sim", {"t_end", "dt", "record_every", "integrator"});
    s.sim.t_end = number(require(simj, "sim", "t_end"), "sim.t_end");
    s.sim.dt = number(require(simj, "sim", "dt"), "sim.dt");
    if (simj.contains("record_every")) {
      if (!simj.at("record_every").is_number_integer()) {
        config_error("sim.record_every must be an integer");
      }
      s.sim.record_every = simj.at("record_every").get<int>();
    }
    if (simj.contains("integrator")) {
      s.sim.method = parse_integrator(simj.at("integrator").get<std::string>());
    }
    s.sim.validate();

    if (root.contains("numerics")) {
      const json& mj = root.at("numerics");
      check_keys(mj, "numerics",
                 {"symmetry_tol", "rank_tol", "lyapunov_singular_tol",
                  "are_step_tol", "are_max_iterations", "are_residual_tol"});
      auto& cfg = s.numerics;
      cfg.symmetry_tol =
          optional_number(mj, "symmetry_tol", "numerics").value_or(cfg.symmetry_tol);
      cfg.rank_tol = optional_number(mj, "rank_tol", "numerics").value_or(cfg.rank_tol);
      cfg.lyapunov_singular_tol =
          optional_number(mj, "lyapunov_singular_tol", "numerics")
              .value_or(cfg.lyapunov_singular_tol);
      cfg.are_step_tol =
          optional_number(mj, "are_step_tol", "numerics").value_or(cfg.are_step_tol);
      cfg.are_residual_tol = optional_number(mj, "are_residual_tol", "numerics")
                                 .value_or(cfg.are_residual_tol);
      if (mj.contains("are_max_iterations")) {
        if (!mj.at("are_max_iterations").is_number_integer() ||
            mj.at("are_max_iterations").get<int>() < 1) {
          config_error("numerics.are_max_iterations must be a positive integer");
        }
        cfg.are_max_iterations = mj.at("are_max_iterations").get<int>();
      }
    }
  } catch (const json::exception& e) {
    config_error(fmt::format("bad value type: {}", e.what()));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error(fmt::format("cannot read config '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string to_json(const Scenario& s) {
  json root;
  root["name"] = s.name;
  if (!s.assumptions.empty()) root["assumptions"] = s.assumptions;
  root["algorithm"] = std::string(to_string(s.mode));

  json edges = json::array();
  for (auto [i, j] : s.graph.edges()) edges.push_back({i, j});
  root["graph"] = {{"n", s.graph.n_nodes()}, {"edges", edges}};

  json agents = json::array();
  for (std::size_t i = 0; i < s.refs.size(); ++i) {
    agents.push_back({{"r0", to_json_vector(s.refs.initial_states[i])},
                      {"input", input_to_json(s.refs.inputs[i])}});
  }
  root["signals"] = {{"A", to_json_matrix(s.refs.plant.a)},
                     {"B", to_json_matrix(s.refs.plant.b)},
                     {"agents", agents}};
  if (s.random_initial_states) {
    root["random_initial_states"] = {{"seed", s.random_initial_states->seed},
                                     {"scale", s.random_initial_states->scale}};
  }

  const auto& c = s.controller;
  json cj = {{"Q", to_json_matrix(c.q)},
             {"eps", c.layer.eps},
             {"phi", c.layer.phi},
             {"margins", {c.margins.c1, c.margins.c2}}};
  if (c.c1) cj["c1"] = *c.c1;
  if (c.c2) cj["c2"] = *c.c2;
  if (c.mu) cj["mu"] = *c.mu;
  if (c.nu) cj["nu"] = *c.nu;
  if (c.theta) cj["theta"] = *c.theta;
  if (c.chi) cj["chi"] = *c.chi;
  if (s.mode == Algorithm::kAdaptive) {
    cj["alpha0"] = c.alpha0;
    cj["beta0"] = c.beta0;
  }
  root["controller"] = cj;

  json aj = {{"envelope_slack", s.envelope_slack}};
  if (s.alpha_bar) aj["alpha_bar"] = *s.alpha_bar;
  if (s.beta_bar) aj["beta_bar"] = *s.beta_bar;
  root["analysis"] = aj;

  root["sim"] = {{"t_end", s.sim.t_end},
                 {"dt", s.sim.dt},
                 {"record_every", s.sim.record_every},
                 {"integrator", std::string(to_string(s.sim.method))}};
  const auto& m = s.numerics;
  root["numerics"] = {{"symmetry_tol", m.symmetry_tol},
                      {"rank_tol", m.rank_tol},
                      {"lyapunov_singular_tol", m.lyapunov_singular_tol},
                      {"are_step_tol", m.are_step_tol},
                      {"are_max_iterations", m.are_max_iterations},
                      {"are_residual_tol", m.are_residual_tol}};
  return root.dump(2);
}

namespace {

Scenario reference_example(Algorithm mode) {
  constexpr std::size_t kAgents = 6;
  Scenario s;
  s.name = mode == Algorithm::kAdaptive ? "paper-sec5-adaptive"
                                        : "paper-sec5-static";
  s.assumptions = {
      "topology: the reference example's communication graph is not "
      "recoverable; ring C6 (edges i~i+1 and 0~5) is used as a stand-in",
      "initial states: not given by the reference example; r_i(0) = (i, -i) "
      "for agents i = 1..6",
  };
  s.mode = mode;
  s.graph = Graph::ring(kAgents);
  s.refs.plant.a = (Eigen::MatrixXd(2, 2) << 0.0, 1.0, -1.0, -2.0).finished();
  s.refs.plant.b = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  for (std::size_t k = 0; k < kAgents; ++k) {
    const double i = static_cast<double>(k + 1);
    s.refs.initial_states.push_back((Eigen::VectorXd(2) << i, -i).finished());
    s.refs.inputs.push_back(InputDescriptor::sinusoid(
        Eigen::VectorXd::Constant(1, (i + 1.0) / 2.0), 1.0, 0.0));
  }
  s.controller.q = Eigen::MatrixXd::Identity(2, 2);
  s.controller.layer = {5.0, 0.5};
  if (mode == Algorithm::kAdaptive) {
    s.controller.mu = 10.0;
    s.controller.nu = 10.0;
    s.controller.theta = 0.01;
    s.controller.chi = 0.01;
  }
  s.sim = {20.0, 1e-3, 1, Integrator::kRk4};
  return s;
}

Scenario twin_integrator() {
  Scenario s;
  s.name = "twin-integrator";
  s.assumptions = {
      "double-integrator references: A is not Hurwitz, so tracking relies on "
      "the zero initial filter state"};
  s.mode = Algorithm::kStatic;
  s.graph = Graph::path(2);
  s.refs.plant.a = (Eigen::MatrixXd(2, 2) << 0.0, 1.0, 0.0, 0.0).finished();
  s.refs.plant.b = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  s.refs.initial_states = {(Eigen::VectorXd(2) << 1.0, 0.0).finished(),
                           (Eigen::VectorXd(2) << -1.0, 0.5).finished()};
  s.refs.inputs = {
      InputDescriptor::sinusoid(Eigen::VectorXd::Constant(1, 1.0), 1.0, 0.0),
      InputDescriptor::sinusoid(Eigen::VectorXd::Constant(1, 2.0), 0.5,
                                std::numbers::pi / 2.0)};
  s.controller.q = Eigen::MatrixXd::Identity(2, 2);
  s.controller.layer = {1.0, 0.2};
  s.sim = {20.0, 1e-3, 1, Integrator::kRk4};
  return s;
}

Scenario ring_demo() {
  constexpr std::size_t kAgents = 8;
  Scenario s;
  s.name = "ring-demo";
  s.mode = Algorithm::kStatic;
  s.graph = Graph::ring(kAgents);
  s.refs.plant.a = (Eigen::MatrixXd(2, 2) << 0.0, 1.0, -1.0, -2.0).finished();
  s.refs.plant.b = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  for (std::size_t k = 0; k < kAgents; ++k) {
    const double i = static_cast<double>(k);
    s.refs.initial_states.push_back(
        (Eigen::VectorXd(2) << std::cos(i), std::sin(i)).finished());
    switch (k % 4) {
      case 0:
        s.refs.inputs.push_back(InputDescriptor::zero(1));
        break;
      case 1:
        s.refs.inputs.push_back(
            InputDescriptor::constant(Eigen::VectorXd::Constant(1, 0.5)));
        break;
      case 2:
        s.refs.inputs.push_back(InputDescriptor::sinusoid(
            Eigen::VectorXd::Constant(1, 1.5), 2.0, 0.25 * i));
        break;
      default:
        s.refs.inputs.push_back(InputDescriptor::table(
            {0.0, 2.0, 4.0, 6.0},
            {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
             Eigen::VectorXd::Constant(1, -1.0),
             Eigen::VectorXd::Constant(1, 0.0)}));
        break;
    }
  }
  s.controller.q = Eigen::MatrixXd::Identity(2, 2);
  s.controller.layer = {2.0, 0.3};
  s.sim = {15.0, 1e-3, 10, Integrator::kRk4};
  return s;
}

}  // namespace

const std::vector<std::string>& canned_scenario_names() {
  static const std::vector<std::string> names = {
      "paper-sec5-static", "paper-sec5-adaptive", "twin-integrator",
      "ring-demo"};
  return names;
}

Scenario canned_scenario(std::string_view name) {
  if (name == "paper-sec5-static") return reference_example(Algorithm::kStatic);
  if (name == "paper-sec5-adaptive") return reference_example(Algorithm::kAdaptive);
  if (name == "twin-integrator") return twin_integrator();
  if (name == "ring-demo") return ring_demo();
  std::string valid;
  for (const auto& n : canned_scenario_names()) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  config_error(fmt::format("unknown scenario '{}'; valid names: {}", name, valid));
}

void apply_random_initial_states(Scenario& s,
                                 std::optional<std::uint64_t> seed) {
  if (!s.random_initial_states) return;
  if (seed) s.random_initial_states->seed = *seed;
  std::mt19937_64 rng(s.random_initial_states->seed);
  const double scale = s.random_initial_states->scale;
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& r0 : s.refs.initial_states) {
    for (Eigen::Index k = 0; k < r0.size(); ++k) r0(k) = dist(rng);
  }
}

GainReport design_report(const Scenario& s) {
  GainReport r;
  const auto& plant = s.refs.plant;
  r.stabilizable = is_stabilizable(plant.a, plant.b, s.numerics.rank_tol);
  if (!r.stabilizable) {
    throw Error(ErrorKind::kNotStabilizable,
                "gain design step 1 (Riccati solve for P > 0): (A, B) is not "
                "stabilizable, so no positive definite solution exists");
  }
  const AreSolution are = solve_are(plant.a, plant.b, s.controller.q, s.numerics);
  r.p = are.p;
  r.are_residual = are.residual_norm;
  r.are_iterations = are.iterations;
  r.k = -plant.b.transpose() * are.p;
  r.gamma_matrix = r.k.transpose() * r.k;
  if (!is_connected(s.graph)) {
    throw Error(ErrorKind::kNotConnected,
                fmt::format("gain design step 2 (first coupling strength c1 >= "
                            "1/(2 lambda2)): the communication graph is not "
                            "connected ({} components)",
                            component_count(s.graph)));
  }
  r.lambda2 = lambda2(s.graph);
  r.f0 = input_bound(s.refs);
  r.c1 = s.controller.c1.value_or(s.controller.margins.c1 / (2.0 * r.lambda2));
  r.c2 = s.controller.c2.value_or(s.controller.margins.c2 * r.f0 *
                                  static_cast<double>(s.graph.n_nodes() - 1));
  r.gamma = decay_rate(r.p, s.controller.q);
  return r;
}

namespace {

std::string format_matrix(const Eigen::MatrixXd& m, std::string_view indent) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += indent;
    out += "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += fmt::format("{}{:>12.6f}", c == 0 ? "" : " ", m(r, c));
    }
    out += " ]\n";
  }
  return out;
}

}  // namespace

std::string format_gain_report(const Scenario& s, const GainReport& r) {
  std::string out;
  out += fmt::format("scenario: {}\n", s.name);
  out += fmt::format("algorithm: {}\n", to_string(s.mode));
  out += fmt::format("agents: {}  edges: {}  (node indices 1-based below)\n",
                     s.graph.n_nodes(), s.graph.n_edges());
  std::string edge_list;
  for (auto [i, j] : s.graph.edges()) {
    edge_list += fmt::format(" {}-{}", i + 1, j + 1);
  }
  out += fmt::format("edges:{}\n", edge_list);
  out += fmt::format("stabilizable (PBH): {}\n", r.stabilizable ? "yes" : "no");
  out += fmt::format("Riccati: residual {:.3e} after {} Newton-Kleinman steps\n",
                     r.are_residual, r.are_iterations);
  out += "P =\n" + format_matrix(r.p, "  ");
  out += "K = -B^T P =\n" + format_matrix(r.k, "  ");
  out += "Gamma = P B B^T P =\n" + format_matrix(r.gamma_matrix, "  ");
  out += fmt::format("lambda2 = {:.6f}\n", r.lambda2);
  out += fmt::format("f0 = {:.6f}\n", r.f0);
  const double c1_min = 1.0 / (2.0 * r.lambda2);
  const double c2_min = r.f0 * static_cast<double>(s.graph.n_nodes() - 1);
  out += fmt::format("c1 = {:.6f}  (bound 1/(2 lambda2) = {:.6f}{})\n", r.c1,
                     c1_min, r.c1 < c1_min ? ", BELOW BOUND" : "");
  out += fmt::format("c2 = {:.6f}  (bound f0 (N-1) = {:.6f}{})\n", r.c2, c2_min,
                     r.c2 < c2_min ? ", BELOW BOUND" : "");
  out += fmt::format("gamma = lambda_min(Q)/lambda_max(P) = {:.6f}\n", r.gamma);
  return out;
}

SimConfig build_sim_config(const Scenario& s) {
  SimConfig cfg{s.sim, s.mode, s.graph, s.refs, std::nullopt, std::nullopt};
  const GainReport report = design_report(s);
  if (s.mode == Algorithm::kAdaptive) {
    AdaptiveParams ap;
    ap.p = report.p;
    ap.k = report.k;
    ap.gamma = report.gamma_matrix;
    ap.mu = *s.controller.mu;
    ap.nu = *s.controller.nu;
    ap.theta = *s.controller.theta;
    ap.chi = *s.controller.chi;
    ap.layer = s.controller.layer;
    ap.alpha0.assign(s.graph.n_edges(), s.controller.alpha0);
    ap.beta0.assign(s.graph.n_edges(), s.controller.beta0);
    ap.validate(s.graph);
    cfg.adaptive = std::move(ap);
  } else {
    StaticGains gains;
    gains.p = report.p;
    gains.k = report.k;
    gains.c1 = report.c1;
    gains.c2 = report.c2;
    gains.layer = s.controller.layer;
    cfg.gains = std::move(gains);
  }
  return cfg;
}

ScenarioRun run_scenario(const Scenario& s) {
  ScenarioRun out{build_sim_config(s), {}, {}};
  out.trajectory = run(out.config);
  const AnalysisInputs in{
      out.config.graph,
      out.config.refs,
      s.controller.q,
      out.config.gains ? &*out.config.gains : nullptr,
      out.config.adaptive ? &*out.config.adaptive : nullptr,
      s.alpha_bar,
      s.beta_bar,
      s.envelope_slack,
  };
  out.analysis = analyze(out.trajectory, in);
  return out;
}

std::string trajectory_csv_header(Eigen::Index state_dim) {
  std::string h = "t,kind,id";
  for (Eigen::Index k = 1; k <= state_dim; ++k) h += fmt::format(",x{}", k);
  h += ",tracking_error_norm,alpha,beta";
  return h;
}

std::string diagnostics_csv_header() {
  return "t,V1,V2,envelope,sum_invariant,consensus_error_norm,"
         "max_tracking_error";
}

namespace {

void write_trajectory_csv(std::ostream& os, const Scenario& s,
                          const ScenarioRun& run) {
  const Eigen::Index n = s.refs.plant.state_dim();
  os << trajectory_csv_header(n) << '\n';
  const auto& traj = run.trajectory;
  const std::string empty_state(static_cast<std::size_t>(n), ',');
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const NetworkState& st = traj.states[k];
    const AgentVectors te = tracking_error(st.x, traj.references[k]);
    const std::string t = fmt::format("{}", traj.times[k]);
    for (std::size_t i = 0; i < st.x.size(); ++i) {
      std::string line = fmt::format("{},agent,{}", t, i + 1);
      for (Eigen::Index c = 0; c < n; ++c) line += fmt::format(",{}", st.x[i](c));
      line += fmt::format(",{},,\n", te[i].norm());
      os << line;
    }
    for (std::size_t e = 0; e < st.alpha.size(); ++e) {
      const auto [i, j] = s.graph.edges()[e];
      os << fmt::format("{},edge,{}-{}{},,{},{}\n", t, i + 1, j + 1,
                        empty_state, st.alpha[e], st.beta[e]);
    }
  }
}

void write_diagnostics_csv(std::ostream& os, const ScenarioRun& run) {
  os << diagnostics_csv_header() << '\n';
  for (const auto& row : run.analysis.rows) {
    os << fmt::format("{},{},{},{},{},{},{}\n", row.t, row.v1,
                      row.v2 ? fmt::format("{}", *row.v2) : std::string{},
                      row.envelope, row.sum_invariant, row.consensus_error_norm,
                      row.max_tracking_error);
  }
}

}  // namespace

std::string summary_json(const Scenario& s, const ScenarioRun& run,
                         std::string_view version) {
  const RunSummary& m = run.analysis.summary;
  const bool adaptive = s.mode == Algorithm::kAdaptive;
  const Eigen::MatrixXd& p = adaptive ? run.config.adaptive->p : run.config.gains->p;
  const Eigen::MatrixXd& k = adaptive ? run.config.adaptive->k : run.config.gains->k;
  json out;
  out["gamma"] = m.gamma;
  out["lambda2"] = m.lambda2;
  out["c1"] = optional_json(m.c1);
  out["c2"] = optional_json(m.c2);
  out["omega2_radius"] = optional_json(m.omega2_radius);
  out["final_tracking_error"] = m.final_tracking_error;
  out["sup_sum_invariant"] = m.sup_sum_invariant;
  out["envelope_violations"] = m.envelope_violations;
  out["final_tracking_error_max"] = m.final_tracking_error_max;
  out["final_tracking_error_norm"] = m.final_tracking_error_norm;
  out["final_consensus_error_norm"] = m.final_consensus_error_norm;
  out["final_V1"] = m.final_v1;
  out["final_V2"] = optional_json(m.final_v2);
  out["f0"] = m.f0;
  out["alpha_bar"] = optional_json(m.alpha_bar);
  out["beta_bar"] = optional_json(m.beta_bar);
  out["delta"] = optional_json(m.delta);
  out["varrho"] = optional_json(m.varrho);
  out["omega1_bound"] = optional_json(m.omega1_bound);
  out["omega2_captured"] =
      m.omega2_captured ? json(*m.omega2_captured) : json(nullptr);
  out["max_alpha"] = optional_json(m.max_alpha);
  out["max_beta"] = optional_json(m.max_beta);
  out["gain_runmax_growth_last10pct"] = optional_json(m.gain_runmax_growth);
  out["direction_flips_final_quarter"] = m.direction_flips_final_quarter;
  out["P"] = to_json_matrix(p);
  out["K"] = to_json_matrix(k);
  out["Gamma"] = to_json_matrix(k.transpose() * k);
  out["mode"] = std::string(to_string(s.mode));
  out["scenario"] = s.name;
  out["samples"] = run.trajectory.times.size();
  out["version"] = std::string(version);
  out["config"] = json::parse(to_json(s));
  return out.dump(2);
}

void write_run_outputs(const std::filesystem::path& out_dir, const Scenario& s,
                       const ScenarioRun& run, std::string_view version) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    config_error(fmt::format("cannot create output directory '{}': {}",
                             out_dir.string(), ec.message()));
  }
  auto open = [&](std::string_view name) {
    std::ofstream os(out_dir / name);
    if (!os) {
      config_error(fmt::format("cannot write '{}'", (out_dir / name).string()));
    }
    return os;
  };
  {
    auto os = open(kTrajectoryFile);
    write_trajectory_csv(os, s, run);
  }
  {
    auto os = open(kDiagnosticsFile);
    write_diagnostics_csv(os, run);
  }
  {
    auto os = open(kSummaryFile);
    os << summary_json(s, run, version) << '\n';
  }
}

}  // namespace avgtrack
