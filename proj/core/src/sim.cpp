#include "avgtrack/sim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "avgtrack/error.hpp"

namespace avgtrack {

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::kEuler ? "euler" : "rk4";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "rk4") return Integrator::kRk4;
  if (name == "euler") return Integrator::kEuler;
  throw Error(ErrorKind::kConfigInvalid,
              fmt::format("unknown integrator '{}' (expected rk4 or euler)",
                          name));
}

long long IntegratorOptions::step_count() const {
  return static_cast<long long>(std::ceil(t_end / dt - 1e-9));
}

void IntegratorOptions::validate() const {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::kConfigInvalid, "t_end must be positive");
  }
  if (!(dt > 0.0) || !(dt <= t_end)) {
    throw Error(ErrorKind::kConfigInvalid, "dt must satisfy 0 < dt <= t_end");
  }
  if (record_every < 1) {
    throw Error(ErrorKind::kConfigInvalid, "record_every must be >= 1");
  }
}

FlatTrajectory integrate(const VectorField& rhs, const Eigen::VectorXd& initial,
                         const IntegratorOptions& opts) {
  opts.validate();
  const long long steps = opts.step_count();
  const double dt = opts.dt;
  FlatTrajectory out;
  const auto samples = static_cast<std::size_t>(steps / opts.record_every + 1);
  out.times.reserve(samples);
  out.states.reserve(samples);
  out.times.push_back(0.0);
  out.states.push_back(initial);

  Eigen::VectorXd z = initial;
  for (long long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (opts.method == Integrator::kRk4) {
      const Eigen::VectorXd k1 = rhs(t, z);
      const Eigen::VectorXd k2 = rhs(t + 0.5 * dt, z + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = rhs(t + 0.5 * dt, z + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = rhs(t + dt, z + dt * k3);
      z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      z += dt * rhs(t, z);
    }
    const double t_next = static_cast<double>(k + 1) * dt;
    if (!z.allFinite()) {
      throw Error(ErrorKind::kNonFinite,
                  fmt::format("state became non-finite at t = {}", t_next),
                  t_next);
    }
    if ((k + 1) % opts.record_every == 0) {
      out.times.push_back(t_next);
      out.states.push_back(z);
    }
  }
  return out;
}

Trajectory run(const SimConfig& cfg) {
  cfg.integrator.validate();
  cfg.refs.validate();
  const Graph& g = cfg.graph;
  const ReferenceSet& rs = cfg.refs;
  if (g.n_nodes() != rs.size()) {
    throw Error(ErrorKind::kConfigInvalid,
                fmt::format("graph has {} nodes but {} agents are configured",
                            g.n_nodes(), rs.size()));
  }

  NetworkState init;
  init.x = rs.initial_states;
  VectorField loop;
  std::optional<StaticClosedLoop> static_loop;
  std::optional<AdaptiveClosedLoop> adaptive_loop;
  if (cfg.mode == Algorithm::kAdaptive) {
    if (!cfg.adaptive) {
      throw Error(ErrorKind::kConfigInvalid,
                  "adaptive mode needs adaptive parameters");
    }
    init.alpha = cfg.adaptive->alpha0;
    init.beta = cfg.adaptive->beta0;
    adaptive_loop.emplace(g, rs, *cfg.adaptive);
  } else {
    if (!cfg.gains) {
      throw Error(ErrorKind::kConfigInvalid, "static mode needs gains");
    }
    cfg.gains->layer.validate();
    static_loop.emplace(g, rs, *cfg.gains,
                        cfg.mode == Algorithm::kDiscontinuous);
  }

  // Co-integrate r' = A r + B f alongside the network: [network; r_1..r_N].
  const Eigen::VectorXd net0 = pack(init);
  const Eigen::Index net_len = net0.size();
  const Eigen::Index n = rs.plant.state_dim();
  const auto agents = static_cast<Eigen::Index>(rs.size());
  Eigen::VectorXd z0(net_len + agents * n);
  z0.head(net_len) = net0;
  for (Eigen::Index i = 0; i < agents; ++i)
    z0.segment(net_len + i * n, n) = rs.initial_states[static_cast<std::size_t>(i)];

  const VectorField combined = [&](double t, const Eigen::VectorXd& z) {
    Eigen::VectorXd dz(z.size());
    const Eigen::VectorXd net = z.head(net_len);
    dz.head(net_len) = static_loop ? (*static_loop)(t, net)
                                   : (*adaptive_loop)(t, net);
    for (Eigen::Index i = 0; i < agents; ++i) {
      const auto off = net_len + i * n;
      dz.segment(off, n) =
          rs.plant.a * z.segment(off, n) +
          rs.plant.b *
              eval_input(rs.inputs[static_cast<std::size_t>(i)], t).value;
    }
    return dz;
  };

  const FlatTrajectory flat = integrate(combined, z0, cfg.integrator);

  Trajectory traj;
  traj.mode = cfg.mode;
  traj.times = flat.times;
  traj.states.reserve(flat.states.size());
  traj.references.reserve(flat.states.size());
  const std::size_t edge_gains = init.alpha.size();
  for (std::size_t k = 0; k < flat.states.size(); ++k) {
    const Eigen::VectorXd& z = flat.states[k];
    traj.states.push_back(
        unpack(z.head(net_len), flat.times[k], rs.size(), n, edge_gains));
    std::vector<Eigen::VectorXd> refs;
    refs.reserve(rs.size());
    for (Eigen::Index i = 0; i < agents; ++i)
      refs.emplace_back(z.segment(net_len + i * n, n));
    traj.references.push_back(std::move(refs));
  }
  return traj;
}

}  // namespace avgtrack
