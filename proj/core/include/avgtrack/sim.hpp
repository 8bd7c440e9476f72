#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "avgtrack/control.hpp"
#include "avgtrack/graph.hpp"
#include "avgtrack/signals.hpp"

namespace avgtrack {

enum class Integrator { kRk4, kEuler };

std::string_view to_string(Integrator integrator);
Integrator parse_integrator(std::string_view name);

struct IntegratorOptions {
  double t_end = 20.0;
  double dt = 1e-3;
  int record_every = 1;
  Integrator method = Integrator::kRk4;

  /// Number of fixed steps covering [0, t_end].
  long long step_count() const;
  void validate() const;
};

using VectorField =
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct FlatTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// Fixed-step integration. Step k ends at time (k + 1) * dt, computed by
/// multiplication; samples are kept every `record_every` steps, starting with
/// the initial state. Throws Error(kNonFinite) with the first offending time.
FlatTrajectory integrate(const VectorField& rhs, const Eigen::VectorXd& initial,
                         const IntegratorOptions& opts);

struct SimConfig {
  IntegratorOptions integrator;
  Algorithm mode = Algorithm::kStatic;
  Graph graph;
  ReferenceSet refs;
  std::optional<StaticGains> gains;       // static and discontinuous modes
  std::optional<AdaptiveParams> adaptive; // adaptive mode
};

struct Trajectory {
  Algorithm mode = Algorithm::kStatic;
  std::vector<double> times;
  std::vector<NetworkState> states;
  /// references[k][i] = r_i(times[k]), co-integrated on the same grid.
  std::vector<std::vector<Eigen::VectorXd>> references;
};

/// x_i(0) = r_i(0) (zero filter state); edge gains start from the configured
/// initial values.
Trajectory run(const SimConfig& cfg);

}  // namespace avgtrack
