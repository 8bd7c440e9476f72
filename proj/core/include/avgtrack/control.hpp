#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avgtrack/graph.hpp"
#include "avgtrack/numerics.hpp"
#include "avgtrack/signals.hpp"

namespace avgtrack {

enum class Algorithm { kStatic, kAdaptive, kDiscontinuous };

std::string_view to_string(Algorithm algorithm);
/// Throws Error(kConfigInvalid) for unknown names.
Algorithm parse_algorithm(std::string_view name);

/// Boundary-layer width eps * e^{-phi t}.
struct BoundaryLayer {
  double eps = 1.0;
  double phi = 0.0;

  double width(double t) const;
  void validate() const;
};

/// h(w) = w / (||w|| + eps e^{-phi t}).
Eigen::VectorXd boundary_layer(const Eigen::VectorXd& w, double eps,
                               double phi, double t);

/// w / ||w|| for ||w|| > 1e-15, else 0.
Eigen::VectorXd discontinuous_sign(const Eigen::VectorXd& w);

struct StaticGains {
  Eigen::MatrixXd p;
  Eigen::MatrixXd k;  // -B^T P
  double c1 = 0.0;
  double c2 = 0.0;
  BoundaryLayer layer;
};

struct DesignMargins {
  double c1 = 1.0;
  double c2 = 1.0;
};

/// Riccati solve, then c1 = margin / (2 lambda2), c2 = margin * f0 (N - 1).
StaticGains design_gains(const LinearPlant& plant, const Graph& g,
                         const Eigen::MatrixXd& q, double f0,
                         BoundaryLayer layer, DesignMargins margins = {},
                         const NumericsConfig& cfg = {});

struct AdaptiveParams {
  Eigen::MatrixXd p;
  Eigen::MatrixXd k;      // -B^T P
  Eigen::MatrixXd gamma;  // P B B^T P
  double mu = 1.0;
  double nu = 1.0;
  double theta = 1.0;
  double chi = 1.0;
  BoundaryLayer layer;
  std::vector<double> alpha0;  // one per undirected edge
  std::vector<double> beta0;

  void validate(const Graph& g) const;
};

/// Builds K and Gamma from the Riccati solution; edge gains start at the given
/// uniform values.
AdaptiveParams design_adaptive(const LinearPlant& plant, const Graph& g,
                               const Eigen::MatrixXd& q, BoundaryLayer layer,
                               double mu, double nu, double theta, double chi,
                               double alpha0 = 0.0, double beta0 = 0.0,
                               const NumericsConfig& cfg = {});

/// Agent states plus, in adaptive mode, one (alpha, beta) pair per undirected
/// edge in Graph::edges() order.
struct NetworkState {
  double t = 0.0;
  std::vector<Eigen::VectorXd> x;
  std::vector<double> alpha;
  std::vector<double> beta;

  bool adaptive() const { return !alpha.empty(); }
};

/// Flat [x_1; ...; x_N; alpha; beta] layout used by the integrator.
Eigen::VectorXd pack(const NetworkState& s);
NetworkState unpack(const Eigen::VectorXd& z, double t, std::size_t n_agents,
                    Eigen::Index state_dim, std::size_t n_edge_gains);

/// Static-gain closed loop over the flat layout [x].
class StaticClosedLoop {
 public:
  StaticClosedLoop(const Graph& g, const ReferenceSet& rs,
                   const StaticGains& gains, bool discontinuous = false);

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& z) const;

 private:
  const Graph& graph_;
  const ReferenceSet& refs_;
  const StaticGains& gains_;
  bool discontinuous_;
};

/// Adaptive closed loop over the flat layout [x; alpha; beta].
class AdaptiveClosedLoop {
 public:
  AdaptiveClosedLoop(const Graph& g, const ReferenceSet& rs,
                     const AdaptiveParams& params);

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& z) const;

 private:
  const Graph& graph_;
  const ReferenceSet& refs_;
  const AdaptiveParams& params_;
};

/// Time derivative of the static-gain network (t is taken from `state`).
NetworkState static_rhs(const NetworkState& state, const ReferenceSet& rs,
                        const StaticGains& gains, const Graph& g,
                        bool discontinuous = false);

/// Time derivative of the adaptive network including edge-gain laws.
NetworkState adaptive_rhs(const NetworkState& state, const ReferenceSet& rs,
                          const AdaptiveParams& params, const Graph& g);

}  // namespace avgtrack
