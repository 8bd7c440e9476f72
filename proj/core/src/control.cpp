#include "avgtrack/control.hpp"

#include <cmath>

#include <fmt/format.h>

#include "avgtrack/error.hpp"

namespace avgtrack {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kStatic: return "static";
    case Algorithm::kAdaptive: return "adaptive";
    case Algorithm::kDiscontinuous: return "discontinuous";
  }
  return "static";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "static") return Algorithm::kStatic;
  if (name == "adaptive") return Algorithm::kAdaptive;
  if (name == "discontinuous") return Algorithm::kDiscontinuous;
  throw Error(ErrorKind::kConfigInvalid,
              fmt::format("unknown algorithm '{}' (expected static, adaptive "
                          "or discontinuous)",
                          name));
}

double BoundaryLayer::width(double t) const { return eps * std::exp(-phi * t); }

void BoundaryLayer::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::kInvalidArgument, "eps must be positive");
  }
  if (!(phi >= 0.0) || !std::isfinite(phi)) {
    throw Error(ErrorKind::kInvalidArgument, "phi must be nonnegative");
  }
}

Eigen::VectorXd boundary_layer(const Eigen::VectorXd& w, double eps,
                               double phi, double t) {
  return w / (w.norm() + eps * std::exp(-phi * t));
}

Eigen::VectorXd discontinuous_sign(const Eigen::VectorXd& w) {
  const double norm = w.norm();
  if (norm > 1e-15) return w / norm;
  return Eigen::VectorXd::Zero(w.size());
}

StaticGains design_gains(const LinearPlant& plant, const Graph& g,
                         const Eigen::MatrixXd& q, double f0,
                         BoundaryLayer layer, DesignMargins margins,
                         const NumericsConfig& cfg) {
  plant.validate();
  layer.validate();
  if (!(margins.c1 >= 1.0) || !(margins.c2 >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "design margins must be >= 1");
  }
  if (!(f0 >= 0.0) || !std::isfinite(f0)) {
    throw Error(ErrorKind::kInvalidArgument, "f0 must be finite and >= 0");
  }
  StaticGains gains;
  gains.p = solve_are(plant.a, plant.b, q, cfg).p;
  gains.k = -plant.b.transpose() * gains.p;
  gains.c1 = margins.c1 / (2.0 * lambda2(g));
  gains.c2 = margins.c2 * f0 * static_cast<double>(g.n_nodes() - 1);
  gains.layer = layer;
  return gains;
}

void AdaptiveParams::validate(const Graph& g) const {
  layer.validate();
  for (double v : {mu, nu}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidArgument, "mu and nu must be positive");
    }
  }
  // Zero leakage is a valid control law; only the ultimate bounds need > 0.
  for (double v : {theta, chi}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "theta and chi must be nonnegative");
    }
  }
  if (alpha0.size() != g.n_edges() || beta0.size() != g.n_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("need one initial (alpha, beta) per edge ({})",
                            g.n_edges()));
  }
}

AdaptiveParams design_adaptive(const LinearPlant& plant, const Graph& g,
                               const Eigen::MatrixXd& q, BoundaryLayer layer,
                               double mu, double nu, double theta, double chi,
                               double alpha0, double beta0,
                               const NumericsConfig& cfg) {
  plant.validate();
  AdaptiveParams params;
  params.p = solve_are(plant.a, plant.b, q, cfg).p;
  params.k = -plant.b.transpose() * params.p;
  params.gamma = params.k.transpose() * params.k;
  params.mu = mu;
  params.nu = nu;
  params.theta = theta;
  params.chi = chi;
  params.layer = layer;
  params.alpha0.assign(g.n_edges(), alpha0);
  params.beta0.assign(g.n_edges(), beta0);
  params.validate(g);
  return params;
}

Eigen::VectorXd pack(const NetworkState& s) {
  const Eigen::Index n = s.x.empty() ? 0 : s.x.front().size();
  const auto agents = static_cast<Eigen::Index>(s.x.size());
  const auto edges = static_cast<Eigen::Index>(s.alpha.size());
  Eigen::VectorXd z(agents * n + 2 * edges);
  for (Eigen::Index i = 0; i < agents; ++i)
    z.segment(i * n, n) = s.x[static_cast<std::size_t>(i)];
  for (Eigen::Index e = 0; e < edges; ++e) {
    z(agents * n + e) = s.alpha[static_cast<std::size_t>(e)];
    z(agents * n + edges + e) = s.beta[static_cast<std::size_t>(e)];
  }
  return z;
}

NetworkState unpack(const Eigen::VectorXd& z, double t, std::size_t n_agents,
                    Eigen::Index state_dim, std::size_t n_edge_gains) {
  const auto agents = static_cast<Eigen::Index>(n_agents);
  const auto edges = static_cast<Eigen::Index>(n_edge_gains);
  if (z.size() != agents * state_dim + 2 * edges) {
    throw Error(ErrorKind::kInvalidArgument, "flat state has wrong length");
  }
  NetworkState s;
  s.t = t;
  s.x.reserve(n_agents);
  for (Eigen::Index i = 0; i < agents; ++i)
    s.x.emplace_back(z.segment(i * state_dim, state_dim));
  s.alpha.resize(n_edge_gains);
  s.beta.resize(n_edge_gains);
  for (Eigen::Index e = 0; e < edges; ++e) {
    s.alpha[static_cast<std::size_t>(e)] = z(agents * state_dim + e);
    s.beta[static_cast<std::size_t>(e)] = z(agents * state_dim + edges + e);
  }
  return s;
}

namespace {

// A x_i + B f_i(t) for every agent, written into dz.
void drift(const ReferenceSet& rs, double t, const Eigen::VectorXd& z,
           Eigen::VectorXd& dz) {
  const Eigen::Index n = rs.plant.state_dim();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * n;
    dz.segment(off, n) = rs.plant.a * z.segment(off, n) +
                         rs.plant.b * eval_input(rs.inputs[i], t).value;
  }
}

void check_layout(const Graph& g, const ReferenceSet& rs) {
  if (g.n_nodes() != rs.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("graph has {} nodes but there are {} references",
                            g.n_nodes(), rs.size()));
  }
}

}  // namespace

StaticClosedLoop::StaticClosedLoop(const Graph& g, const ReferenceSet& rs,
                                   const StaticGains& gains, bool discontinuous)
    : graph_(g), refs_(rs), gains_(gains), discontinuous_(discontinuous) {
  check_layout(g, rs);
}

Eigen::VectorXd StaticClosedLoop::operator()(double t,
                                             const Eigen::VectorXd& z) const {
  const Eigen::Index n = refs_.plant.state_dim();
  Eigen::VectorXd dz(z.size());
  drift(refs_, t, z, dz);
  const double width = gains_.layer.width(t);
  // Each undirected edge contributes +u to node i and -u to node j, so the
  // coupling sums to zero across the network.
  for (const auto& [i, j] : graph_.edges()) {
    const auto oi = static_cast<Eigen::Index>(i) * n;
    const auto oj = static_cast<Eigen::Index>(j) * n;
    const Eigen::VectorXd w = gains_.k * (z.segment(oi, n) - z.segment(oj, n));
    const Eigen::VectorXd h =
        discontinuous_ ? discontinuous_sign(w) : Eigen::VectorXd(w / (w.norm() + width));
    const Eigen::VectorXd u = refs_.plant.b * (gains_.c1 * w + gains_.c2 * h);
    dz.segment(oi, n) += u;
    dz.segment(oj, n) -= u;
  }
  return dz;
}

AdaptiveClosedLoop::AdaptiveClosedLoop(const Graph& g, const ReferenceSet& rs,
                                       const AdaptiveParams& params)
    : graph_(g), refs_(rs), params_(params) {
  check_layout(g, rs);
  params.validate(g);
}

Eigen::VectorXd AdaptiveClosedLoop::operator()(double t,
                                               const Eigen::VectorXd& z) const {
  const Eigen::Index n = refs_.plant.state_dim();
  const auto agents = static_cast<Eigen::Index>(refs_.size());
  const auto edges = static_cast<Eigen::Index>(graph_.n_edges());
  const Eigen::Index alpha_off = agents * n;
  const Eigen::Index beta_off = alpha_off + edges;
  Eigen::VectorXd dz(z.size());
  drift(refs_, t, z, dz);
  const double width = params_.layer.width(t);
  for (Eigen::Index e = 0; e < edges; ++e) {
    const auto [i, j] = graph_.edges()[static_cast<std::size_t>(e)];
    const auto oi = static_cast<Eigen::Index>(i) * n;
    const auto oj = static_cast<Eigen::Index>(j) * n;
    const Eigen::VectorXd d = z.segment(oi, n) - z.segment(oj, n);
    const Eigen::VectorXd w = params_.k * d;
    const double w_norm = w.norm();
    const double alpha = z(alpha_off + e);
    const double beta = z(beta_off + e);
    const Eigen::VectorXd u =
        refs_.plant.b * (alpha * w + beta * (w / (w_norm + width)));
    dz.segment(oi, n) += u;
    dz.segment(oj, n) -= u;
    dz(alpha_off + e) =
        params_.mu * (-params_.theta * alpha + d.dot(params_.gamma * d));
    dz(beta_off + e) = params_.nu * (-params_.chi * beta +
                                     w_norm * w_norm / (w_norm + width));
  }
  return dz;
}

NetworkState static_rhs(const NetworkState& state, const ReferenceSet& rs,
                        const StaticGains& gains, const Graph& g,
                        bool discontinuous) {
  const StaticClosedLoop loop(g, rs, gains, discontinuous);
  const Eigen::VectorXd dz = loop(state.t, pack(state));
  return unpack(dz, state.t, rs.size(), rs.plant.state_dim(), 0);
}

NetworkState adaptive_rhs(const NetworkState& state, const ReferenceSet& rs,
                          const AdaptiveParams& params, const Graph& g) {
  if (state.alpha.size() != g.n_edges() || state.beta.size() != g.n_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                "adaptive state needs one (alpha, beta) pair per edge");
  }
  const AdaptiveClosedLoop loop(g, rs, params);
  const Eigen::VectorXd dz = loop(state.t, pack(state));
  return unpack(dz, state.t, rs.size(), rs.plant.state_dim(), g.n_edges());
}

}  // namespace avgtrack
