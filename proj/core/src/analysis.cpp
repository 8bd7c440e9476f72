#include "avgtrack/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "avgtrack/error.hpp"
#include "avgtrack/numerics.hpp"

namespace avgtrack {
namespace {

Eigen::VectorXd mean_of(const AgentVectors& v) {
  if (v.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no agents");
  }
  Eigen::VectorXd m = Eigen::VectorXd::Zero(v.front().size());
  for (const auto& vi : v) m += vi;
  return m / static_cast<double>(v.size());
}

}  // namespace

AgentVectors consensus_error(const AgentVectors& x) {
  const Eigen::VectorXd m = mean_of(x);
  AgentVectors xi;
  xi.reserve(x.size());
  for (const auto& xk : x) xi.emplace_back(xk - m);
  return xi;
}

AgentVectors tracking_error(const AgentVectors& x, const AgentVectors& r) {
  if (x.size() != r.size()) {
    throw Error(ErrorKind::kInvalidArgument, "agent and reference counts differ");
  }
  const Eigen::VectorXd m = mean_of(r);
  AgentVectors e;
  e.reserve(x.size());
  for (const auto& xk : x) e.emplace_back(xk - m);
  return e;
}

double sum_invariant(const AgentVectors& x, const AgentVectors& r) {
  if (x.size() != r.size() || x.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "agent and reference counts differ");
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(x.front().size());
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] - r[i];
  return s.norm();
}

double stacked_norm(const AgentVectors& v) {
  double sq = 0.0;
  for (const auto& vi : v) sq += vi.squaredNorm();
  return std::sqrt(sq);
}

double lyapunov_v1(const AgentVectors& xi, const Eigen::MatrixXd& p) {
  // (M kron P) xi = P-weighted centered copy of xi.
  const AgentVectors centered = consensus_error(xi);
  double v = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i)
    v += xi[i].dot(p * centered[i]);
  return v;
}

double layer_integral(double rate, double phi, double t) {
  const double d = rate - phi;
  if (std::abs(d) <= 1e-12) return t * std::exp(-rate * t);
  // e^{-phi t} (1 - e^{-d t}) / d, written with expm1 to avoid cancellation
  // when the rates are close.
  return -std::exp(-phi * t) * std::expm1(-d * t) / d;
}

double v1_envelope(double t, double v1_0, double gamma, double c2,
                   const BoundaryLayer& layer, std::size_t ordered_pairs) {
  return std::exp(-gamma * t) * v1_0 +
         c2 * static_cast<double>(ordered_pairs) * layer.eps *
             layer_integral(gamma, layer.phi, t);
}

double decay_rate(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  const SymEig ep = sym_eig(p);
  const SymEig eq = sym_eig(q);
  const double p_max = ep.values(ep.values.size() - 1);
  const double q_min = eq.values(0);
  if (!(ep.values(0) > 0.0) || !(q_min > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "P and Q must be positive definite");
  }
  return q_min / p_max;
}

TheoremConstants theorem_constants(const Eigen::MatrixXd& p,
                                   const Eigen::MatrixXd& q, const Graph& g,
                                   double f0, const AdaptationRates& rates,
                                   std::optional<double> alpha_bar,
                                   std::optional<double> beta_bar) {
  TheoremConstants c;
  c.gamma = decay_rate(p, q);
  const double alpha_min = 1.0 / (2.0 * lambda2(g));
  const double beta_min = f0 * static_cast<double>(g.n_nodes() - 1);
  // Relative slack so that values echoed through JSON still qualify.
  const double slack = 1e-12;
  if (alpha_bar && *alpha_bar < alpha_min * (1.0 - slack)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("alpha_bar {} is below 1/(2 lambda2) = {}",
                            *alpha_bar, alpha_min));
  }
  if (beta_bar && *beta_bar < beta_min * (1.0 - slack)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("beta_bar {} is below f0 (N - 1) = {}", *beta_bar,
                            beta_min));
  }
  c.alpha_bar = alpha_bar.value_or(alpha_min);
  c.beta_bar = beta_bar.value_or(beta_min);
  const double a_rate = rates.mu * rates.theta;
  const double b_rate = rates.nu * rates.chi;
  c.delta = std::min({c.gamma, a_rate, b_rate});
  c.varrho = std::max(a_rate, b_rate);
  return c;
}

double lyapunov_v2(const AgentVectors& xi, const Eigen::MatrixXd& p,
                   const std::vector<double>& alpha,
                   const std::vector<double>& beta,
                   const TheoremConstants& consts, double mu, double nu) {
  if (alpha.size() != beta.size()) {
    throw Error(ErrorKind::kInvalidArgument, "alpha/beta length mismatch");
  }
  double gains = 0.0;
  for (std::size_t e = 0; e < alpha.size(); ++e) {
    const double da = alpha[e] - consts.alpha_bar;
    const double db = beta[e] - consts.beta_bar;
    gains += da * da / (2.0 * mu) + db * db / (2.0 * nu);
  }
  return lyapunov_v1(xi, p) + 2.0 * gains;
}

double omega1_bound(const TheoremConstants& consts, double theta, double chi,
                    std::size_t ordered_pairs) {
  return static_cast<double>(ordered_pairs) *
         (theta * consts.alpha_bar * consts.alpha_bar / 2.0 +
          chi * consts.beta_bar * consts.beta_bar / 2.0) /
         consts.delta;
}

double v2_bound(double t, double v2_0, const TheoremConstants& consts,
                const BoundaryLayer& layer, double theta, double chi,
                std::size_t ordered_pairs) {
  const double ultimate = omega1_bound(consts, theta, chi, ordered_pairs);
  return std::exp(-consts.delta * t) * (v2_0 + ultimate) +
         consts.beta_bar * static_cast<double>(ordered_pairs) * layer.eps *
             layer_integral(consts.delta, layer.phi, t) +
         ultimate;
}

double omega2_radius(const TheoremConstants& consts, double theta, double chi,
                     const Eigen::MatrixXd& p, std::size_t ordered_pairs) {
  if (!(consts.varrho < consts.gamma)) {
    throw Error(ErrorKind::kRhoExceedsGamma,
                fmt::format("max(mu theta, nu chi) = {} is not below gamma = {}",
                            consts.varrho, consts.gamma));
  }
  const double p_min = sym_eig(p).values(0);
  const double numerator =
      static_cast<double>(ordered_pairs) *
      (theta * consts.alpha_bar * consts.alpha_bar +
       chi * consts.beta_bar * consts.beta_bar);
  return std::sqrt(numerator / (2.0 * p_min * (consts.gamma - consts.varrho)));
}

Eigen::VectorXd consensus_manifold(const ReferenceSet& rs, double t,
                                   int quad_steps) {
  if (!(t >= 0.0) || quad_steps < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "consensus_manifold needs t >= 0 and quad_steps >= 1");
  }
  const auto& plant = rs.plant;
  const auto n_agents = static_cast<double>(rs.size());
  Eigen::VectorXd x0_sum = Eigen::VectorXd::Zero(plant.state_dim());
  for (const auto& r0 : rs.initial_states) x0_sum += r0;
  Eigen::VectorXd out = matrix_exp(plant.a, t) * x0_sum;
  if (t > 0.0) {
    const int nodes = 2 * quad_steps;
    const double h = t / nodes;
    Eigen::VectorXd integral = Eigen::VectorXd::Zero(plant.state_dim());
    for (int k = 0; k <= nodes; ++k) {
      const double w = (k == 0 || k == nodes) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      const double tau = (k == nodes) ? t : k * h;
      Eigen::VectorXd f_sum = Eigen::VectorXd::Zero(plant.input_dim());
      for (const auto& d : rs.inputs) f_sum += eval_input(d, tau).value;
      integral += w * (matrix_exp(plant.a, t - tau) * (plant.b * f_sum));
    }
    out += (h / 3.0) * integral;
  }
  return out / n_agents;
}

std::size_t count_direction_flips(const Trajectory& traj, const Graph& g,
                                  const Eigen::MatrixXd& k, double t_from) {
  std::size_t flips = 0;
  std::vector<Eigen::VectorXd> prev;
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const auto& x = traj.states[s].x;
    std::vector<Eigen::VectorXd> cur;
    cur.reserve(g.n_edges());
    for (auto [i, j] : g.edges()) cur.emplace_back(k * (x[i] - x[j]));
    if (!prev.empty() && traj.times[s] >= t_from) {
      for (std::size_t e = 0; e < cur.size(); ++e) {
        if (prev[e].dot(cur[e]) < 0.0) {
          ++flips;
          break;
        }
      }
    }
    prev = std::move(cur);
  }
  return flips;
}

double running_max_growth(const std::vector<double>& times,
                          const std::vector<double>& values, double fraction) {
  if (times.empty() || times.size() != values.size()) return 0.0;
  const double t_mark = times.front() + fraction * (times.back() - times.front());
  double run = -std::numeric_limits<double>::infinity();
  double at_mark = run;
  for (std::size_t k = 0; k < times.size(); ++k) {
    run = std::max(run, values[k]);
    if (times[k] <= t_mark) at_mark = run;
  }
  if (at_mark == run) return 0.0;
  if (!(std::abs(at_mark) > 0.0)) return std::numeric_limits<double>::infinity();
  return (run - at_mark) / std::abs(at_mark);
}

RunAnalysis analyze(const Trajectory& traj, const AnalysisInputs& in) {
  if (traj.states.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty trajectory");
  }
  const bool adaptive = traj.mode == Algorithm::kAdaptive;
  if (adaptive ? in.adaptive == nullptr : in.gains == nullptr) {
    throw Error(ErrorKind::kInvalidArgument,
                "analysis needs the controller used for the run");
  }
  const Graph& g = in.graph;
  const std::size_t pairs = g.ordered_pair_count();
  const Eigen::MatrixXd& p = adaptive ? in.adaptive->p : in.gains->p;
  const Eigen::MatrixXd& k = adaptive ? in.adaptive->k : in.gains->k;

  RunAnalysis out;
  RunSummary& s = out.summary;
  s.lambda2 = lambda2(g);
  s.f0 = input_bound(in.refs);
  s.gamma = decay_rate(p, in.q);

  std::optional<TheoremConstants> consts;
  if (adaptive) {
    const auto& ap = *in.adaptive;
    consts = theorem_constants(p, in.q, g, s.f0,
                               {ap.mu, ap.nu, ap.theta, ap.chi}, in.alpha_bar,
                               in.beta_bar);
    s.alpha_bar = consts->alpha_bar;
    s.beta_bar = consts->beta_bar;
    s.delta = consts->delta;
    s.varrho = consts->varrho;
    if (consts->delta > 0.0) {
      s.omega1_bound = omega1_bound(*consts, ap.theta, ap.chi, pairs);
    }
    if (consts->varrho < consts->gamma) {
      s.omega2_radius = omega2_radius(*consts, ap.theta, ap.chi, p, pairs);
    }
  } else {
    s.c1 = in.gains->c1;
    s.c2 = in.gains->c2;
  }

  const auto& layer = adaptive ? in.adaptive->layer : in.gains->layer;
  double v1_0 = 0.0;
  double v2_0 = 0.0;
  std::vector<double> alpha_max_series;
  std::vector<double> beta_max_series;
  out.rows.reserve(traj.states.size());
  for (std::size_t idx = 0; idx < traj.states.size(); ++idx) {
    const NetworkState& st = traj.states[idx];
    const AgentVectors& r = traj.references[idx];
    const double t = traj.times[idx];
    const AgentVectors xi = consensus_error(st.x);
    const AgentVectors te = tracking_error(st.x, r);
    DiagnosticsRow row;
    row.t = t;
    row.v1 = lyapunov_v1(xi, p);
    row.sum_invariant = sum_invariant(st.x, r);
    row.consensus_error_norm = stacked_norm(xi);
    for (const auto& e : te)
      row.max_tracking_error = std::max(row.max_tracking_error, e.norm());
    if (adaptive) {
      const auto& ap = *in.adaptive;
      row.v2 = lyapunov_v2(xi, p, st.alpha, st.beta, *consts, ap.mu, ap.nu);
      if (idx == 0) v2_0 = *row.v2;
      row.envelope =
          consts->delta > 0.0
              ? v2_bound(t, v2_0, *consts, layer, ap.theta, ap.chi, pairs)
              : std::numeric_limits<double>::infinity();
      if (*row.v2 > row.envelope + in.envelope_slack) ++s.envelope_violations;
      alpha_max_series.push_back(
          *std::max_element(st.alpha.begin(), st.alpha.end()));
      beta_max_series.push_back(
          *std::max_element(st.beta.begin(), st.beta.end()));
    } else {
      if (idx == 0) v1_0 = row.v1;
      row.envelope = v1_envelope(t, v1_0, s.gamma, in.gains->c2, layer, pairs);
      if (row.v1 > row.envelope + in.envelope_slack) ++s.envelope_violations;
    }
    s.sup_sum_invariant = std::max(s.sup_sum_invariant, row.sum_invariant);
    out.rows.push_back(row);
  }

  const NetworkState& last = traj.states.back();
  const AgentVectors te_final = tracking_error(last.x, traj.references.back());
  for (const auto& e : te_final) {
    s.final_tracking_error.push_back(e.norm());
    s.final_tracking_error_max = std::max(s.final_tracking_error_max, e.norm());
  }
  s.final_tracking_error_norm = stacked_norm(te_final);
  s.final_consensus_error_norm = out.rows.back().consensus_error_norm;
  s.final_v1 = out.rows.back().v1;
  if (adaptive && g.n_edges() > 0) {
    s.final_v2 = out.rows.back().v2;
    s.max_alpha = *std::max_element(alpha_max_series.begin(),
                                    alpha_max_series.end());
    s.max_beta =
        *std::max_element(beta_max_series.begin(), beta_max_series.end());
    s.gain_runmax_growth =
        std::max(running_max_growth(traj.times, alpha_max_series, 0.9),
                 running_max_growth(traj.times, beta_max_series, 0.9));
    if (s.omega2_radius) {
      s.omega2_captured = s.final_tracking_error_norm <= 1.05 * *s.omega2_radius;
    }
  }
  const double t_quarter =
      traj.times.front() + 0.75 * (traj.times.back() - traj.times.front());
  s.direction_flips_final_quarter = count_direction_flips(traj, g, k, t_quarter);
  return out;
}

}  // namespace avgtrack
