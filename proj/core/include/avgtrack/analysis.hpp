#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "avgtrack/control.hpp"
#include "avgtrack/graph.hpp"
#include "avgtrack/sim.hpp"
#include "avgtrack/signals.hpp"

namespace avgtrack {

using AgentVectors = std::vector<Eigen::VectorXd>;

/// xi_i = x_i - mean_k x_k.
AgentVectors consensus_error(const AgentVectors& x);
/// x_i - mean_k r_k.
AgentVectors tracking_error(const AgentVectors& x, const AgentVectors& r);
/// || sum_i x_i - sum_i r_i ||.
double sum_invariant(const AgentVectors& x, const AgentVectors& r);

/// Euclidean norm of the stacked vector.
double stacked_norm(const AgentVectors& v);

/// xi^T (M kron P) xi with M = I - 11^T / N.
double lyapunov_v1(const AgentVectors& xi, const Eigen::MatrixXd& p);

/// int_0^t e^{-rate (t - tau) - phi tau} dtau, using the t e^{-rate t} branch
/// when |rate - phi| <= 1e-12.
double layer_integral(double rate, double phi, double t);

/// e^{-gamma t} V1(0) + c2 * pairs * eps * layer_integral(gamma, phi, t), where
/// `ordered_pairs` is sum_i |N_i|.
double v1_envelope(double t, double v1_0, double gamma, double c2,
                   const BoundaryLayer& layer, std::size_t ordered_pairs);

struct TheoremConstants {
  double gamma = 0.0;      // lambda_min(Q) / lambda_max(P)
  double alpha_bar = 0.0;  // >= 1 / (2 lambda2)
  double beta_bar = 0.0;   // >= f0 (N - 1)
  double delta = 0.0;      // min{gamma, mu theta, nu chi}
  double varrho = 0.0;     // max{mu theta, nu chi}
};

struct AdaptationRates {
  double mu = 1.0;
  double nu = 1.0;
  double theta = 1.0;
  double chi = 1.0;
};

/// lambda_min(Q) / lambda_max(P).
double decay_rate(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

/// alpha_bar and beta_bar default to their minimal admissible values; an
/// override below the minimum throws Error(kInvalidArgument).
TheoremConstants theorem_constants(const Eigen::MatrixXd& p,
                                   const Eigen::MatrixXd& q, const Graph& g,
                                   double f0, const AdaptationRates& rates,
                                   std::optional<double> alpha_bar = {},
                                   std::optional<double> beta_bar = {});

/// V1 plus sum over ordered neighbor pairs (each undirected edge twice) of
/// (alpha - alpha_bar)^2 / (2 mu) + (beta - beta_bar)^2 / (2 nu).
double lyapunov_v2(const AgentVectors& xi, const Eigen::MatrixXd& p,
                   const std::vector<double>& alpha,
                   const std::vector<double>& beta,
                   const TheoremConstants& consts, double mu, double nu);

/// Ultimate level for V2: (1/delta) * pairs * (theta alpha_bar^2 / 2 +
/// chi beta_bar^2 / 2).
double omega1_bound(const TheoremConstants& consts, double theta, double chi,
                    std::size_t ordered_pairs);

/// Comparison-lemma bound on V2(t): transient from V2(0) and the ultimate
/// level, the decaying boundary-layer term, plus the ultimate level itself.
double v2_bound(double t, double v2_0, const TheoremConstants& consts,
                const BoundaryLayer& layer, double theta, double chi,
                std::size_t ordered_pairs);

/// Radius of the ball that xi eventually enters when varrho < gamma. Throws
/// Error(kRhoExceedsGamma) otherwise.
double omega2_radius(const TheoremConstants& consts, double theta, double chi,
                     const Eigen::MatrixXd& p, std::size_t ordered_pairs);

/// (1/N) [e^{At} sum_k r_k(0) + int_0^t e^{A(t-tau)} B sum_k f_k(tau) dtau]
/// with composite Simpson on `quad_steps` panels.
Eigen::VectorXd consensus_manifold(const ReferenceSet& rs, double t,
                                   int quad_steps);

/// Number of sample pairs (t_{k-1}, t_k), t_k >= t_from, where some edge's
/// control direction K (x_i - x_j) reverses (negative inner product).
std::size_t count_direction_flips(const Trajectory& traj, const Graph& g,
                                  const Eigen::MatrixXd& k, double t_from);

/// Growth of the running max of a series between `fraction` of the horizon
/// and the end, relative to the earlier value.
double running_max_growth(const std::vector<double>& times,
                          const std::vector<double>& values, double fraction);

struct DiagnosticsRow {
  double t = 0.0;
  double v1 = 0.0;
  std::optional<double> v2;
  double envelope = 0.0;  // V1 envelope, or V2 bound in adaptive mode
  double sum_invariant = 0.0;
  double consensus_error_norm = 0.0;
  double max_tracking_error = 0.0;
};

struct RunSummary {
  double lambda2 = 0.0;
  double gamma = 0.0;
  double f0 = 0.0;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<double> alpha_bar;
  std::optional<double> beta_bar;
  std::optional<double> delta;
  std::optional<double> varrho;
  std::optional<double> omega1_bound;
  std::optional<double> omega2_radius;
  std::optional<double> final_v2;
  std::optional<double> max_alpha;
  std::optional<double> max_beta;
  std::optional<double> gain_runmax_growth;
  std::optional<bool> omega2_captured;
  std::vector<double> final_tracking_error;
  double final_tracking_error_max = 0.0;
  double final_tracking_error_norm = 0.0;
  double final_consensus_error_norm = 0.0;
  double final_v1 = 0.0;
  double sup_sum_invariant = 0.0;
  std::size_t envelope_violations = 0;
  std::size_t direction_flips_final_quarter = 0;
};

struct AnalysisInputs {
  const Graph& graph;
  const ReferenceSet& refs;
  Eigen::MatrixXd q;
  const StaticGains* gains = nullptr;        // static / discontinuous
  const AdaptiveParams* adaptive = nullptr;  // adaptive
  std::optional<double> alpha_bar;
  std::optional<double> beta_bar;
  double envelope_slack = 1e-6;
};

struct RunAnalysis {
  std::vector<DiagnosticsRow> rows;
  RunSummary summary;
};

RunAnalysis analyze(const Trajectory& traj, const AnalysisInputs& in);

}  // namespace avgtrack
