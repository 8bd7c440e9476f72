#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace avgtrack {

/// The shared reference/agent dynamics r' = A r + B f.
struct LinearPlant {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
  /// Throws Error(kInvalidArgument) on inconsistent or non-finite matrices.
  void validate() const;
};

/// Closed-form bounded input f_i(t).
struct InputDescriptor {
  enum class Kind { kZero, kConstant, kSinusoid, kTable };

  Kind kind = Kind::kZero;
  Eigen::Index dim = 0;
  Eigen::VectorXd value;      // constant value, or sinusoid offset
  Eigen::VectorXd amplitude;  // sinusoid
  double omega = 0.0;
  double phase = 0.0;
  std::vector<double> times;            // table grid, strictly increasing
  std::vector<Eigen::VectorXd> samples; // table values at `times`

  static InputDescriptor zero(Eigen::Index dim);
  static InputDescriptor constant(Eigen::VectorXd value);
  static InputDescriptor sinusoid(Eigen::VectorXd amplitude, double omega,
                                  double phase,
                                  Eigen::VectorXd offset = {});
  static InputDescriptor table(std::vector<double> times,
                               std::vector<Eigen::VectorXd> samples);

  /// Declared sup-norm bound: exact for zero/constant and offset-free
  /// sinusoids, max over grid nodes for tables.
  double bound() const;
  void validate() const;
};

struct InputSample {
  Eigen::VectorXd value;
  /// Set when a table was queried past its last grid time; the last sample is
  /// held.
  bool held_last = false;
};

/// Requires t >= 0. Tables interpolate linearly between grid nodes.
InputSample eval_input(const InputDescriptor& d, double t);

struct ReferenceSet {
  LinearPlant plant;
  std::vector<Eigen::VectorXd> initial_states;
  std::vector<InputDescriptor> inputs;

  std::size_t size() const { return initial_states.size(); }
  void validate() const;
};

/// f0 = max_i bound(f_i).
double input_bound(const ReferenceSet& rs);

/// Panels used by the quadrature oracles when the caller does not pick one:
/// 2000 per unit time, at least one.
int default_quad_steps(double t);

/// r_i(t) = e^{At} r_i(0) + int_0^t e^{A(t-tau)} B f_i(tau) dtau with composite
/// Simpson on `quad_steps` panels.
Eigen::VectorXd reference_trajectory(const ReferenceSet& rs, std::size_t agent,
                                     double t, int quad_steps);

}  // namespace avgtrack
