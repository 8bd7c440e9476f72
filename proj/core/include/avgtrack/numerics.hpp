#pragma once

#include <Eigen/Dense>

namespace avgtrack {

/// Tolerances for the dense solvers. Defaults are the documented ones; the
/// scenario config may override any of them under "numerics".
struct NumericsConfig {
  double symmetry_tol = 1e-10;
  double rank_tol = 1e-10;          // relative singular-value cutoff
  double lyapunov_singular_tol = 1e-12;
  double are_step_tol = 1e-12;      // on ||P_k - P_{k-1}||_F / max(1, ||P_k||_F)
  int are_max_iterations = 100;
  double are_residual_tol = 1e-9;
};

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Throws Error(kNotSymmetric) when m deviates from m^T by more than
/// `symmetry_tol` (max-abs).
SymEig sym_eig(const Eigen::MatrixXd& m, double symmetry_tol = 1e-10);

/// Solves F^T X + X F + Q = 0 through the n^2 x n^2 Kronecker-sum system.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f,
                               const Eigen::MatrixXd& q,
                               const NumericsConfig& cfg = {});

struct AreSolution {
  Eigen::MatrixXd p;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// ||P A + A^T P - P B B^T P + Q||_F
double are_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                    const Eigen::MatrixXd& q, const Eigen::MatrixXd& p);

/// Stabilizing solution of P A + A^T P - P B B^T P + Q = 0 by Newton-Kleinman,
/// started from a Bass-shift gain.
AreSolution solve_are(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      const Eigen::MatrixXd& q, const NumericsConfig& cfg = {});

/// e^{A t} by Pade(6,6) scaling and squaring.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t);

/// PBH test over eigenvalues with nonnegative real part.
bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double rank_tol = 1e-10);

bool is_hurwitz(const Eigen::MatrixXd& a);

}  // namespace avgtrack
