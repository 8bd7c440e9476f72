#include "avgtrack/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "avgtrack/error.hpp"

namespace avgtrack {
namespace {

void require_square(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("{} must be square and nonempty, got {}x{}", name,
                            m.rows(), m.cols()));
  }
}

void require_finite(const Eigen::MatrixXd& m, const char* name) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("{} has non-finite entries", name));
  }
}

}  // namespace

SymEig sym_eig(const Eigen::MatrixXd& m, double symmetry_tol) {
  require_square(m, "sym_eig input");
  require_finite(m, "sym_eig input");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_tol) {
    throw Error(ErrorKind::kNotSymmetric,
                fmt::format("max |m - m^T| = {:.3e} exceeds {:.1e}", asym,
                            symmetry_tol));
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNoConvergence, "symmetric eigensolver failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f,
                               const Eigen::MatrixXd& q,
                               const NumericsConfig& cfg) {
  require_square(f, "F");
  require_square(q, "Q");
  if (f.rows() != q.rows()) {
    throw Error(ErrorKind::kInvalidArgument, "F and Q dimensions differ");
  }
  const Eigen::Index n = f.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  // Column-major vec: vec(F^T X) = (I kron F^T) vec X, vec(X F) = (F^T kron I) vec X.
  Eigen::MatrixXd kron_sum(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      kron_sum.block(i * n, j * n, n, n) =
          eye(i, j) * f.transpose() + f(j, i) * eye;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kron_sum);
  lu.setThreshold(cfg.lyapunov_singular_tol);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::kSingularSystem,
                fmt::format("Kronecker system has rank {} < {}", lu.rank(),
                            n * n));
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(
      q.data(), n * n);
  const Eigen::VectorXd vec_x = lu.solve(rhs);
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(vec_x.data(), n, n);
  return 0.5 * (x + x.transpose());
}

double are_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                    const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd pb = p * b;
  return (p * a + a.transpose() * p - pb * pb.transpose() + q).norm();
}

bool is_hurwitz(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
  return (solver.eigenvalues().real().array() < 0.0).all();
}

bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double rank_tol) {
  require_square(a, "A");
  if (b.rows() != a.rows()) {
    throw Error(ErrorKind::kInvalidArgument, "A and B row counts differ");
  }
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
  const Eigen::VectorXcd lambdas = solver.eigenvalues();
  // Eigenvalues on the imaginary axis come back with O(eps*||A||) noise.
  const double axis_slack = 1e-12 * std::max(1.0, a.norm());
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const std::complex<double> lambda = lambdas(k);
    if (lambda.real() < -axis_slack) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh.leftCols(n) = a.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const Eigen::VectorXd sv = svd.singularValues();
    const double largest = sv.size() > 0 ? sv(0) : 0.0;
    if (largest == 0.0) return false;
    if (sv.size() < n || sv(n - 1) <= rank_tol * largest) return false;
  }
  return true;
}

namespace {

// Stabilizing seed for Newton-Kleinman. First choice is the stable invariant
// subspace of the Hamiltonian, which is usually accurate already. It breaks
// down for defective spectra, so fall back to the Bass shift
// (A + beta I) Z + Z (A + beta I)^T = 2 B B^T, K0 = B^T Z^{-1}, and to a
// pseudo-inverse of Z when the pair is stabilizable but not controllable.
std::optional<Eigen::MatrixXd> hamiltonian_gain(const Eigen::MatrixXd& a,
                                                const Eigen::MatrixXd& b,
                                                const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd h(2 * n, 2 * n);
  h << a, -b * b.transpose(), -q, -a.transpose();
  const Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index k = 0; k < 2 * n && found < n; ++k) {
    if (es.eigenvalues()(k).real() < 0.0)
      basis.col(found++) = es.eigenvectors().col(k);
  }
  if (found != n) return std::nullopt;
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(basis.topRows(n).transpose());
  if (!lu.isInvertible()) return std::nullopt;
  // P = X2 X1^{-1}, solved as X1^T P^T = X2^T.
  const Eigen::MatrixXd p =
      lu.solve(basis.bottomRows(n).transpose()).transpose().real();
  return Eigen::MatrixXd(b.transpose() * (0.5 * (p + p.transpose())));
}

Eigen::MatrixXd initial_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& q,
                             const NumericsConfig& cfg) {
  auto stabilizing = [&](const Eigen::MatrixXd& k) {
    return k.allFinite() && is_hurwitz(a - b * k);
  };
  if (auto k = hamiltonian_gain(a, b, q); k && stabilizing(*k)) return *k;

  const Eigen::Index n = a.rows();
  const double beta = a.norm() + 1.0;
  const Eigen::MatrixXd shifted = a + beta * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd z =
      solve_lyapunov(-shifted.transpose(), 2.0 * b * b.transpose(), cfg);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(z);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd k = lu.solve(b).transpose();  // Z symmetric
    if (stabilizing(k)) return k;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(z);
  cod.setThreshold(cfg.rank_tol);
  const Eigen::MatrixXd k = b.transpose() * cod.pseudoInverse();
  if (stabilizing(k)) return k;
  throw Error(ErrorKind::kNoConvergence,
              "could not construct a stabilizing initial gain");
}

}  // namespace

AreSolution solve_are(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      const Eigen::MatrixXd& q, const NumericsConfig& cfg) {
  require_square(a, "A");
  require_square(q, "Q");
  require_finite(a, "A");
  require_finite(b, "B");
  require_finite(q, "Q");
  const Eigen::Index n = a.rows();
  if (b.rows() != n || q.rows() != n) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("inconsistent dimensions: A {}x{}, B {}x{}, Q {}x{}",
                            a.rows(), a.cols(), b.rows(), b.cols(), q.rows(),
                            q.cols()));
  }
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > cfg.symmetry_tol) {
    throw Error(ErrorKind::kNotSymmetric, "Q is not symmetric");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(q).info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidArgument, "Q is not positive definite");
  }
  if (!is_stabilizable(a, b, cfg.rank_tol)) {
    throw Error(ErrorKind::kNotStabilizable, "(A, B) fails the PBH test");
  }

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd gain = initial_gain(a, b, q, cfg);

  AreSolution sol;
  Eigen::MatrixXd p_prev;
  double prev_step = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.are_max_iterations; ++it) {
    const Eigen::MatrixXd closed = a - b * gain;
    Eigen::MatrixXd p =
        solve_lyapunov(closed, q + gain.transpose() * gain, cfg);
    gain = b.transpose() * p;
    sol.iterations = it;
    if (it > 1) {
      const double step = (p - p_prev).norm() / std::max(1.0, p.norm());
      // Newton converges quadratically until rounding takes over; a step
      // that no longer shrinks means the floor has been reached.
      if (step <= cfg.are_step_tol || (it > 3 && step >= prev_step)) {
        sol.p = std::move(p);
        break;
      }
      prev_step = step;
    }
    p_prev = std::move(p);
  }
  if (sol.p.size() == 0) {
    throw Error(ErrorKind::kNoConvergence,
                fmt::format("Newton-Kleinman did not settle in {} iterations",
                            cfg.are_max_iterations));
  }
  sol.residual_norm = are_residual(a, b, q, sol.p);
  // Increment-form polish: F^T D + D F = -R(P), P += D. Keeps the best
  // iterate since rounding makes the residual noisy near its floor.
  for (int polish = 0; polish < 3 && sol.residual_norm > 0.0; ++polish) {
    const Eigen::MatrixXd r = sol.p * a + a.transpose() * sol.p -
                              sol.p * b * b.transpose() * sol.p + q;
    const Eigen::MatrixXd closed = a - b * (b.transpose() * sol.p);
    Eigen::MatrixXd candidate;
    try {
      candidate = sol.p + solve_lyapunov(closed, r, cfg);
    } catch (const Error&) {
      break;
    }
    const double res = are_residual(a, b, q, candidate);
    if (!(res < sol.residual_norm)) break;
    sol.p = std::move(candidate);
    sol.residual_norm = res;
  }
  if (!(sol.residual_norm <= cfg.are_residual_tol)) {
    throw Error(ErrorKind::kNoConvergence,
                fmt::format("ARE residual {:.3e} exceeds {:.1e}",
                            sol.residual_norm, cfg.are_residual_tol));
  }
  return sol;
}

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t) {
  require_square(a, "A");
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd x = a * t;
  if (!x.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "A*t has non-finite entries");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / 0.5))));
  }
  const Eigen::MatrixXd scaled = x / std::ldexp(1.0, squarings);

  // Pade(6,6) coefficients c_k = (12-k)! 6! / (12! k! (6-k)!).
  constexpr double c[] = {1.0,
                          1.0 / 2.0,
                          5.0 / 44.0,
                          1.0 / 66.0,
                          1.0 / 792.0,
                          1.0 / 15840.0,
                          1.0 / 665280.0};
  const Eigen::MatrixXd s2 = scaled * scaled;
  const Eigen::MatrixXd s4 = s2 * s2;
  const Eigen::MatrixXd s6 = s4 * s2;
  const Eigen::MatrixXd even = c[0] * eye + c[2] * s2 + c[4] * s4 + c[6] * s6;
  const Eigen::MatrixXd odd =
      scaled * (c[1] * eye + c[3] * s2 + c[5] * s4);
  Eigen::MatrixXd result =
      (even - odd).partialPivLu().solve(even + odd);
  for (int k = 0; k < squarings; ++k) result = result * result;
  if (!result.allFinite()) {
    throw Error(ErrorKind::kNonFinite,
                fmt::format("e^(A t) overflowed (||A t||_1 = {:.3e})", norm1));
  }
  return result;
}

}  // namespace avgtrack
