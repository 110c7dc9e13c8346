#include "eslqr/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <sstream>

#include "eslqr/errors.hpp"

namespace eslqr {

DareSolution solve_dare(const LtiPlant& plant, const CostSpec& cost) {
  const int n = plant.n();
  if (cost.Q.rows() != n || cost.R.rows() != plant.m()) {
    std::ostringstream msg;
    msg << "cost dimensions (" << cost.Q.rows() << ", " << cost.R.rows()
        << ") do not match plant dimensions (" << n << ", " << plant.m()
        << ")";
    throw DimensionError(msg.str());
  }
  if (!is_controllable(plant)) {
    std::ostringstream msg;
    msg << "controllability check failed: rank " << controllability_rank(plant)
        << " < " << n;
    throw ControllabilityError(msg.str());
  }

  const Eigen::MatrixXd& A = plant.A;
  const Eigen::MatrixXd& B = plant.B;
  Eigen::MatrixXd P = cost.Q;
  const long cap = 1000000;
  long iterations = 0;
  for (; iterations < cap; ++iterations) {
    const Eigen::MatrixXd PA = P * A;
    const Eigen::MatrixXd PB = P * B;
    const Eigen::MatrixXd gram = cost.R + B.transpose() * PB;
    // gram = R + B'PB is symmetric positive definite (R is PD, P is PSD).
    const Eigen::MatrixXd gain_term =
        Eigen::LDLT<Eigen::MatrixXd>(0.5 * (gram + gram.transpose()))
            .solve(B.transpose() * PA);
    Eigen::MatrixXd P_next =
        cost.Q + A.transpose() * PA - (PA.transpose() * B) * gain_term;
    P_next = 0.5 * (P_next + P_next.transpose()).eval();
    const double change = (P_next - P).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, P_next.cwiseAbs().maxCoeff());
    P = std::move(P_next);
    if (change < 1e-12 * scale) {
      ++iterations;
      break;
    }
  }
  if (iterations >= cap) {
    throw SolverError(
        "Riccati fixed-point iteration did not converge within 1e6 steps");
  }

  const Eigen::MatrixXd gram = cost.R + B.transpose() * P * B;
  DareSolution sol;
  sol.P_star = P;
  sol.K_star = -Eigen::LDLT<Eigen::MatrixXd>(0.5 * (gram + gram.transpose()))
                    .solve(B.transpose() * P * A);
  sol.J_star = 0.5 * P.trace();
  sol.iterations = iterations;

  // Residual of the gain-form equation P = Q + A'P(A + B K*).
  const Eigen::MatrixXd closed = A + B * sol.K_star;
  const Eigen::MatrixXd res_mat =
      cost.Q + A.transpose() * P * closed - P;
  sol.residual = res_mat.cwiseAbs().maxCoeff();

  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if (!(sol.residual < 1e-9 * scale)) {
    std::ostringstream msg;
    msg << "Riccati residual " << sol.residual
        << " exceeds tolerance 1e-9 * " << scale;
    throw SolverError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw SolverError("Riccati solution is not positive definite");
  }
  if (!is_schur(closed)) {
    throw SolverError("optimal closed loop is not Schur");
  }
  return sol;
}

}  // namespace eslqr
