#pragma once

#include <Eigen/Dense>

#include "eslqr/lti_cost.hpp"

namespace eslqr {

// Ground-truth optimum of the infinite-horizon problem. Used only for
// verification and error reporting; the data-driven optimizer never sees it.
struct DareSolution {
  Eigen::MatrixXd P_star;  // symmetric positive definite cost-to-go
  Eigen::MatrixXd K_star;  // optimal gain -(R + B'PB)^{-1} B'PA
  double J_star = 0.0;     // 1/2 Tr(P_star)
  double residual = 0.0;   // max-entry Riccati residual at P_star
  long iterations = 0;     // fixed-point iterations performed

  // Residual tolerance actually enforced: the raw residual scales with
  // ||P_star||, so the gate is residual < 1e-9 * max(1, max|P_star|).
};

// Solves the discrete-time algebraic Riccati equation by fixed-point value
// iteration P <- Q + A'PA - A'PB (R + B'PB)^{-1} B'PA starting from P = Q.
// Stops when the max-entry change drops below 1e-12 * max(1, max|P|)
// (iteration cap 1e6). Requires (A, B) controllable (ControllabilityError
// otherwise); throws SolverError if the iteration cap is reached or the
// solution fails its invariants (symmetric positive definite P, Schur
// closed loop, scaled residual below 1e-9).
DareSolution solve_dare(const LtiPlant& plant, const CostSpec& cost);

}  // namespace eslqr
