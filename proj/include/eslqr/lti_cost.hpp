#pragma once

#include <Eigen/Dense>
#include <vector>

#include "eslqr/errors.hpp"

namespace eslqr {

// State-feedback gain u = K x, stored as an m-by-n matrix. Non-stabilizing
// gains are representable; stabilizing-ness is a predicate, not an invariant.
using Gain = Eigen::MatrixXd;

// Discrete-time plant x_{t+1} = A x_t + B u_t with A (n-by-n) and B (n-by-m).
struct LtiPlant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  LtiPlant(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

// Quadratic stage cost x'Qx + u'Ru. Both matrices must be symmetric (max
// entrywise asymmetry 1e-12) with strictly positive eigenvalues.
struct CostSpec {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;

  CostSpec(Eigen::MatrixXd Q_in, Eigen::MatrixXd R_in);
};

// Record of one closed-loop experiment of horizon T: states x_0..x_T,
// inputs u_0..u_{T-1}, and stage costs x_t'Qx_t + u_t'Ru_t for t < T.
struct Rollout {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> stage_costs;
};

// Byproducts of the exact gradient: closed-loop cost-to-go P and the
// closed-loop Gramian W_c (both symmetric positive semidefinite).
struct GradientWorkspace {
  Eigen::MatrixXd P;
  Eigen::MatrixXd W_c;
};

// Returns A + B K. Throws DimensionError on shape mismatch.
Eigen::MatrixXd closed_loop(const LtiPlant& plant, const Gain& K);

// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Eigen::MatrixXd& M);

// True iff the spectral radius is < 1 - margin. The margin guards against
// boundary eigenvalues that make the Lyapunov solves below ill-posed.
bool is_schur(const Eigen::MatrixXd& M, double margin = 1e-10);

// Solves M' X M - X = -C for symmetric C and Schur M; the result is
// symmetrized and satisfies the equation with max-entry residual < 1e-10.
// Direct Kronecker-vectorized solve for n <= 16, geometric doubling sum
// beyond. Throws UnstableError if M is not Schur, SolverError if the
// residual tolerance cannot be met.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& M,
                                        const Eigen::MatrixXd& C);

// Infinite-horizon cost J(K) = 1/2 Tr(P) with P the closed-loop cost-to-go,
// i.e. the solution of (A+BK)' P (A+BK) - P = -(Q + K'RK). This equals the
// sum over the canonical-basis initial states; see README for the scaling
// convention (no 1/n averaging). Throws UnstableError for non-stabilizing K.
double infinite_cost(const LtiPlant& plant, const CostSpec& cost, const Gain& K);

// Finite-horizon cost J_T(K): the sum of the first T stage costs accumulated
// over n closed-loop rollouts started at the canonical basis vectors, with
// u_t = K x_t. Defined (finite) for any gain; an overflowing rollout raises
// NonFiniteError.
double truncated_cost(const LtiPlant& plant, const CostSpec& cost,
                      const Gain& K, long T);

// Same value through the matrix-power trace formula
// 1/2 Tr(sum_{t<T} M'^t (Q+K'RK) M^t); independent computation path used to
// cross-check truncated_cost to 1e-9.
double truncated_cost_trace(const LtiPlant& plant, const CostSpec& cost,
                            const Gain& K, long T);

// Exact policy gradient G(K) = (RK + B'P(A+BK)) W_c, where W_c solves
// (A+BK) W_c (A+BK)' - W_c = -I. Optionally exposes P and W_c through
// `workspace`. Throws UnstableError for non-stabilizing K.
Eigen::MatrixXd exact_gradient(const LtiPlant& plant, const CostSpec& cost,
                               const Gain& K,
                               GradientWorkspace* workspace = nullptr);

// Simulates x_{t+1} = (A + BK) x_t from x0 for T steps, recording states,
// inputs u_t = K x_t, and stage costs. Throws NonFiniteError if an iterate
// stops being finite.
Rollout simulate_rollout(const LtiPlant& plant, const CostSpec& cost,
                         const Gain& K, const Eigen::VectorXd& x0, long T);

// Rank of [B, AB, ..., A^{n-1}B], counting singular values above
// n * sigma_max * 1e-12.
int controllability_rank(const LtiPlant& plant);

bool is_controllable(const LtiPlant& plant);

}  // namespace eslqr
