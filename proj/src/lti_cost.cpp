#include "eslqr/lti_cost.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "eslqr/kahan.hpp"

namespace eslqr {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    std::ostringstream msg;
    msg << name << " must be a nonempty square matrix, got " << M.rows()
        << "x" << M.cols();
    throw DimensionError(msg.str());
  }
}

void require_finite(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) {
    throw NonFiniteError(std::string(name) + " contains NaN or Inf entries");
  }
}

void require_symmetric(const Eigen::MatrixXd& M, const char* name,
                       double tol) {
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol)) {
    std::ostringstream msg;
    msg << name << " must be symmetric: max asymmetry " << asym
        << " exceeds " << tol;
    throw DomainError(msg.str());
  }
}

void require_positive_definite(const Eigen::MatrixXd& M, const char* name) {
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw SolverError(std::string("eigenvalue computation failed for ") + name);
  }
  const double min_eig = eig.eigenvalues().minCoeff();
  if (!(min_eig > 0.0)) {
    std::ostringstream msg;
    msg << name << " must be positive definite: smallest eigenvalue "
        << min_eig;
    throw DomainError(msg.str());
  }
}

void require_gain_shape(const LtiPlant& plant, const Gain& K) {
  if (K.rows() != plant.m() || K.cols() != plant.n()) {
    std::ostringstream msg;
    msg << "gain must be " << plant.m() << "x" << plant.n() << ", got "
        << K.rows() << "x" << K.cols();
    throw DimensionError(msg.str());
  }
}

// Core solve of M' X M - X = -C without the residual gate; C symmetric.
Eigen::MatrixXd lyapunov_core(const Eigen::MatrixXd& M,
                              const Eigen::MatrixXd& C) {
  const Eigen::Index n = M.rows();
  if (n <= 16) {
    // Vectorized linear system (I - kron(M', M')) vec(X) = vec(C), exact at
    // these sizes because every eigenvalue of kron(M', M') has magnitude
    // rho(M)^2 < 1.
    const Eigen::Index nn = n * n;
    const Eigen::MatrixXd Mt = M.transpose();
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(nn, nn);
    for (Eigen::Index bi = 0; bi < n; ++bi) {
      for (Eigen::Index bj = 0; bj < n; ++bj) {
        sys.block(bi * n, bj * n, n, n).noalias() -= Mt(bi, bj) * Mt;
      }
    }
    Eigen::VectorXd rhs(nn);
    for (Eigen::Index j = 0; j < n; ++j) {
      rhs.segment(j * n, n) = C.col(j);
    }
    const Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(sys).solve(rhs);
    Eigen::MatrixXd X(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      X.col(j) = sol.segment(j * n, n);
    }
    return X;
  }
  // Doubling accumulation of sum_t M'^t C M^t: each pass squares the
  // propagated power, so convergence is geometric in log2 of the effective
  // horizon.
  Eigen::MatrixXd X = C;
  Eigen::MatrixXd Pw = M;
  for (int pass = 0; pass < 200; ++pass) {
    const Eigen::MatrixXd incr = Pw.transpose() * X * Pw;
    X += incr;
    if (!X.allFinite()) {
      throw UnstableError(
          "discrete Lyapunov accumulation diverged; matrix is not Schur");
    }
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if (incr.cwiseAbs().maxCoeff() < 1e-16 * scale) {
      return X;
    }
    Pw = (Pw * Pw).eval();
  }
  throw SolverError(
      "discrete Lyapunov accumulation did not converge within 200 doublings");
}

}  // namespace

LtiPlant::LtiPlant(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in)
    : A(std::move(A_in)), B(std::move(B_in)) {
  require_square(A, "A");
  if (B.rows() != A.rows() || B.cols() < 1) {
    std::ostringstream msg;
    msg << "B must have " << A.rows() << " rows and at least one column, got "
        << B.rows() << "x" << B.cols();
    throw DimensionError(msg.str());
  }
  require_finite(A, "A");
  require_finite(B, "B");
}

CostSpec::CostSpec(Eigen::MatrixXd Q_in, Eigen::MatrixXd R_in)
    : Q(std::move(Q_in)), R(std::move(R_in)) {
  require_square(Q, "Q");
  require_square(R, "R");
  require_finite(Q, "Q");
  require_finite(R, "R");
  require_symmetric(Q, "Q", 1e-12);
  require_symmetric(R, "R", 1e-12);
  require_positive_definite(Q, "Q");
  require_positive_definite(R, "R");
}

Eigen::MatrixXd closed_loop(const LtiPlant& plant, const Gain& K) {
  require_gain_shape(plant, K);
  return plant.A + plant.B * K;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  require_square(M, "M");
  if (!M.allFinite()) {
    throw NonFiniteError("spectral radius of a matrix with NaN/Inf entries");
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(M, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) {
    throw SolverError("eigenvalue computation failed in spectral_radius");
  }
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_schur(const Eigen::MatrixXd& M, double margin) {
  return spectral_radius(M) < 1.0 - margin;
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& M,
                                        const Eigen::MatrixXd& C) {
  require_square(M, "M");
  require_square(C, "C");
  if (M.rows() != C.rows()) {
    throw DimensionError("M and C must have matching dimensions");
  }
  require_finite(M, "M");
  require_finite(C, "C");
  require_symmetric(C, "C", 1e-12);
  if (!is_schur(M)) {
    std::ostringstream msg;
    msg << "matrix is not Schur (spectral radius " << spectral_radius(M)
        << "); discrete Lyapunov equation has no stable solution";
    throw UnstableError(msg.str());
  }

  const Eigen::MatrixXd Cs = 0.5 * (C + C.transpose());
  Eigen::MatrixXd X = lyapunov_core(M, Cs);
  X = 0.5 * (X + X.transpose()).eval();

  auto residual = [&](const Eigen::MatrixXd& cand) {
    return (M.transpose() * cand * M - cand + Cs).cwiseAbs().maxCoeff();
  };
  if (residual(X) > 1e-10) {
    // One step of iterative refinement: the correction solves the same
    // equation driven by the (symmetric) residual matrix.
    const Eigen::MatrixXd res = M.transpose() * X * M - X + Cs;
    Eigen::MatrixXd corr = lyapunov_core(M, 0.5 * (res + res.transpose()));
    X += corr;
    X = 0.5 * (X + X.transpose()).eval();
  }
  const double final_res = residual(X);
  if (!(final_res < 1e-10)) {
    std::ostringstream msg;
    msg << "discrete Lyapunov residual " << final_res
        << " exceeds tolerance 1e-10";
    throw SolverError(msg.str());
  }
  return X;
}

double infinite_cost(const LtiPlant& plant, const CostSpec& cost,
                     const Gain& K) {
  require_gain_shape(plant, K);
  require_finite(K, "K");
  const Eigen::MatrixXd M = closed_loop(plant, K);
  if (!is_schur(M)) {
    std::ostringstream msg;
    msg << "unstable closed loop: spectral radius " << spectral_radius(M)
        << " is not inside the unit disk";
    throw UnstableError(msg.str());
  }
  Eigen::MatrixXd S = cost.Q + K.transpose() * cost.R * K;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd P = solve_discrete_lyapunov(M, S);
  return 0.5 * P.trace();
}

double truncated_cost(const LtiPlant& plant, const CostSpec& cost,
                      const Gain& K, long T) {
  require_gain_shape(plant, K);
  require_finite(K, "K");
  if (T < 1) {
    throw DomainError("horizon T must be >= 1");
  }
  const int n = plant.n();
  KahanSum total;
  Eigen::VectorXd x(n), u(plant.m()), qx(n), ru(plant.m()), x_next(n);
  for (int i = 0; i < n; ++i) {
    x = Eigen::VectorXd::Unit(n, i);
    for (long t = 0; t < T; ++t) {
      u.noalias() = K * x;
      qx.noalias() = cost.Q * x;
      ru.noalias() = cost.R * u;
      const double stage = x.dot(qx) + u.dot(ru);
      if (!std::isfinite(stage)) {
        std::ostringstream msg;
        msg << "finite-horizon cost overflowed at rollout " << i << ", step "
            << t << " (gain far outside the stabilizing set)";
        throw NonFiniteError(msg.str());
      }
      total.add(stage);
      x_next.noalias() = plant.A * x;
      x_next.noalias() += plant.B * u;
      x.swap(x_next);
    }
  }
  return 0.5 * total.value();
}

double truncated_cost_trace(const LtiPlant& plant, const CostSpec& cost,
                            const Gain& K, long T) {
  require_gain_shape(plant, K);
  require_finite(K, "K");
  if (T < 1) {
    throw DomainError("horizon T must be >= 1");
  }
  const Eigen::MatrixXd M = closed_loop(plant, K);
  Eigen::MatrixXd S = cost.Q + K.transpose() * cost.R * K;
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(plant.n(), plant.n());
  KahanSum total;
  for (long t = 0; t < T; ++t) {
    const double term = (Z.transpose() * S * Z).trace();
    if (!std::isfinite(term)) {
      throw NonFiniteError("finite-horizon trace sum overflowed");
    }
    total.add(term);
    Z = (M * Z).eval();
  }
  return 0.5 * total.value();
}

Eigen::MatrixXd exact_gradient(const LtiPlant& plant, const CostSpec& cost,
                               const Gain& K, GradientWorkspace* workspace) {
  require_gain_shape(plant, K);
  require_finite(K, "K");
  const Eigen::MatrixXd M = closed_loop(plant, K);
  if (!is_schur(M)) {
    std::ostringstream msg;
    msg << "unstable closed loop: spectral radius " << spectral_radius(M)
        << "; the exact gradient is defined on stabilizing gains only";
    throw UnstableError(msg.str());
  }
  Eigen::MatrixXd S = cost.Q + K.transpose() * cost.R * K;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd P = solve_discrete_lyapunov(M, S);
  // W_c solves M W_c M' - W_c = -I, i.e. the transposed-argument problem.
  const Eigen::MatrixXd W_c = solve_discrete_lyapunov(
      M.transpose(), Eigen::MatrixXd::Identity(plant.n(), plant.n()));
  Eigen::MatrixXd G =
      (cost.R * K + plant.B.transpose() * P * M) * W_c;
  if (workspace != nullptr) {
    workspace->P = P;
    workspace->W_c = W_c;
  }
  return G;
}

Rollout simulate_rollout(const LtiPlant& plant, const CostSpec& cost,
                         const Gain& K, const Eigen::VectorXd& x0, long T) {
  require_gain_shape(plant, K);
  require_finite(K, "K");
  if (x0.size() != plant.n()) {
    std::ostringstream msg;
    msg << "x0 must have dimension " << plant.n() << ", got " << x0.size();
    throw DimensionError(msg.str());
  }
  if (T < 1) {
    throw DomainError("horizon T must be >= 1");
  }
  Rollout out;
  out.states.reserve(static_cast<std::size_t>(T) + 1);
  out.inputs.reserve(static_cast<std::size_t>(T));
  out.stage_costs.reserve(static_cast<std::size_t>(T));
  Eigen::VectorXd x = x0;
  for (long t = 0; t < T; ++t) {
    const Eigen::VectorXd u = K * x;
    const double stage = x.dot(cost.Q * x) + u.dot(cost.R * u);
    if (!x.allFinite() || !u.allFinite() || !std::isfinite(stage)) {
      std::ostringstream msg;
      msg << "rollout produced a non-finite iterate at step " << t;
      throw NonFiniteError(msg.str());
    }
    out.states.push_back(x);
    out.inputs.push_back(u);
    out.stage_costs.push_back(stage);
    x = plant.A * x + plant.B * u;
  }
  if (!x.allFinite()) {
    throw NonFiniteError("rollout produced a non-finite terminal state");
  }
  out.states.push_back(x);
  return out;
}

int controllability_rank(const LtiPlant& plant) {
  const int n = plant.n();
  const int m = plant.m();
  Eigen::MatrixXd ctrb(n, n * m);
  Eigen::MatrixXd block = plant.B;
  for (int i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = block;
    if (i + 1 < n) {
      block = (plant.A * block).eval();
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) {
    return 0;
  }
  const double threshold = static_cast<double>(n) * sv(0) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) {
      ++rank;
    }
  }
  return rank;
}

bool is_controllable(const LtiPlant& plant) {
  return controllability_rank(plant) == plant.n();
}

}  // namespace eslqr
