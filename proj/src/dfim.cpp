#include "eslqr/dfim.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>
#include <sstream>

#include "eslqr/errors.hpp"

namespace eslqr {

LtiPlant build_dfim(const DfimParams& p) {
  if (!(p.L1 > 0.0) || !(p.L2 > 0.0) || !(p.Lm > 0.0)) {
    throw DomainError("inductances must be positive");
  }
  if (!(p.R1 > 0.0) || !(p.R2 > 0.0)) {
    throw DomainError("resistances must be positive");
  }
  if (!(p.dt > 0.0)) {
    throw DomainError("sampling period must be positive");
  }
  const double L_bar = p.L1 * p.L2 - p.Lm * p.Lm;
  if (L_bar == 0.0) {
    throw DomainError(
        "singular inductance coupling: L1*L2 - Lm^2 must be nonzero");
  }

  const double a = L_bar * p.omega0;
  const double b = p.Lm * p.Lm * p.omega_r;
  const double b12 = p.L1 * p.L2 * p.omega_r;
  const double b1 = p.L1 * p.Lm * p.omega_r;
  const double b2 = p.L2 * p.Lm * p.omega_r;

  Eigen::MatrixXd A_cont(4, 4);
  A_cont << -p.L2 * p.R1, -a + b,        p.Lm * p.R2,  b2,
            a - b,        -p.L2 * p.R1, -b2,          -p.Lm * p.R2,
            p.Lm * p.R1,  -b1,          -p.L1 * p.R2, -a - b12,
            b1,           p.Lm * p.R1,  a + b12,      -p.L1 * p.R2;
  A_cont /= L_bar;

  Eigen::MatrixXd B_cont(4, 4);
  B_cont << p.L2,  0.0,   -p.Lm, 0.0,
            0.0,   p.L2,  0.0,   -p.Lm,
            -p.Lm, 0.0,   p.L1,  0.0,
            0.0,   -p.Lm, 0.0,   p.L1;
  B_cont /= L_bar;

  LtiPlant plant(Eigen::MatrixXd::Identity(4, 4) + p.dt * A_cont,
                 p.dt * B_cont);
  if (!is_controllable(plant)) {
    throw ControllabilityError(
        "controllability check failed for the discretized motor model");
  }
  return plant;
}

namespace {

Eigen::MatrixXd random_gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      M(i, j) = gauss(rng);
    }
  }
  return M;
}

// Symmetric matrix with a seeded random orthogonal eigenbasis and
// eigenvalues drawn uniformly from the open interval (lo, hi).
Eigen::MatrixXd random_spd(std::mt19937_64& rng, int dim, double lo,
                           double hi) {
  const Eigen::MatrixXd G = random_gaussian(rng, dim, dim);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd U = qr.householderQ();
  const Eigen::MatrixXd Rfac =
      qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (Rfac(j, j) < 0.0) {
      U.col(j) = -U.col(j);
    }
  }
  std::uniform_real_distribution<double> uniform(lo, hi);
  Eigen::VectorXd eigs(dim);
  for (int i = 0; i < dim; ++i) {
    double v = uniform(rng);
    while (!(v > lo) || !(v < hi)) {
      v = uniform(rng);  // keep the interval strictly open
    }
    eigs(i) = v;
  }
  Eigen::MatrixXd M = U * eigs.asDiagonal() * U.transpose();
  return 0.5 * (M + M.transpose());
}

}  // namespace

CostSpec random_cost(int n, int m, std::uint64_t seed, double lo, double hi) {
  if (n < 1 || m < 1) {
    throw DimensionError("cost dimensions must be positive");
  }
  if (!(lo >= 0.0) || !(hi > lo)) {
    std::ostringstream msg;
    msg << "eigenvalue range (" << lo << ", " << hi
        << ") must satisfy 0 <= lo < hi";
    throw DomainError(msg.str());
  }
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd Q = random_spd(rng, n, lo, hi);
  const Eigen::MatrixXd R = random_spd(rng, m, lo, hi);
  return CostSpec(Q, R);
}

LtiPlant random_plant(int n, int m, std::uint64_t seed,
                      double spectral_radius_target, double input_scale) {
  if (n < 1 || m < 1) {
    throw DimensionError("plant dimensions must be positive");
  }
  if (!(spectral_radius_target > 0.0)) {
    throw DomainError("spectral radius target must be positive");
  }
  if (!(input_scale > 0.0)) {
    throw DomainError("input scale must be positive");
  }
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd A = random_gaussian(rng, n, n);
  double rho = spectral_radius(A);
  while (!(rho > 0.0)) {
    A = random_gaussian(rng, n, n);  // a nilpotent draw has probability ~0
    rho = spectral_radius(A);
  }
  A *= spectral_radius_target / rho;
  const Eigen::MatrixXd B = input_scale * random_gaussian(rng, n, m);
  return LtiPlant(A, B);
}

}  // namespace eslqr
