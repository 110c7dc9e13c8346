#pragma once

#include <cstdint>
#include <numbers>

#include "eslqr/lti_cost.hpp"

namespace eslqr {

// Physical parameters of a doubly fed induction motor operating at constant
// speed, in SI units. The state is the stator/rotor current vector
// (i_1u, i_1v, i_2u, i_2v); the input is the corresponding voltage vector.
struct DfimParams {
  double L1 = 0.02645;       // stator self-inductance [H]
  double L2 = 0.0264;        // rotor self-inductance [H]
  double Lm = 0.0257;        // mutual inductance [H]
  double R1 = 0.036;         // stator resistance [ohm]
  double R2 = 0.038;         // rotor resistance [ohm]
  double omega0 = 2.0 * std::numbers::pi * 70.8;  // frame speed [rad/s]
  double omega_r = 2.0 * std::numbers::pi * 62.0; // rotor speed [rad/s]
  int pole_pairs = 3;        // recorded for completeness; not used in the
                             // current-dynamics matrices
  double dt = 1e-2;          // sampling period [s]
};

// Forward-Euler discretization of the constant-speed current dynamics:
// A = I + dt * A_cont, B = dt * B_cont, a 4-state/4-input plant. Requires a
// nonsingular inductance coupling L1*L2 - Lm^2 and positive physical
// parameters; asserts that the discrete pair (A, B) is controllable.
LtiPlant build_dfim(const DfimParams& params = {});

// Random symmetric positive-definite cost pair: Q (n-by-n) and R (m-by-m)
// are built as U diag(lambda) U' with U a seeded random orthogonal basis
// (QR of a Gaussian matrix, signs fixed by the R-factor diagonal) and
// eigenvalues drawn uniformly from the open interval (lo, hi). The same
// seed reproduces the matrices bit for bit.
CostSpec random_cost(int n, int m, std::uint64_t seed, double lo = 0.0,
                     double hi = 2.0);

// Seeded random controllable test plant: A is a Gaussian matrix rescaled to
// the requested spectral radius, B a Gaussian matrix scaled by input_scale.
// Instance generator for the randomized verification suites.
LtiPlant random_plant(int n, int m, std::uint64_t seed,
                      double spectral_radius_target = 0.5,
                      double input_scale = 0.5);

}  // namespace eslqr
