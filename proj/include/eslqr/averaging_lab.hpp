#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "eslqr/cost_oracle.hpp"
#include "eslqr/dither.hpp"
#include "eslqr/esc_solver.hpp"
#include "eslqr/lti_cost.hpp"

// Harness for relating the live periodically-forced iteration
// chi+ = chi + gamma * F(chi, k) to its time-invariant period-averaged
// counterpart: field averaging, co-simulation, step-size scaling studies,
// and the period-averaged form of the gain optimizer together with the
// measurable error terms behind it (finite-horizon truncation gap and the
// quadratic-in-amplitude gradient estimation error).

namespace eslqr {

// Time-varying field F(chi, k), periodic in k with the stated period.
struct PeriodicField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::int64_t)> eval;
  std::int64_t period = 0;
  int dim = 0;
};

// Validates and wraps an evaluator. Periodicity is spot-checked on 16
// seeded random probe points (chi, k): the evaluation at k and k + period
// must agree within 1e-12 * max(1, |F|_inf); a mismatch throws DomainError.
PeriodicField make_periodic_field(
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::int64_t)> eval,
    std::int64_t period, int dim);

// Time-invariant field obtained by explicit period-mean.
struct AveragedField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  int dim = 0;
};

// chi -> (1/period) * sum_{tau=1..period} F(chi, tau). Independence from the
// window start is asserted on 16 probe points by comparing the windows
// [1, period] and [2, period+1] at 1e-12 * max(1, |mean|_inf); a mismatch
// throws DomainError ("field not periodic-averageable").
AveragedField average_field(const PeriodicField& field);

// Co-simulated trajectories of the live and averaged dynamics from a shared
// initial point, with per-step Euclidean deviations (deviations[0] == 0).
// `aborted` marks a run cut short by a non-finite iterate; the recorded
// prefixes are kept.
struct TrajectoryPair {
  std::vector<Eigen::VectorXd> original;
  std::vector<Eigen::VectorXd> averaged;
  std::vector<double> deviations;
  bool aborted = false;
};

TrajectoryPair simulate_pair(const PeriodicField& field,
                             const Eigen::VectorXd& chi0, double gamma,
                             long steps);

// Sup-deviation scaling study over a decreasing step-size grid at a fixed
// continuous horizon theta (each gamma simulates ceil(theta/gamma) steps).
struct ScalingReport {
  std::vector<double> gammas;
  std::vector<double> sup_deviations;
  std::vector<double> ratios;  // consecutive sup-deviation ratios
  bool aborted = false;
  bool pass = false;  // no aborts and every ratio <= 0.8
};

ScalingReport closeness_scaling(const PeriodicField& field,
                                const Eigen::VectorXd& chi0,
                                const std::vector<double>& gamma_grid,
                                double theta);

// Row-major matrix flattening used for the stacked state chi = [f; vec(K)]
// and for all serialized gain layouts.
Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& M);
Eigen::MatrixXd unflatten_row_major(const Eigen::VectorXd& v, int rows,
                                    int cols);

// The gain optimizer written as a periodic field on chi = [f; vec(K)]:
// F(chi, k) = [y - f; -(2/delta) (y - f) vec(D^k)] with
// y = oracle(K + delta D^k). The oracle is captured by reference and must
// outlive the field. Period is the dither's common period.
PeriodicField make_esc_field(CostOracle& oracle, const EscParams& params);

// Period-averaged probed cost (1/k_prd) sum_tau J_T(K + delta D^tau) over
// tau = 1..k_prd.
double averaged_probe_cost(const LtiPlant& plant, const CostSpec& cost,
                           const Gain& K, double delta,
                           const DitherSpec& dither, long T);

// State of the period-averaged optimizer.
struct AveragedEscState {
  double f = 0.0;
  Eigen::MatrixXd K;
};

// One step of the period-averaged optimizer:
//   f+ = f + gamma * (J_av - f)         with J_av = averaged_probe_cost
//   K+ = K - gamma * (2/(delta k_prd)) * sum_tau J_T(K + delta D^tau) D^tau
// The gain increment is the exact period-mean of the live update's gain
// field. Requires A + BK and every probed loop A + B(K + delta D^tau) to be
// Schur (UnstableError otherwise); gamma = 0 returns the state unchanged.
AveragedEscState averaged_esc_step(const AveragedEscState& state,
                                   const LtiPlant& plant, const CostSpec& cost,
                                   const EscParams& params);

// Finite-horizon truncation gap J(K) - J_T(K); nonnegative for stabilizing
// K and nonincreasing in T.
double truncation_gap(const LtiPlant& plant, const CostSpec& cost,
                      const Gain& K, long T);

// Frobenius distance between the dither-correlation gradient estimate
// (2/(delta k_prd)) sum_tau J(K + delta D^tau) D^tau and the exact gradient
// G(K). With use_infinite the probes use the infinite-horizon cost (the
// estimate's error then scales as delta^2); otherwise the finite-horizon
// cost at horizon T.
double gradient_estimate_error(const LtiPlant& plant, const CostSpec& cost,
                               const Gain& K, double delta,
                               const DitherSpec& dither, bool use_infinite,
                               long T = 0);

}  // namespace eslqr
