#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "eslqr/cost_oracle.hpp"
#include "eslqr/dither.hpp"
#include "eslqr/errors.hpp"

// The optimizer in this header sees the plant only through CostOracle and
// the perturbation schedule through DitherSpec. It deliberately does not
// include any plant/cost/solver headers, which keeps the "model-free"
// boundary auditable by dependency direction.

namespace eslqr {

struct EscParams {
  double gamma = 0.0;          // step size, > 0
  double delta = 0.0;          // dither amplitude, > 0
  long T = 0;                  // experiment horizon, >= 1
  long iterations = 0;         // loop length, >= 0
  DitherSpec dither;           // perturbation schedule, m-by-n
  Eigen::MatrixXd K0;          // initial gain, m-by-n
  std::optional<double> f0;    // initial filter value; empty = use the first
                               // measured cost (removes the initial
                               // transient of the gain update)
};

// Loop state: iteration counter, scalar cost-tracking filter, current gain.
struct EscState {
  long k = 0;
  double f = 0.0;
  Eigen::MatrixXd K;
};

// Byproducts of one step, for logging and tests.
struct EscStepInfo {
  double y = 0.0;               // measured cost at the probed gain
  Eigen::MatrixXd D;            // dither matrix used at this step
  Eigen::MatrixXd probed_gain;  // K + delta * D
};

struct RunRecord {
  long k = 0;
  double J_probe = 0.0;   // measured cost at the probed gain
  double f = 0.0;         // filter value entering this iteration
  double rel_err = 0.0;   // verification probe; NaN when not configured
  double sigma_max = 0.0; // verification probe; NaN when not configured
  Eigen::MatrixXd K;      // gain entering this iteration
};

enum class RunStatus { completed, diverged };

struct RunLog {
  std::vector<RunRecord> records;
  RunStatus status = RunStatus::completed;
  long diverged_at = -1;  // iteration whose measurement or update blew up
  EscState final_state;
};

// Verification-side observers, evaluated outside the optimizer's own data
// path; the update never reads them. rel_err receives the unperturbed gain,
// sigma_max receives the probed gain.
struct RunProbes {
  std::function<double(const Eigen::MatrixXd&)> rel_err;
  std::function<double(const Eigen::MatrixXd&)> sigma_max;
};

// One optimization step. With D the dither matrix at step state.k and
// y = oracle(K + delta * D):
//   f+ = f + gamma * (y - f)
//   K+ = K - gamma * 2 * (y - f) * D / delta
// exactly — no damping, no projection. Throws NonFiniteError if the oracle
// returns a non-finite measurement. `info`, when non-null, receives the
// measurement and the probed gain.
EscState esc_step(const EscState& state, CostOracle& oracle,
                  const EscParams& params, EscStepInfo* info = nullptr);

// Runs params.iterations steps from K0, logging one record per completed
// measurement. A non-finite measurement, a non-finite filter/gain update, or
// any gain entry exceeding 1e12 in magnitude ends the run with status
// `diverged` and diverged_at set to the offending iteration (the record for
// that iteration is kept when its measurement succeeded). Identical params
// and a deterministic oracle give bit-identical logs.
RunLog run(const EscParams& params, CostOracle& oracle,
           const RunProbes& probes = {});

}  // namespace eslqr
