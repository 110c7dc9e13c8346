#include "eslqr/esc_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eslqr {

namespace {

constexpr double kDivergenceThreshold = 1e12;

void validate_params(const EscParams& params, const CostOracle& oracle) {
  if (!(params.gamma > 0.0)) {
    throw DomainError("step size gamma must be strictly positive");
  }
  if (!(params.delta > 0.0)) {
    throw DomainError(
        "dither amplitude delta must be strictly positive (the gain update "
        "divides by it)");
  }
  if (params.T < 1) {
    throw DomainError("horizon T must be >= 1");
  }
  if (params.iterations < 0) {
    throw DomainError("iteration count must be nonnegative");
  }
  const int m = oracle.input_dim();
  const int n = oracle.state_dim();
  if (params.K0.rows() != m || params.K0.cols() != n) {
    std::ostringstream msg;
    msg << "initial gain must be " << m << "x" << n << ", got "
        << params.K0.rows() << "x" << params.K0.cols();
    throw DimensionError(msg.str());
  }
  if (params.dither.rows() != m || params.dither.cols() != n) {
    std::ostringstream msg;
    msg << "dither schedule must be " << m << "x" << n << ", got "
        << params.dither.rows() << "x" << params.dither.cols();
    throw DimensionError(msg.str());
  }
  if (params.T != oracle.horizon()) {
    std::ostringstream msg;
    msg << "params horizon " << params.T << " does not match oracle horizon "
        << oracle.horizon();
    throw DomainError(msg.str());
  }
  if (!params.K0.allFinite()) {
    throw NonFiniteError("initial gain contains NaN or Inf");
  }
  if (params.f0.has_value() && !std::isfinite(*params.f0)) {
    throw NonFiniteError("initial filter value is not finite");
  }
}

}  // namespace

EscState esc_step(const EscState& state, CostOracle& oracle,
                  const EscParams& params, EscStepInfo* info) {
  const Eigen::MatrixXd D = dither_matrix(params.dither, state.k);
  const Eigen::MatrixXd probed = state.K + params.delta * D;
  const double y = oracle.query(probed);
  if (!std::isfinite(y)) {
    std::ostringstream msg;
    msg << "oracle returned a non-finite cost at iteration " << state.k;
    throw NonFiniteError(msg.str());
  }
  EscState next;
  next.k = state.k + 1;
  next.f = state.f + params.gamma * (y - state.f);
  next.K = state.K -
           (params.gamma * 2.0 * (y - state.f) / params.delta) * D;
  if (info != nullptr) {
    info->y = y;
    info->D = D;
    info->probed_gain = probed;
  }
  return next;
}

RunLog run(const EscParams& params, CostOracle& oracle,
           const RunProbes& probes) {
  validate_params(params, oracle);
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  RunLog log;
  log.records.reserve(static_cast<std::size_t>(params.iterations));
  EscState state;
  state.k = 0;
  state.f = params.f0.value_or(0.0);
  state.K = params.K0;

  for (long k = 0; k < params.iterations; ++k) {
    const Eigen::MatrixXd D = dither_matrix(params.dither, k);
    Eigen::MatrixXd probed = state.K + params.delta * D;
    double y = 0.0;
    try {
      y = oracle.query(probed);
    } catch (const NonFiniteError&) {
      log.status = RunStatus::diverged;
      log.diverged_at = k;
      break;
    }
    if (!std::isfinite(y)) {
      log.status = RunStatus::diverged;
      log.diverged_at = k;
      break;
    }
    if (k == 0 && !params.f0.has_value()) {
      state.f = y;  // start the filter on the first measurement
    }

    RunRecord record;
    record.k = k;
    record.J_probe = y;
    record.f = state.f;
    record.rel_err = probes.rel_err ? probes.rel_err(state.K) : kNaN;
    record.sigma_max = probes.sigma_max ? probes.sigma_max(probed) : kNaN;
    record.K = state.K;
    log.records.push_back(std::move(record));

    const double innovation = y - state.f;
    state.f += params.gamma * innovation;
    state.K.noalias() -=
        (params.gamma * 2.0 * innovation / params.delta) * D;
    state.k = k + 1;

    if (!std::isfinite(state.f) || !state.K.allFinite() ||
        state.K.cwiseAbs().maxCoeff() > kDivergenceThreshold) {
      log.status = RunStatus::diverged;
      log.diverged_at = k;
      break;
    }
  }

  log.final_state = std::move(state);
  return log;
}

}  // namespace eslqr
