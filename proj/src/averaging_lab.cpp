#include "eslqr/averaging_lab.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "eslqr/kahan.hpp"

namespace eslqr {

namespace {

// Per-coordinate compensated accumulator for vector sums over a period.
class KahanVector {
 public:
  explicit KahanVector(int dim) : sums_(static_cast<std::size_t>(dim)) {}

  void add(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      sums_[static_cast<std::size_t>(i)].add(v(i));
    }
  }

  Eigen::VectorXd value() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(sums_.size()));
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = sums_[i].value();
    }
    return out;
  }

 private:
  std::vector<KahanSum> sums_;
};

Eigen::VectorXd window_mean(const PeriodicField& field,
                            const Eigen::VectorXd& chi,
                            std::int64_t window_start) {
  KahanVector acc(field.dim);
  for (std::int64_t tau = window_start; tau < window_start + field.period;
       ++tau) {
    acc.add(field.eval(chi, tau));
  }
  return acc.value() / static_cast<double>(field.period);
}

}  // namespace

PeriodicField make_periodic_field(
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::int64_t)> eval,
    std::int64_t period, int dim) {
  if (!eval) {
    throw DomainError("periodic field requires an evaluator");
  }
  if (period < 1) {
    throw DomainError("periodic field requires a period >= 1");
  }
  if (dim < 1) {
    throw DomainError("periodic field requires a positive dimension");
  }
  PeriodicField field;
  field.eval = std::move(eval);
  field.period = period;
  field.dim = dim;

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> step(0, 2 * period - 1);
  for (int probe = 0; probe < 16; ++probe) {
    Eigen::VectorXd chi(dim);
    for (int i = 0; i < dim; ++i) {
      chi(i) = gauss(rng);
    }
    const std::int64_t k = step(rng);
    const Eigen::VectorXd a = field.eval(chi, k);
    const Eigen::VectorXd b = field.eval(chi, k + period);
    if (a.size() != dim || b.size() != dim) {
      throw DimensionError("field evaluator returned the wrong dimension");
    }
    const double scale =
        std::max(1.0, a.cwiseAbs().maxCoeff());
    if (!((a - b).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
      std::ostringstream msg;
      msg << "field is not periodic with the declared period " << period
          << " (probe " << probe << " deviates by "
          << (a - b).cwiseAbs().maxCoeff() << ")";
      throw DomainError(msg.str());
    }
  }
  return field;
}

AveragedField average_field(const PeriodicField& field) {
  if (!field.eval || field.period < 1 || field.dim < 1) {
    throw DomainError("average_field requires a validated periodic field");
  }

  std::mt19937_64 rng(0xa4e4a4e4ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int probe = 0; probe < 16; ++probe) {
    Eigen::VectorXd chi(field.dim);
    for (int i = 0; i < field.dim; ++i) {
      chi(i) = gauss(rng);
    }
    const Eigen::VectorXd mean_a = window_mean(field, chi, 1);
    const Eigen::VectorXd mean_b = window_mean(field, chi, 2);
    const double scale = std::max(1.0, mean_a.cwiseAbs().maxCoeff());
    if (!((mean_a - mean_b).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
      std::ostringstream msg;
      msg << "field not periodic-averageable: window means differ by "
          << (mean_a - mean_b).cwiseAbs().maxCoeff() << " at probe " << probe;
      throw DomainError(msg.str());
    }
  }

  AveragedField averaged;
  averaged.dim = field.dim;
  averaged.eval = [field](const Eigen::VectorXd& chi) {
    return window_mean(field, chi, 1);
  };
  return averaged;
}

TrajectoryPair simulate_pair(const PeriodicField& field,
                             const Eigen::VectorXd& chi0, double gamma,
                             long steps) {
  if (steps < 1) {
    throw DomainError("simulate_pair requires steps >= 1");
  }
  if (!(gamma > 0.0)) {
    throw DomainError("simulate_pair requires gamma > 0");
  }
  if (chi0.size() != field.dim) {
    throw DimensionError("chi0 dimension does not match the field");
  }
  const AveragedField averaged = average_field(field);

  TrajectoryPair pair;
  pair.original.reserve(static_cast<std::size_t>(steps) + 1);
  pair.averaged.reserve(static_cast<std::size_t>(steps) + 1);
  pair.deviations.reserve(static_cast<std::size_t>(steps) + 1);

  Eigen::VectorXd chi = chi0;
  Eigen::VectorXd chi_av = chi0;
  pair.original.push_back(chi);
  pair.averaged.push_back(chi_av);
  pair.deviations.push_back(0.0);

  for (long k = 0; k < steps; ++k) {
    // Oracle-backed fields throw rather than return Inf when a probed
    // trajectory overflows; either way the run is cut short, not failed.
    try {
      chi = chi + gamma * field.eval(chi, k);
      chi_av = chi_av + gamma * averaged.eval(chi_av);
    } catch (const NonFiniteError&) {
      pair.aborted = true;
      break;
    }
    if (!chi.allFinite() || !chi_av.allFinite()) {
      pair.aborted = true;
      break;
    }
    pair.original.push_back(chi);
    pair.averaged.push_back(chi_av);
    pair.deviations.push_back((chi - chi_av).norm());
  }
  return pair;
}

ScalingReport closeness_scaling(const PeriodicField& field,
                                const Eigen::VectorXd& chi0,
                                const std::vector<double>& gamma_grid,
                                double theta) {
  if (gamma_grid.size() < 2) {
    throw DomainError("closeness_scaling needs at least two step sizes");
  }
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    if (!(gamma_grid[i] > 0.0)) {
      throw DomainError("closeness_scaling step sizes must be positive");
    }
    if (i > 0 && !(gamma_grid[i] < gamma_grid[i - 1])) {
      throw DomainError(
          "closeness_scaling expects a strictly decreasing step-size grid");
    }
  }
  if (!(theta > 0.0)) {
    throw DomainError("closeness_scaling horizon theta must be positive");
  }

  ScalingReport report;
  report.gammas = gamma_grid;
  for (double gamma : gamma_grid) {
    const long steps = static_cast<long>(std::ceil(theta / gamma));
    const TrajectoryPair pair = simulate_pair(field, chi0, gamma, steps);
    if (pair.aborted) {
      report.aborted = true;
    }
    double sup = 0.0;
    for (double d : pair.deviations) {
      sup = std::max(sup, d);
    }
    report.sup_deviations.push_back(sup);
  }
  bool ratios_ok = true;
  for (std::size_t i = 1; i < report.sup_deviations.size(); ++i) {
    const double prev = report.sup_deviations[i - 1];
    const double cur = report.sup_deviations[i];
    double ratio = 0.0;
    if (cur > 0.0) {
      ratio = (prev > 0.0) ? cur / prev
                           : std::numeric_limits<double>::infinity();
    }
    report.ratios.push_back(ratio);
    if (!(ratio <= 0.8)) {
      ratios_ok = false;
    }
  }
  report.pass = !report.aborted && ratios_ok;
  return report;
}

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& M) {
  Eigen::VectorXd v(M.size());
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      v(idx++) = M(i, j);
    }
  }
  return v;
}

Eigen::MatrixXd unflatten_row_major(const Eigen::VectorXd& v, int rows,
                                    int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw DimensionError("flattened vector length does not match the shape");
  }
  Eigen::MatrixXd M(rows, cols);
  Eigen::Index idx = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      M(i, j) = v(idx++);
    }
  }
  return M;
}

PeriodicField make_esc_field(CostOracle& oracle, const EscParams& params) {
  if (!(params.delta > 0.0)) {
    throw DomainError("dither amplitude delta must be strictly positive");
  }
  const int m = oracle.input_dim();
  const int n = oracle.state_dim();
  if (params.dither.rows() != m || params.dither.cols() != n) {
    throw DimensionError("dither schedule does not match oracle dimensions");
  }
  const double delta = params.delta;
  const DitherSpec dither = params.dither;
  auto eval = [&oracle, delta, dither, m, n](const Eigen::VectorXd& chi,
                                             std::int64_t k) {
    const double f = chi(0);
    const Eigen::MatrixXd K = unflatten_row_major(chi.tail(chi.size() - 1),
                                                  m, n);
    const Eigen::MatrixXd D = dither_matrix(dither, k);
    const double y = oracle.query(K + delta * D);
    Eigen::VectorXd out(chi.size());
    out(0) = y - f;
    out.tail(chi.size() - 1) =
        flatten_row_major(-(2.0 / delta) * (y - f) * D);
    return out;
  };
  return make_periodic_field(std::move(eval), params.dither.k_prd, 1 + m * n);
}

double averaged_probe_cost(const LtiPlant& plant, const CostSpec& cost,
                           const Gain& K, double delta,
                           const DitherSpec& dither, long T) {
  if (!(delta > 0.0)) {
    throw DomainError("dither amplitude delta must be strictly positive");
  }
  KahanSum sum;
  for (std::int64_t tau = 1; tau <= dither.k_prd; ++tau) {
    const Eigen::MatrixXd D = dither_matrix(dither, tau);
    sum.add(truncated_cost(plant, cost, K + delta * D, T));
  }
  return sum.value() / static_cast<double>(dither.k_prd);
}

AveragedEscState averaged_esc_step(const AveragedEscState& state,
                                   const LtiPlant& plant, const CostSpec& cost,
                                   const EscParams& params) {
  if (!(params.delta > 0.0)) {
    throw DomainError("dither amplitude delta must be strictly positive");
  }
  if (params.gamma < 0.0) {
    throw DomainError("step size gamma must be nonnegative");
  }
  if (params.T < 1) {
    throw DomainError("horizon T must be >= 1");
  }
  if (params.dither.rows() != state.K.rows() ||
      params.dither.cols() != state.K.cols()) {
    throw DimensionError("dither schedule does not match the gain shape");
  }
  if (!is_schur(closed_loop(plant, state.K))) {
    throw UnstableError(
        "averaged step requires a stabilizing current gain");
  }

  const std::int64_t k_prd = params.dither.k_prd;
  KahanSum sum_y;
  KahanVector sum_yd(static_cast<int>(state.K.size()));
  for (std::int64_t tau = 1; tau <= k_prd; ++tau) {
    const Eigen::MatrixXd D = dither_matrix(params.dither, tau);
    const Eigen::MatrixXd probed = state.K + params.delta * D;
    if (!is_schur(closed_loop(plant, probed))) {
      std::ostringstream msg;
      msg << "probed gain at offset " << tau
          << " of the period leaves the stabilizing set";
      throw UnstableError(msg.str());
    }
    const double y = truncated_cost(plant, cost, probed, params.T);
    sum_y.add(y);
    sum_yd.add(flatten_row_major(y * D));
  }

  const double j_av = sum_y.value() / static_cast<double>(k_prd);
  AveragedEscState next;
  next.f = state.f + params.gamma * (j_av - state.f);
  const Eigen::MatrixXd correlation = unflatten_row_major(
      sum_yd.value(), static_cast<int>(state.K.rows()),
      static_cast<int>(state.K.cols()));
  next.K = state.K -
           params.gamma * (2.0 / (params.delta * static_cast<double>(k_prd))) *
               correlation;
  return next;
}

double truncation_gap(const LtiPlant& plant, const CostSpec& cost,
                      const Gain& K, long T) {
  return infinite_cost(plant, cost, K) - truncated_cost(plant, cost, K, T);
}

double gradient_estimate_error(const LtiPlant& plant, const CostSpec& cost,
                               const Gain& K, double delta,
                               const DitherSpec& dither, bool use_infinite,
                               long T) {
  if (!(delta > 0.0)) {
    throw DomainError("dither amplitude delta must be strictly positive");
  }
  if (!use_infinite && T < 1) {
    throw DomainError(
        "finite-horizon gradient estimate needs a horizon T >= 1");
  }
  KahanVector acc(static_cast<int>(K.size()));
  for (std::int64_t tau = 1; tau <= dither.k_prd; ++tau) {
    const Eigen::MatrixXd D = dither_matrix(dither, tau);
    const Eigen::MatrixXd probed = K + delta * D;
    const double y = use_infinite ? infinite_cost(plant, cost, probed)
                                  : truncated_cost(plant, cost, probed, T);
    acc.add(flatten_row_major(y * D));
  }
  const Eigen::MatrixXd estimate =
      unflatten_row_major(acc.value(), static_cast<int>(K.rows()),
                          static_cast<int>(K.cols())) *
      (2.0 / (delta * static_cast<double>(dither.k_prd)));
  const Eigen::MatrixXd G = exact_gradient(plant, cost, K);
  return (estimate - G).norm();
}

}  // namespace eslqr
