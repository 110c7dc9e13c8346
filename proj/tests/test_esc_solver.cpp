#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "eslqr/esc_solver.hpp"
#include "eslqr/sim_oracle.hpp"

using namespace eslqr;

namespace {

LtiPlant scalar_plant() {
  Eigen::MatrixXd A(1, 1), B(1, 1);
  A << 0.5;
  B << 1.0;
  return LtiPlant(std::move(A), std::move(B));
}

CostSpec identity_cost(int n, int m) {
  return CostSpec(Eigen::MatrixXd::Identity(n, n),
                  Eigen::MatrixXd::Identity(m, m));
}

EscParams scalar_params(double gamma, double delta, long T, long iterations) {
  EscParams params;
  params.gamma = gamma;
  params.delta = delta;
  params.T = T;
  params.iterations = iterations;
  params.dither = canonical_dither_spec(1, 1);
  params.K0 = Eigen::MatrixXd::Zero(1, 1);
  return params;
}

// Measurement stub that returns a fixed value sequence regardless of the
// probed gain and raises the non-finite error once exhausted — lets the
// tests drive both divergence paths deterministically.
class ScriptedOracle final : public CostOracle {
 public:
  explicit ScriptedOracle(std::vector<double> values)
      : values_(std::move(values)) {}

  double query(const Eigen::MatrixXd&) override {
    if (calls_ >= values_.size()) {
      throw NonFiniteError("scripted measurement overflowed");
    }
    return values_[calls_++];
  }

  int state_dim() const override { return 1; }
  int input_dim() const override { return 1; }
  long horizon() const override { return 1; }

 private:
  std::vector<double> values_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("malformed run parameters are rejected with specific errors") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  const EscParams good = scalar_params(0.1, 0.1, 2, 5);
  CHECK_NOTHROW(run(good, oracle));

  EscParams p = good;
  p.gamma = 0.0;
  CHECK_THROWS_AS(run(p, oracle), DomainError);

  p = good;
  p.delta = 0.0;
  CHECK_THROWS_AS(run(p, oracle), DomainError);

  p = good;
  p.T = 0;
  CHECK_THROWS_AS(run(p, oracle), DomainError);

  p = good;
  p.iterations = -1;
  CHECK_THROWS_AS(run(p, oracle), DomainError);

  p = good;
  p.K0 = Eigen::MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(run(p, oracle), DimensionError);

  p = good;
  p.dither = canonical_dither_spec(2, 2);
  CHECK_THROWS_AS(run(p, oracle), DimensionError);

  p = good;
  p.T = 3;  // oracle horizon is 2
  CHECK_THROWS_AS(run(p, oracle), DomainError);

  p = good;
  p.K0(0, 0) = std::nan("");
  CHECK_THROWS_AS(run(p, oracle), NonFiniteError);

  p = good;
  p.f0 = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(run(p, oracle), NonFiniteError);
}

TEST_CASE("one step reproduces the hand-computed update") {
  // Scalar plant x+ = 0.5 x + u, unit costs, horizon 2:
  // J_2(K) = (1 + K^2) (1 + (0.5 + K)^2) / 2, so J_2(0.1) = 0.6868.
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.1, 0.1, 2, 1);

  // At step k = 1 the period-4 dither is sin(pi/2) = 1, so the probed gain
  // is 0 + 0.1 * 1.
  EscState state;
  state.k = 1;
  state.f = 0.0;
  state.K = Eigen::MatrixXd::Zero(1, 1);

  EscStepInfo info;
  const EscState next = esc_step(state, oracle, params, &info);
  CHECK(info.D(0, 0) == 1.0);
  CHECK(info.probed_gain(0, 0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(info.y == doctest::Approx(0.6868).epsilon(1e-12));
  CHECK(next.k == 2);
  // f+ = 0 + 0.1 * (0.6868 - 0), K+ = 0 - (0.1 * 2 * 0.6868 / 0.1) * 1.
  CHECK(next.f == doctest::Approx(0.06868).epsilon(1e-12));
  CHECK(next.K(0, 0) == doctest::Approx(-1.3736).epsilon(1e-12));
}

TEST_CASE("a zero dither sample leaves the gain untouched") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.1, 0.1, 2, 1);
  EscState state;  // k = 0: dither sample sin(0) = 0
  state.K = Eigen::MatrixXd::Zero(1, 1);

  EscStepInfo info;
  const EscState next = esc_step(state, oracle, params, &info);
  CHECK(info.D(0, 0) == 0.0);
  CHECK(info.y == doctest::Approx(0.625).epsilon(1e-12));  // J_2(0)
  CHECK(next.K(0, 0) == 0.0);
  CHECK(next.f == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("run and esc_step share one arithmetic path bit for bit") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.05, 0.1, 2, 40);
  params.K0(0, 0) = 0.2;
  params.f0 = 0.3;

  const RunLog log = run(params, oracle);
  REQUIRE(log.status == RunStatus::completed);
  REQUIRE(log.records.size() == 40);

  TruncatedCostOracle replay_oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscState state;
  state.k = 0;
  state.f = *params.f0;
  state.K = params.K0;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    CHECK(log.records[k].k == static_cast<long>(k));
    CHECK(log.records[k].f == state.f);
    CHECK(log.records[k].K(0, 0) == state.K(0, 0));
    EscStepInfo info;
    state = esc_step(state, replay_oracle, params, &info);
    CHECK(log.records[k].J_probe == info.y);
  }
  CHECK(log.final_state.k == 40);
  CHECK(log.final_state.f == state.f);
  CHECK(log.final_state.K(0, 0) == state.K(0, 0));
}

TEST_CASE("identical parameters give bit-identical logs") {
  TruncatedCostOracle oracle_a(scalar_plant(), identity_cost(1, 1), 2);
  TruncatedCostOracle oracle_b(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.02, 0.1, 2, 100);
  const RunLog a = run(params, oracle_a);
  const RunLog b = run(params, oracle_b);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].f == b.records[k].f);
    CHECK(a.records[k].J_probe == b.records[k].J_probe);
    CHECK(a.records[k].K(0, 0) == b.records[k].K(0, 0));
  }
  CHECK(a.final_state.f == b.final_state.f);
  CHECK(a.final_state.K(0, 0) == b.final_state.K(0, 0));
}

TEST_CASE("the filter seeds itself from the first measurement when f0 is "
          "unset") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.1, 0.05, 2, 3);
  params.K0(0, 0) = 0.2;
  // Quarter-period phase shift makes the dither sample at k = 0 equal 1, so
  // a zero-innovation start is observable on the gain.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> periods(1, 1);
  periods << 4;
  Eigen::MatrixXd phases(1, 1);
  phases << std::numbers::pi / 2.0;
  params.dither = make_dither_spec(periods, phases);

  SUBCASE("self-seeded: zero innovation, gain untouched at k = 0") {
    const RunLog log = run(params, oracle);
    REQUIRE(log.records.size() == 3);
    CHECK(log.records[0].f == log.records[0].J_probe);
    CHECK(log.records[1].f == log.records[0].f);
    CHECK(log.records[1].K(0, 0) == log.records[0].K(0, 0));
  }

  SUBCASE("explicit f0 = 0: first innovation moves the gain") {
    params.f0 = 0.0;
    const RunLog log = run(params, oracle);
    REQUIRE(log.records.size() == 3);
    CHECK(log.records[0].f == 0.0);
    CHECK(log.records[1].K(0, 0) != log.records[0].K(0, 0));
  }
}

TEST_CASE("zero iterations gives an empty completed log") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.1, 0.1, 2, 0);
  params.f0 = 0.7;
  const RunLog log = run(params, oracle);
  CHECK(log.records.empty());
  CHECK(log.status == RunStatus::completed);
  CHECK(log.diverged_at == -1);
  CHECK(log.final_state.k == 0);
  CHECK(log.final_state.f == 0.7);
  CHECK(log.final_state.K(0, 0) == 0.0);
}

TEST_CASE("a runaway step size ends the run as diverged with the log kept") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(50.0, 0.1, 2, 200);
  const RunLog log = run(params, oracle);
  CHECK(log.status == RunStatus::diverged);
  REQUIRE(log.diverged_at >= 0);
  CHECK(log.diverged_at < 200);
  // The gain-magnitude threshold fires after the measurement, so the
  // offending iteration keeps its record.
  CHECK(log.records.size() ==
        static_cast<std::size_t>(log.diverged_at) + 1);
  const bool final_gain_sane = log.final_state.K.allFinite() &&
                               log.final_state.K.cwiseAbs().maxCoeff() <= 1e12;
  CHECK_FALSE(final_gain_sane);
}

TEST_CASE("a non-finite measurement ends the run without a record") {
  EscParams params = scalar_params(0.1, 0.1, 1, 10);

  SUBCASE("infinity returned by the oracle") {
    ScriptedOracle oracle(
        {1.0, 2.0, std::numeric_limits<double>::infinity()});
    const RunLog log = run(params, oracle);
    CHECK(log.status == RunStatus::diverged);
    CHECK(log.diverged_at == 2);
    CHECK(log.records.size() == 2);
  }

  SUBCASE("non-finite error thrown by the oracle") {
    ScriptedOracle oracle({1.0, 2.0});
    const RunLog log = run(params, oracle);
    CHECK(log.status == RunStatus::diverged);
    CHECK(log.diverged_at == 2);
    CHECK(log.records.size() == 2);
  }
}

TEST_CASE("probes observe the documented gains and default to NaN") {
  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 2);
  EscParams params = scalar_params(0.01, 0.1, 2, 8);
  params.f0 = 0.0;

  SUBCASE("wired probes") {
    std::vector<double> seen_unperturbed;
    std::vector<double> seen_probed;
    RunProbes probes;
    probes.rel_err = [&](const Eigen::MatrixXd& K) {
      seen_unperturbed.push_back(K(0, 0));
      return 7.0;
    };
    probes.sigma_max = [&](const Eigen::MatrixXd& K) {
      seen_probed.push_back(K(0, 0));
      return 9.0;
    };
    const RunLog log = run(params, oracle, probes);
    REQUIRE(log.records.size() == 8);
    REQUIRE(seen_unperturbed.size() == 8);
    REQUIRE(seen_probed.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(log.records[k].rel_err == 7.0);
      CHECK(log.records[k].sigma_max == 9.0);
      // rel_err sees the gain entering the iteration, sigma_max sees the
      // dithered gain actually applied to the loop.
      CHECK(seen_unperturbed[k] == log.records[k].K(0, 0));
      const Eigen::MatrixXd D =
          dither_matrix(params.dither, static_cast<std::int64_t>(k));
      CHECK(seen_probed[k] ==
            log.records[k].K(0, 0) + params.delta * D(0, 0));
    }
  }

  SUBCASE("absent probes record NaN") {
    const RunLog log = run(params, oracle);
    REQUIRE(log.records.size() == 8);
    for (const RunRecord& record : log.records) {
      CHECK(std::isnan(record.rel_err));
      CHECK(std::isnan(record.sigma_max));
    }
  }
}

TEST_CASE("a long scalar run converges to the optimal gain") {
  // Optimal values from the scalar algebraic equation p^2 - p/4 - 1 = 0:
  // K* = -p / (2 (1 + p)), J* = p / 2.
  const double p_star = (0.25 + std::sqrt(4.0625)) / 2.0;
  const double k_star = -0.5 * p_star / (1.0 + p_star);

  TruncatedCostOracle oracle(scalar_plant(), identity_cost(1, 1), 50);
  EscParams params = scalar_params(1e-3, 1e-2, 50, 200000);
  const RunLog log = run(params, oracle);
  REQUIRE(log.status == RunStatus::completed);
  CHECK(std::abs(log.final_state.K(0, 0) - k_star) < 1e-3);
  // The filter tracks the measured dithered cost near the optimum.
  CHECK(std::abs(log.final_state.f - 0.5 * p_star) < 1e-2);
}
