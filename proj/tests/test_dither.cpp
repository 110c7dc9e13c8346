#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "eslqr/dither.hpp"

using namespace eslqr;

namespace {

using PeriodMatrix =
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Literal reference: the three orthonormality sums evaluated entry by entry
// over the full window k = 1..k_prd with plain accumulation — an
// independent path from the library's periodicity-reduced evaluation.
struct LiteralSums {
  double max_dev_mean = 0.0;
  double max_dev_pair = 0.0;
  double max_dev_triple = 0.0;
};

LiteralSums literal_orthonormality(const DitherSpec& spec) {
  const int total = spec.rows() * spec.cols();
  std::vector<std::vector<double>> samples(
      static_cast<std::size_t>(total));
  for (std::int64_t k = 1; k <= spec.k_prd; ++k) {
    const Eigen::MatrixXd D = dither_matrix(spec, k);
    int p = 0;
    for (int i = 0; i < spec.rows(); ++i) {
      for (int j = 0; j < spec.cols(); ++j) {
        samples[static_cast<std::size_t>(p++)].push_back(D(i, j));
      }
    }
  }
  LiteralSums out;
  for (int p = 0; p < total; ++p) {
    double sum = 0.0;
    for (double v : samples[static_cast<std::size_t>(p)]) {
      sum += v;
    }
    out.max_dev_mean = std::max(out.max_dev_mean, std::abs(sum));
  }
  for (int p = 0; p < total; ++p) {
    for (int q = p; q < total; ++q) {
      double sum = 0.0;
      for (std::size_t k = 0; k < samples[0].size(); ++k) {
        sum += samples[static_cast<std::size_t>(p)][k] *
               samples[static_cast<std::size_t>(q)][k];
      }
      const double target =
          (p == q) ? static_cast<double>(spec.k_prd) / 2.0 : 0.0;
      out.max_dev_pair = std::max(out.max_dev_pair, std::abs(sum - target));
    }
  }
  for (int p = 0; p < total; ++p) {
    for (int q = p + 1; q < total; ++q) {
      for (int r = q + 1; r < total; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < samples[0].size(); ++k) {
          sum += samples[static_cast<std::size_t>(p)][k] *
                 samples[static_cast<std::size_t>(q)][k] *
                 samples[static_cast<std::size_t>(r)][k];
        }
        out.max_dev_triple = std::max(out.max_dev_triple, std::abs(sum));
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("spec construction validates shape, periods, and phases") {
  PeriodMatrix periods(1, 2);
  periods << 4, 6;
  Eigen::MatrixXd phases(1, 2);
  phases << 0.0, 0.0;
  const DitherSpec spec = make_dither_spec(periods, phases);
  CHECK(spec.k_prd == 12);

  Eigen::MatrixXd wrong_shape(2, 1);
  wrong_shape << 0.0, 0.0;
  CHECK_THROWS_AS(make_dither_spec(periods, wrong_shape), DimensionError);

  PeriodMatrix too_short(1, 1);
  too_short << 2;
  CHECK_THROWS_AS(make_dither_spec(too_short, Eigen::MatrixXd::Zero(1, 1)),
                  DomainError);

  Eigen::MatrixXd nan_phase(1, 2);
  nan_phase << 0.0, std::nan("");
  CHECK_THROWS_AS(make_dither_spec(periods, nan_phase), NonFiniteError);
}

TEST_CASE("dither values follow the sine schedule with integer reduction") {
  PeriodMatrix periods(1, 2);
  periods << 4, 4;
  Eigen::MatrixXd phases(1, 2);
  phases << 0.0, std::numbers::pi / 2.0;
  const DitherSpec spec = make_dither_spec(periods, phases);

  // Period-4 sine at integer steps: 0, 1, ~0, -1; the pi/2-shifted entry
  // leads it by one quarter period.
  const Eigen::MatrixXd d0 = dither_matrix(spec, 0);
  CHECK(d0(0, 0) == 0.0);
  CHECK(d0(0, 1) == 1.0);
  const Eigen::MatrixXd d1 = dither_matrix(spec, 1);
  CHECK(d1(0, 0) == 1.0);
  CHECK(std::abs(d1(0, 1)) < 1e-15);
  const Eigen::MatrixXd d3 = dither_matrix(spec, 3);
  CHECK(d3(0, 0) == -1.0);

  CHECK_THROWS_AS(dither_matrix(spec, -1), DomainError);
}

TEST_CASE("dither schedule is bitwise periodic") {
  const DitherSpec spec = canonical_dither_spec(2, 2);
  for (std::int64_t k : {0L, 1L, 5L, 11L}) {
    const Eigen::MatrixXd a = dither_matrix(spec, k);
    const Eigen::MatrixXd b = dither_matrix(spec, k + spec.k_prd);
    const Eigen::MatrixXd c = dither_matrix(spec, k + 7 * spec.k_prd);
    CHECK((a.array() == b.array()).all());
    CHECK((a.array() == c.array()).all());
  }
}

TEST_CASE("canonical schedule: shapes, shared periods, quadrature phases") {
  const DitherSpec one = canonical_dither_spec(1, 1);
  CHECK(one.periods(0, 0) == 4);
  CHECK(one.phases(0, 0) == 0.0);
  CHECK(one.k_prd == 4);

  const DitherSpec pair = canonical_dither_spec(1, 2);
  CHECK(pair.periods(0, 0) == 4);
  CHECK(pair.periods(0, 1) == 4);
  CHECK(pair.phases(0, 0) == 0.0);
  CHECK(pair.phases(0, 1) == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(pair.k_prd == 4);

  // 4x4: eight pairs, least common period 5040 (= lcm of the first eight
  // table periods 4, 6, 10, 14, 16, 18, 24, 30, computed by hand).
  const DitherSpec big = canonical_dither_spec(4, 4);
  CHECK(big.k_prd == 5040);

  CHECK_THROWS_AS(canonical_dither_spec(9, 8), DomainError);
  CHECK_THROWS_AS(canonical_dither_spec(0, 1), DimensionError);
}

TEST_CASE("canonical schedules pass the orthonormality sums") {
  for (auto [m, n] : {std::pair{1, 1}, {1, 2}, {2, 2}, {3, 3}, {4, 4}}) {
    const DitherSpec spec = canonical_dither_spec(m, n);
    const OrthonormalityReport report = verify_orthonormality(spec, 1e-9);
    INFO("shape ", m, "x", n, ": mean ", report.max_dev_mean, " pair ",
         report.max_dev_pair, " triple ", report.max_dev_triple);
    CHECK(report.pass());
    CHECK(report.failures.empty());
  }
}

TEST_CASE("reduced sums agree with literal full-window sums") {
  const DitherSpec spec = canonical_dither_spec(2, 2);  // window 12
  const OrthonormalityReport report = verify_orthonormality(spec, 1e-9);
  const LiteralSums literal = literal_orthonormality(spec);
  CHECK(std::abs(report.max_dev_mean - literal.max_dev_mean) < 1e-12);
  CHECK(std::abs(report.max_dev_pair - literal.max_dev_pair) < 1e-11);
  CHECK(std::abs(report.max_dev_triple - literal.max_dev_triple) < 1e-11);
}

TEST_CASE("duplicate period and phase fails the pair condition with "
          "located indices") {
  PeriodMatrix periods(1, 2);
  periods << 4, 4;
  Eigen::MatrixXd phases(1, 2);
  phases << 0.0, 0.0;  // identical signals
  const DitherSpec spec = make_dither_spec(periods, phases);
  const OrthonormalityReport report = verify_orthonormality(spec, 1e-9);
  CHECK_FALSE(report.pass());
  CHECK_FALSE(report.pass_pair);
  bool located = false;
  for (const OrthonormalityIssue& f : report.failures) {
    if (f.condition == 'b' && f.p == 1 && f.q == 2) {
      located = true;
      // Sum of sin^2 over the window equals k_prd / 2 = 2 where zero was
      // required.
      CHECK(f.deviation == doctest::Approx(2.0).epsilon(1e-9));
    }
  }
  CHECK(located);
}

TEST_CASE("harmonically related periods fail the triple condition") {
  // Frequencies 1/4 and 1/8 resonate: 1/8 + 1/8 = 1/4, so a product of
  // three entries survives averaging.
  PeriodMatrix periods(2, 2);
  periods << 4, 4, 8, 8;
  Eigen::MatrixXd phases(2, 2);
  phases << 0.0, std::numbers::pi / 2.0, 0.0, std::numbers::pi / 2.0;
  const DitherSpec spec = make_dither_spec(periods, phases);
  const OrthonormalityReport report = verify_orthonormality(spec, 1e-9);
  CHECK_FALSE(report.pass());
  CHECK_FALSE(report.pass_triple);
  bool found_triple = false;
  for (const OrthonormalityIssue& f : report.failures) {
    if (f.condition == 'c') {
      found_triple = true;
      CHECK(f.p >= 1);
      CHECK(f.q > f.p);
      CHECK(f.r > f.q);
      CHECK(f.deviation > 1e-3);
    }
  }
  CHECK(found_triple);
  const LiteralSums literal = literal_orthonormality(spec);
  CHECK(std::abs(report.max_dev_triple - literal.max_dev_triple) < 1e-11);
}

TEST_CASE("verification rejects a nonpositive tolerance") {
  const DitherSpec spec = canonical_dither_spec(1, 1);
  CHECK_THROWS_AS(verify_orthonormality(spec, 0.0), DomainError);
}
