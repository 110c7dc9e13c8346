#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "eslqr/errors.hpp"

namespace eslqr {

// Entrywise sinusoidal perturbation schedule: entry (i, j) of the m-by-n
// dither matrix at step k is sin(2*pi*k / periods(i, j) + phases(i, j)).
// Entries are ordered p = 1..m*n in row-major order wherever a flat index
// appears (reports, phase assignment).
//
// Fields are plain data so that deliberately degenerate specs can be built
// for negative tests; use make_dither_spec for a validated instance.
struct DitherSpec {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> periods;
  Eigen::MatrixXd phases;
  std::int64_t k_prd = 0;  // least common multiple of all periods

  int rows() const { return static_cast<int>(periods.rows()); }
  int cols() const { return static_cast<int>(periods.cols()); }
};

// Validates shapes (matching, nonempty), periods >= 3, finite phases, and
// recomputes k_prd as the lcm of all periods (capped at 1e12).
DitherSpec make_dither_spec(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& periods,
    const Eigen::MatrixXd& phases);

// Evaluates the dither matrix at step k >= 0. The step index is reduced
// modulo each entry's period before the sine evaluation, so the schedule is
// exactly periodic: dither_matrix(spec, k) == dither_matrix(spec, k + k_prd)
// bit for bit.
Eigen::MatrixXd dither_matrix(const DitherSpec& spec, std::int64_t k);

// One located violation of the orthonormality sums. Entry indices are
// 1-based row-major flat positions; unused index slots are 0.
struct OrthonormalityIssue {
  char condition = '?';  // 'a' zero mean, 'b' pair product, 'c' triple product
  int p = 0;
  int q = 0;
  int r = 0;
  double deviation = 0.0;
};

struct OrthonormalityReport {
  double tol = 0.0;
  std::int64_t k_prd = 0;
  double max_dev_mean = 0.0;    // (a): per-entry sums over one full window
  double max_dev_pair = 0.0;    // (b): pair products vs k_prd/2 (p=q) or 0
  double max_dev_triple = 0.0;  // (c): distinct-index triple products vs 0
  bool pass_mean = false;
  bool pass_pair = false;
  bool pass_triple = false;
  std::vector<OrthonormalityIssue> failures;  // capped at 64 entries

  bool pass() const { return pass_mean && pass_pair && pass_triple; }
};

// Checks, over one full window k = 1..k_prd, that (a) every entry sums to
// zero, (b) the product of entries p and q sums to k_prd/2 when p = q and to
// zero otherwise, and (c) every product of three distinct entries sums to
// zero. Sums are evaluated by exact periodicity reduction (each product is
// summed over its own least common period with compensated accumulation and
// scaled by the integer repetition count), which equals the literal
// full-window sum because the signals are bitwise periodic.
OrthonormalityReport verify_orthonormality(const DitherSpec& spec, double tol);

// Canonical validated schedule for an m-by-n gain. Consecutive entry pairs
// (2j-1, 2j) share a period with phases 0 and pi/2; distinct pairs receive
// distinct even periods from a fixed resonance-free table (no period is
// twice another and no frequency equals the sum of two others), which makes
// all three orthonormality sums vanish identically. Supports up to 64
// entries; the returned spec passes verify_orthonormality at 1e-9.
DitherSpec canonical_dither_spec(int m, int n);

}  // namespace eslqr
