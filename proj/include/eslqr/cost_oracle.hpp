#pragma once

#include <Eigen/Dense>

namespace eslqr {

// Measurement boundary of the data-driven optimizer: one scalar finite-
// horizon cost per probed gain, plus declared dimensions. Implementations
// must be deterministic (same gain, same value) and must not expose the
// underlying system or cost matrices through this interface — the optimizer
// on the other side treats them as unknown.
class CostOracle {
 public:
  virtual ~CostOracle() = default;

  // Measured cost of running the loop with the given m-by-n gain for the
  // declared horizon.
  virtual double query(const Eigen::MatrixXd& gain) = 0;

  virtual int state_dim() const = 0;  // n
  virtual int input_dim() const = 0;  // m
  virtual long horizon() const = 0;   // T
};

}  // namespace eslqr
