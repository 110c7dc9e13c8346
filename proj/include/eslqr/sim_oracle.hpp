#pragma once

#include "eslqr/cost_oracle.hpp"
#include "eslqr/lti_cost.hpp"

namespace eslqr {

// Simulated measurement backend: answers oracle queries by running the
// finite-horizon canonical-basis experiments on a concrete plant. This is
// the only bridge between the model side (plant/cost) and the model-free
// optimizer; it lives outside the optimizer module so the separation stays
// visible in the include graph.
class TruncatedCostOracle final : public CostOracle {
 public:
  TruncatedCostOracle(LtiPlant plant, CostSpec cost, long T);

  double query(const Eigen::MatrixXd& gain) override;

  int state_dim() const override { return plant_.n(); }
  int input_dim() const override { return plant_.m(); }
  long horizon() const override { return T_; }

  // No accessors for the wrapped matrices: the whole point of the oracle is
  // that callers cannot recover the model through it. Verification code that
  // needs the plant keeps its own reference from construction time.

 private:
  LtiPlant plant_;
  CostSpec cost_;
  long T_;
};

}  // namespace eslqr
