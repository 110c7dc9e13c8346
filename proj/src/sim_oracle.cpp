#include "eslqr/sim_oracle.hpp"

#include <utility>

namespace eslqr {

TruncatedCostOracle::TruncatedCostOracle(LtiPlant plant, CostSpec cost, long T)
    : plant_(std::move(plant)), cost_(std::move(cost)), T_(T) {
  if (cost_.Q.rows() != plant_.n() || cost_.R.rows() != plant_.m()) {
    throw DimensionError(
        "cost matrices do not match the plant dimensions");
  }
  if (T_ < 1) {
    throw DomainError("oracle horizon must be >= 1");
  }
}

double TruncatedCostOracle::query(const Eigen::MatrixXd& gain) {
  return truncated_cost(plant_, cost_, gain, T_);
}

}  // namespace eslqr
