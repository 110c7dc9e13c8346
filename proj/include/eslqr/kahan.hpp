#pragma once

namespace eslqr {

// Compensated (Kahan) accumulator. Long sums in this library are checked
// against tolerances around 1e-9 over windows of tens of thousands of terms,
// so plain accumulation error is kept out of the measurement.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }

  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace eslqr
