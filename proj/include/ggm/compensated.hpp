#pragma once

#include <cmath>

namespace ggm {

// Neumaier variant of Kahan summation: carries the rounding error of each
// addition in a separate compensation term, so results are deterministic
// for a fixed term order and immune to the classic Kahan failure when a
// term exceeds the running sum.
class NeumaierSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace ggm
