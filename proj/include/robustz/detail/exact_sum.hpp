#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace robustz::detail {

// Correctly rounded floating-point sum (Shewchuk partials, same scheme as
// Python's math.fsum). The result does not depend on summation order, and its
// sign is the sign of the exact sum of the inputs. Inputs must be finite.
class ExactAccumulator {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  [[nodiscard]] double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t k = partials_.size();
    double hi = partials_[--k];
    double lo = 0.0;
    while (k > 0) {
      const double x = hi;
      const double y = partials_[--k];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // Round-half-even correction when the remaining partials push the
    // residual past the halfway point.
    if (k > 0 && ((lo < 0.0 && partials_[k - 1] < 0.0) ||
                  (lo > 0.0 && partials_[k - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
    return hi;
  }

  void clear() { partials_.clear(); }

 private:
  std::vector<double> partials_;
};

inline double exact_sum(std::span<const double> values) {
  ExactAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace robustz::detail
