#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mixlab {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

/// log(sum_i exp(x_i)); -inf for an empty input.
inline double log_sum_exp(std::span<const double> xs) noexcept {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  CompensatedSum acc;
  for (double x : xs) acc.add(std::exp(x - hi));
  return hi + std::log(acc.value());
}

}  // namespace mixlab
