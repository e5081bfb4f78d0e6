#pragma once

// Shared numeric utilities: compensated summation, exponent carrier for
// weighted L^p norms, tolerance constants used by the identity checks.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace empp {

// Absolute tolerance for identity checks on values of magnitude O(1);
// everything the library asserts is exact in exact arithmetic.
inline constexpr double kIdentityTol = 1e-12;

// Relative tolerance for comparisons of larger magnitude.
inline constexpr double kRelativeTol = 1e-10;

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace detail

// Neumaier-compensated accumulator. Keeps long sums accurate to a few ulps
// of the true value regardless of term count; plain accumulation over ~10^6
// atoms would not meet the 1e-14 budgets the integral checks demand.
class CompensatedSum {
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
  double primary() const { return sum_; }
  double compensation() const { return comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Exponent of an L^p (quasi-)norm: a plain real plus an explicit flag for
// the max-norm, so no sentinel value is smuggled through the double.
struct Exponent {
  double value;
  bool is_infinite;

  Exponent(double p) : value(p), is_infinite(false) {}  // NOLINT: implicit by design

  static Exponent infinity() {
    Exponent e(0.0);
    e.is_infinite = true;
    return e;
  }
};

}  // namespace empp
