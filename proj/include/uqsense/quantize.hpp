#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace uqsense {

/// A real interval with independently open or closed ends.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = true;

  static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval half_open(double lo, double hi) { return {lo, hi, false, true}; }
  static Interval point(double c) { return {c, c, false, false}; }

  double width() const { return hi - lo; }
  bool degenerate() const { return lo == hi; }
  bool contains(double x) const {
    const bool above = lo_open ? x > lo : x >= lo;
    const bool below = hi_open ? x < hi : x <= hi;
    return above && below;
  }
};

/// Quantizer families: ideal mid-tread ADC with step Delta, C `round()`
/// (halfway away from zero), and C integer cast (truncate toward zero).
class QuantScheme {
 public:
  enum class Kind { MidTread, NearestInt, TruncateTowardZero };

  static QuantScheme mid_tread(double step);
  static QuantScheme nearest_int() { return QuantScheme(Kind::NearestInt, 1.0); }
  static QuantScheme truncate_toward_zero() {
    return QuantScheme(Kind::TruncateTowardZero, 1.0);
  }

  Kind kind() const { return kind_; }
  /// Level spacing: Delta for mid-tread, 1 for the integer schemes.
  double step() const { return step_; }

 private:
  QuantScheme(Kind kind, double step) : kind_(kind), step_(step) {}
  Kind kind_;
  double step_;
};

struct Quantized {
  std::int64_t level = 0;
  double value = 0.0;
};

Quantized quantize(double x, const QuantScheme& scheme);

/// Exact floating-point preimage of `level`: every double inside quantizes
/// to `level` and its immediate neighbours outside do not.
Interval representation_support(std::int64_t level, const QuantScheme& scheme);

struct LinearFitDemo {
  double a_fit = 0.0;
  double b_fit = 0.0;
  std::int64_t a_int = 0;
  std::int64_t b_int = 0;
};

/// Ordinary least squares for y = a*x + b, plus nearest-integer roundings
/// of both coefficients as a device would store them.
LinearFitDemo demo_linear_fit_rounding(const std::vector<std::pair<double, double>>& points);

/// Points on y = a*x + b over x in [x_lo, x_hi] with seeded Gaussian noise.
std::vector<std::pair<double, double>> linear_fit_demo_points(double a, double b,
                                                              double noise_sigma,
                                                              std::size_t count,
                                                              std::uint64_t seed,
                                                              double x_lo = 0.0,
                                                              double x_hi = 10.0);

}  // namespace uqsense
