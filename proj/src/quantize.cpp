#include "uqsense/quantize.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "uqsense/errors.hpp"

namespace uqsense {

QuantScheme QuantScheme::mid_tread(double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("mid-tread step must be finite and strictly positive");
  }
  return QuantScheme(Kind::MidTread, step);
}

namespace {

std::int64_t level_of(double x, const QuantScheme& scheme) {
  switch (scheme.kind()) {
    case QuantScheme::Kind::MidTread:
      return static_cast<std::int64_t>(std::floor(x / scheme.step() + 0.5));
    case QuantScheme::Kind::NearestInt:
      return static_cast<std::int64_t>(std::round(x));
    case QuantScheme::Kind::TruncateTowardZero:
      return static_cast<std::int64_t>(std::trunc(x));
  }
  return 0;
}

// Smallest double whose level is >= target, searched from an analytic
// estimate. Levels are monotone in x so a short nextafter walk settles.
double first_at_or_above(std::int64_t target, double estimate, const QuantScheme& scheme) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double x = estimate;
  while (level_of(x, scheme) >= target) x = std::nextafter(x, -inf);
  while (level_of(x, scheme) < target) x = std::nextafter(x, inf);
  return x;
}

}  // namespace

Quantized quantize(double x, const QuantScheme& scheme) {
  if (!std::isfinite(x)) throw DomainError("quantize: input is not finite");
  const std::int64_t level = level_of(x, scheme);
  const double value = scheme.kind() == QuantScheme::Kind::MidTread
                           ? static_cast<double>(level) * scheme.step()
                           : static_cast<double>(level);
  return {level, value};
}

Interval representation_support(std::int64_t level, const QuantScheme& scheme) {
  const double l = static_cast<double>(level);
  switch (scheme.kind()) {
    case QuantScheme::Kind::MidTread: {
      const double lo = first_at_or_above(level, (l - 0.5) * scheme.step(), scheme);
      const double hi = first_at_or_above(level + 1, (l + 0.5) * scheme.step(), scheme);
      return Interval::half_open(lo, hi);
    }
    case QuantScheme::Kind::NearestInt:
      // round() sends halfway cases away from zero, so the closed end of
      // each cell is the one nearer zero.
      if (level > 0) return {l - 0.5, l + 0.5, false, true};
      if (level < 0) return {l - 0.5, l + 0.5, true, false};
      return {-0.5, 0.5, true, true};
    case QuantScheme::Kind::TruncateTowardZero:
      if (level > 0) return {l, l + 1.0, false, true};
      if (level < 0) return {l - 1.0, l, true, false};
      return {-1.0, 1.0, true, true};
  }
  return {};
}

LinearFitDemo demo_linear_fit_rounding(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw FitError("linear fit needs at least two points");
  const double n = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx == 0.0) throw FitError("linear fit: all x values are equal");
  LinearFitDemo out;
  out.a_fit = sxy / sxx;
  out.b_fit = mean_y - out.a_fit * mean_x;
  out.a_int = quantize(out.a_fit, QuantScheme::nearest_int()).level;
  out.b_int = quantize(out.b_fit, QuantScheme::nearest_int()).level;
  return out;
}

std::vector<std::pair<double, double>> linear_fit_demo_points(double a, double b,
                                                              double noise_sigma,
                                                              std::size_t count,
                                                              std::uint64_t seed, double x_lo,
                                                              double x_hi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  std::vector<std::pair<double, double>> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    const double x = x_lo + (x_hi - x_lo) * t;
    points.emplace_back(x, a * x + b + noise(rng));
  }
  return points;
}

}  // namespace uqsense
