#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uqsense/errors.hpp"
#include "uqsense/quantize.hpp"

namespace uqsense {

/// An epistemically uncertain real represented by an aligned sample
/// ensemble. Sample i of every value built from the same context belongs
/// to Monte Carlo world i, so correlations are carried by alignment.
/// Immutable; copies share storage.
class UncertainValue {
 public:
  UncertainValue();
  explicit UncertainValue(std::vector<double> samples,
                          std::optional<std::uint64_t> stream_id = std::nullopt);

  std::size_t size() const { return samples_->size(); }
  bool empty() const { return samples_->empty(); }
  std::span<const double> samples() const { return *samples_; }
  double operator[](std::size_t i) const { return (*samples_)[i]; }
  std::optional<std::uint64_t> stream_id() const { return stream_id_; }
  bool degenerate() const;

  /// Sample values in ascending order.
  std::vector<double> sorted() const;

 private:
  std::shared_ptr<const std::vector<double>> samples_;
  std::optional<std::uint64_t> stream_id_;
};

enum class Sampling {
  Pseudorandom,
  /// Latin-hypercube style: each stream visits every 1/n stratum of [0,1)
  /// exactly once, in a per-stream random order.
  Stratified,
  /// Owen-scrambled Sobol' points: stream s is coordinate s of the
  /// sequence (s < kSobolMaxDimension), scrambled per (seed, stream).
  /// Strata agree across streams, so joint low-dimensional projections
  /// are balanced too, not only the marginals.
  Sobol,
};

inline constexpr std::uint64_t kSobolMaxDimension = 3667;

/// Unscrambled Sobol' coordinate `dim` of point `index` (natural order),
/// as a 32-bit binary fraction.
std::uint32_t sobol_point(std::uint64_t dim, std::uint64_t index);

/// Owns the ensemble size, the master seed and the noise-stream counter.
/// Draw (stream, i) is a pure function of (master_seed, stream, i).
class EnsembleContext {
 public:
  EnsembleContext(std::size_t n, std::uint64_t master_seed,
                  Sampling sampling = Sampling::Pseudorandom);

  EnsembleContext(const EnsembleContext&) = delete;
  EnsembleContext& operator=(const EnsembleContext&) = delete;

  std::size_t size() const { return n_; }
  std::uint64_t master_seed() const { return seed_; }
  Sampling sampling() const { return sampling_; }

  /// Fresh stream identifier; never repeats within this context.
  std::uint64_t allocate_stream() { return next_stream_.fetch_add(1); }
  std::uint64_t streams_allocated() const { return next_stream_.load(); }

  /// The n unit draws of `stream` in [0, 1).
  std::vector<double> unit_draws(std::uint64_t stream) const;

 private:
  std::size_t n_;
  std::uint64_t seed_;
  Sampling sampling_;
  std::atomic<std::uint64_t> next_stream_{0};
};

/// Unit draws of one stream under a sampling policy; shared by contexts
/// and by the per-iteration noise sources of the Monte Carlo driver.
std::vector<double> stream_unit_draws(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                      Sampling sampling);

/// Marginally uniform ensemble on `interval`, drawn from a fresh stream.
UncertainValue uniform(EnsembleContext& ctx, const Interval& interval);

UncertainValue constant(const EnsembleContext& ctx, double c);
UncertainValue constant(std::size_t n, double c);

/// Elementwise map: result[i] = f(args[i]...). Throws DomainError naming
/// the first sample index where f is not finite.
template <class F, class... Args>
UncertainValue apply(F&& f, const UncertainValue& first, const Args&... rest) {
  const std::size_t n = first.size();
  if (((rest.size() != n) || ...)) {
    throw ConfigError("apply: ensembles come from different contexts (size mismatch)");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(first[i], rest[i]...);
    if (!std::isfinite(v)) throw DomainError("apply: function undefined", i);
    out[i] = v;
  }
  return UncertainValue(std::move(out));
}

UncertainValue operator+(const UncertainValue& a, const UncertainValue& b);
UncertainValue operator-(const UncertainValue& a, const UncertainValue& b);
UncertainValue operator*(const UncertainValue& a, const UncertainValue& b);
UncertainValue operator/(const UncertainValue& a, const UncertainValue& b);
UncertainValue operator+(const UncertainValue& a, double b);
UncertainValue operator-(const UncertainValue& a, double b);
UncertainValue operator*(const UncertainValue& a, double b);
UncertainValue operator/(const UncertainValue& a, double b);
UncertainValue operator+(double a, const UncertainValue& b);
UncertainValue operator-(double a, const UncertainValue& b);
UncertainValue operator*(double a, const UncertainValue& b);
UncertainValue operator/(double a, const UncertainValue& b);
UncertainValue operator-(const UncertainValue& a);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double ci95_width = 0.0;
};

/// Empirical quantile, linear interpolation between order statistics
/// (inclusive endpoints). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

SummaryStats summarize(const UncertainValue& x);

struct ErrorStats {
  double mae = 0.0;
  double max_ae = 0.0;
  std::optional<double> mre;
  std::optional<double> max_re;
};

/// Error metrics of every sample against a reference value. Relative
/// metrics divide by |reference| and are refused for a zero reference.
ErrorStats error_stats(const UncertainValue& x, double reference, bool relative = true);

/// First Wasserstein distance between the empirical distributions of two
/// ensembles (sizes may differ), integrating |F_P - F_Q| exactly.
double wasserstein1(const UncertainValue& p, const UncertainValue& q);
double wasserstein1_sorted(std::span<const double> p_sorted, std::span<const double> q_sorted);

/// Pre-sorted reference distribution for repeated W1 queries: each query
/// costs O(m log N) for an m-sample probe against N reference samples.
class W1Reference {
 public:
  explicit W1Reference(const UncertainValue& reference);
  explicit W1Reference(std::vector<double> samples);

  std::size_t size() const { return q_.size(); }
  double distance_sorted(std::span<const double> p_sorted) const;
  double distance(std::vector<double> probe) const;

 private:
  double cdf_integral(double x) const;   // integral of F_Q from -inf to x
  std::vector<double> q_;
  std::vector<double> knot_integral_;     // cdf_integral at each q_[j]
};

/// Histogram with Doane's bin-count rule (as in NumPy's `bins="doane"`).
struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
};
Histogram doane_histogram(std::span<const double> samples);

/// Length-prefixed little-endian binary records: u64 count, then count
/// IEEE-754 binary64 values.
void write_ensemble_record(std::ostream& out, std::span<const double> samples);
std::vector<UncertainValue> read_ensemble_records(std::istream& in);
void write_ensemble_file(const std::string& path, std::span<const UncertainValue> values);
std::vector<UncertainValue> read_ensemble_file(const std::string& path);

}  // namespace uqsense
