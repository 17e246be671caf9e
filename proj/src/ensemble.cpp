#include "uqsense/ensemble.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/random/detail/sobol_table.hpp>

#include "uqsense/random.hpp"

namespace uqsense {

UncertainValue::UncertainValue() : samples_(std::make_shared<const std::vector<double>>()) {}

UncertainValue::UncertainValue(std::vector<double> samples,
                               std::optional<std::uint64_t> stream_id)
    : stream_id_(stream_id) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) throw DomainError("ensemble sample is not finite", i);
  }
  samples_ = std::make_shared<const std::vector<double>>(std::move(samples));
}

bool UncertainValue::degenerate() const {
  const auto& s = *samples_;
  return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
}

std::vector<double> UncertainValue::sorted() const {
  std::vector<double> out(samples_->begin(), samples_->end());
  std::sort(out.begin(), out.end());
  return out;
}

EnsembleContext::EnsembleContext(std::size_t n, std::uint64_t master_seed, Sampling sampling)
    : n_(n), seed_(master_seed), sampling_(sampling) {
  if (n == 0) throw ConfigError("ensemble size must be at least 1");
}

namespace {

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0F0F0F0Fu) | ((x & 0x0F0F0F0Fu) << 4);
  x = ((x >> 8) & 0x00FF00FFu) | ((x & 0x00FF00FFu) << 8);
  return (x >> 16) | (x << 16);
}

// Hash-based nested uniform (Owen) scramble: a bijection on 32-bit
// fixed-point values in which each bit is flipped as a function of the
// bits above it only.
std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
  x = reverse_bits(x);
  x += seed;
  x ^= x * 0x6c50b47cu;
  x ^= x * 0xb82f1e52u;
  x ^= x * 0xc7afe638u;
  x ^= x * 0x8d22f6e6u;
  return reverse_bits(x);
}

// Direction numbers of one Sobol' coordinate (Joe-Kuo tables as shipped
// with Boost.Random), left-aligned in 32 bits.
std::array<std::uint32_t, 32> sobol_directions(std::uint64_t dim) {
  using table = boost::random::detail::qrng_tables::sobol;
  std::array<std::uint32_t, 32> v{};
  if (dim == 0) {
    for (unsigned k = 0; k < 32; ++k) v[k] = 1u << (31 - k);
    return v;
  }
  const unsigned poly = table::polynomial(dim - 1);
  unsigned degree = 0;
  while ((poly >> (degree + 1)) != 0) ++degree;
  std::array<std::uint32_t, 32> m{};
  for (unsigned k = 0; k < degree && k < 32; ++k) m[k] = table::minit(dim - 1, k);
  for (unsigned j = degree; j < 32; ++j) {
    std::uint32_t mj = m[j - degree] ^ (m[j - degree] << degree);
    for (unsigned k = 1; k < degree; ++k) {
      if ((poly >> (degree - k)) & 1u) mj ^= m[j - k] << k;
    }
    m[j] = mj;
  }
  for (unsigned k = 0; k < 32; ++k) v[k] = m[k] << (31 - k);
  return v;
}

std::uint32_t sobol_coordinate(const std::array<std::uint32_t, 32>& v, std::uint64_t index) {
  std::uint32_t x = 0;
  for (unsigned k = 0; index != 0 && k < 32; ++k, index >>= 1) {
    if (index & 1u) x ^= v[k];
  }
  return x;
}

std::vector<double> scrambled_sobol(std::uint64_t seed, std::uint64_t stream, std::size_t n) {
  if (stream >= kSobolMaxDimension) {
    throw ConfigError("Sobol sampling supports " + std::to_string(kSobolMaxDimension) +
                      " streams; stream " + std::to_string(stream) + " requested");
  }
  const auto v = sobol_directions(stream);
  const auto scramble = static_cast<std::uint32_t>(random_bits(mix_seed(seed, 0x50B0), stream, 0));
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t x = owen_scramble(sobol_coordinate(v, i), scramble);
    // Jitter below the 2^-32 cell keeps draws continuous.
    const double r = (static_cast<double>(x) + unit_uniform(seed, stream, i)) * 0x1p-32;
    u[i] = r < 1.0 ? r : std::nextafter(1.0, 0.0);
  }
  return u;
}

}  // namespace

std::uint32_t sobol_point(std::uint64_t dim, std::uint64_t index) {
  if (dim >= kSobolMaxDimension) throw ConfigError("Sobol dimension out of range");
  return sobol_coordinate(sobol_directions(dim), index);
}

std::vector<double> stream_unit_draws(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                      Sampling sampling) {
  std::vector<double> u(n);
  if (sampling == Sampling::Pseudorandom) {
    for (std::size_t i = 0; i < n; ++i) u[i] = unit_uniform(seed, stream, i);
    return u;
  }
  if (sampling == Sampling::Sobol) return scrambled_sobol(seed, stream, n);
  // Stratum order: Fisher-Yates driven by a separate derived seed so the
  // permutation and the in-stratum jitter are independent.
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const std::uint64_t perm_seed = mix_seed(seed, 0x57A7);
  for (std::size_t j = n; j > 1; --j) {
    const auto r = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(random_bits(perm_seed, stream, j)) * j) >> 64);
    std::swap(perm[j - 1], perm[r]);
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = (static_cast<double>(perm[i]) + unit_uniform(seed, stream, i)) * inv;
    u[i] = v < 1.0 ? v : std::nextafter(1.0, 0.0);
  }
  return u;
}

std::vector<double> EnsembleContext::unit_draws(std::uint64_t stream) const {
  return stream_unit_draws(seed_, stream, n_, sampling_);
}

UncertainValue uniform(EnsembleContext& ctx, const Interval& interval) {
  if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi) || interval.lo > interval.hi) {
    throw ConfigError("uniform: interval bounds must be finite with lo <= hi");
  }
  const std::uint64_t stream = ctx.allocate_stream();
  if (interval.degenerate()) {
    return UncertainValue(std::vector<double>(ctx.size(), interval.lo), stream);
  }
  std::vector<double> s = ctx.unit_draws(stream);
  const double w = interval.width();
  for (double& v : s) {
    v = interval.lo + w * v;
    if (interval.hi_open && v >= interval.hi) v = std::nextafter(interval.hi, interval.lo);
    if (interval.lo_open && v <= interval.lo) v = std::nextafter(interval.lo, interval.hi);
  }
  return UncertainValue(std::move(s), stream);
}

UncertainValue constant(std::size_t n, double c) {
  if (!std::isfinite(c)) throw DomainError("constant: value is not finite");
  return UncertainValue(std::vector<double>(n, c));
}

UncertainValue constant(const EnsembleContext& ctx, double c) { return constant(ctx.size(), c); }

#define UQ_BINARY_OP(OP)                                                              \
  UncertainValue operator OP(const UncertainValue& a, const UncertainValue& b) {      \
    return apply([](double x, double y) { return x OP y; }, a, b);                    \
  }                                                                                   \
  UncertainValue operator OP(const UncertainValue& a, double b) {                     \
    return apply([b](double x) { return x OP b; }, a);                                \
  }                                                                                   \
  UncertainValue operator OP(double a, const UncertainValue& b) {                     \
    return apply([a](double y) { return a OP y; }, b);                                \
  }
UQ_BINARY_OP(+)
UQ_BINARY_OP(-)
UQ_BINARY_OP(*)
UQ_BINARY_OP(/)
#undef UQ_BINARY_OP

UncertainValue operator-(const UncertainValue& a) {
  return apply([](double x) { return -x; }, a);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty ensemble");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summarize(const UncertainValue& x) {
  if (x.size() < 2) throw DomainError("summarize: standard deviation needs at least two samples");
  const auto s = x.samples();
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const std::vector<double> sorted = x.sorted();
  SummaryStats out;
  out.mean = mean;
  out.std = std::sqrt(ss / n);
  out.min = sorted.front();
  out.max = sorted.back();
  out.q025 = quantile_sorted(sorted, 0.025);
  out.q975 = quantile_sorted(sorted, 0.975);
  out.ci95_width = out.q975 - out.q025;
  return out;
}

ErrorStats error_stats(const UncertainValue& x, double reference, bool relative) {
  if (!std::isfinite(reference)) throw DomainError("error_stats: reference is not finite");
  if (x.empty()) throw DomainError("error_stats: empty ensemble");
  if (relative && reference == 0.0) {
    throw DomainError("error_stats: relative error against a zero reference");
  }
  ErrorStats out;
  double sum = 0.0;
  for (double v : x.samples()) {
    const double e = std::abs(v - reference);
    sum += e;
    out.max_ae = std::max(out.max_ae, e);
  }
  out.mae = sum / static_cast<double>(x.size());
  if (relative) {
    out.mre = out.mae / std::abs(reference);
    out.max_re = out.max_ae / std::abs(reference);
  }
  return out;
}

double wasserstein1_sorted(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw DomainError("wasserstein1: empty ensemble");
  const double np = static_cast<double>(p.size());
  const double nq = static_cast<double>(q.size());
  std::size_t i = 0, j = 0;
  double x_prev = std::min(p.front(), q.front());
  double total = 0.0;
  while (i < p.size() || j < q.size()) {
    double x;
    if (j >= q.size() || (i < p.size() && p[i] <= q[j])) {
      x = p[i];
    } else {
      x = q[j];
    }
    const double fp = static_cast<double>(i) / np;
    const double fq = static_cast<double>(j) / nq;
    total += std::abs(fp - fq) * (x - x_prev);
    while (i < p.size() && p[i] == x) ++i;
    while (j < q.size() && q[j] == x) ++j;
    x_prev = x;
  }
  return total;
}

double wasserstein1(const UncertainValue& p, const UncertainValue& q) {
  if (p.empty() || q.empty()) throw DomainError("wasserstein1: empty ensemble");
  const auto ps = p.sorted();
  const auto qs = q.sorted();
  return wasserstein1_sorted(ps, qs);
}

W1Reference::W1Reference(const UncertainValue& reference) : W1Reference(reference.sorted()) {}

W1Reference::W1Reference(std::vector<double> samples) : q_(std::move(samples)) {
  if (q_.empty()) throw DomainError("W1Reference: empty reference");
  std::sort(q_.begin(), q_.end());
  knot_integral_.resize(q_.size());
  const double nq = static_cast<double>(q_.size());
  double acc = 0.0;
  knot_integral_[0] = 0.0;
  for (std::size_t l = 1; l < q_.size(); ++l) {
    acc += (q_[l] - q_[l - 1]) * (static_cast<double>(l) / nq);
    knot_integral_[l] = acc;
  }
}

double W1Reference::cdf_integral(double x) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(q_.begin(), q_.end(), x) - q_.begin());
  if (k == 0) return 0.0;
  return knot_integral_[k - 1] +
         (x - q_[k - 1]) * (static_cast<double>(k) / static_cast<double>(q_.size()));
}

double W1Reference::distance_sorted(std::span<const double> p) const {
  if (p.empty()) throw DomainError("wasserstein1: empty ensemble");
  const std::size_t m = p.size();
  const std::uint64_t nq = q_.size();
  const double q_max = q_.back();
  // Left tail (F_P = 0) and right tail (F_P = 1).
  double total = cdf_integral(p.front());
  if (p.back() < q_max) {
    total += (q_max - p.back()) - (cdf_integral(q_max) - cdf_integral(p.back()));
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = p[i];
    const double b = p[i + 1];
    if (b <= a) continue;
    const double c = static_cast<double>(i + 1) / static_cast<double>(m);
    // F_Q(t) > c exactly when t >= q[floor(c * N)].
    const auto idx = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(i + 1) * nq) / static_cast<unsigned __int128>(m));
    double t = idx < nq ? q_[idx] : std::numeric_limits<double>::infinity();
    t = std::clamp(t, a, b);
    const double ga = cdf_integral(a);
    const double gt = cdf_integral(t);
    const double gb = cdf_integral(b);
    total += c * (t - a) - (gt - ga);
    total += (gb - gt) - c * (b - t);
  }
  return total;
}

double W1Reference::distance(std::vector<double> probe) const {
  std::sort(probe.begin(), probe.end());
  return distance_sorted(probe);
}

Histogram doane_histogram(std::span<const double> x) {
  if (x.empty()) throw DomainError("histogram of an empty ensemble");
  const auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
  double first = *mn_it;
  double last = *mx_it;
  const std::size_t n = x.size();
  double width = 0.0;
  if (n > 2) {
    const double nn = static_cast<double>(n);
    const double sg1 = std::sqrt(6.0 * (nn - 2.0) / ((nn + 1.0) * (nn + 3.0)));
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= nn;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / nn);
    if (sigma > 0.0) {
      double g1 = 0.0;
      for (double v : x) {
        const double z = (v - mean) / sigma;
        g1 += z * z * z;
      }
      g1 /= nn;
      width = (last - first) / (1.0 + std::log2(nn) + std::log2(1.0 + std::abs(g1) / sg1));
    }
  }
  if (first == last) {
    first -= 0.5;
    last += 0.5;
  }
  std::size_t bins = 1;
  if (width > 0.0) bins = static_cast<std::size_t>(std::ceil((last - first) / width));
  bins = std::max<std::size_t>(bins, 1);

  Histogram h;
  h.edges.resize(bins + 1);
  const double step = (last - first) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) h.edges[k] = first + static_cast<double>(k) * step;
  h.edges[bins] = last;
  h.counts.assign(bins, 0);
  const double norm = static_cast<double>(bins) / (last - first);
  for (double v : x) {
    auto idx = static_cast<std::size_t>((v - first) * norm);
    if (idx >= bins) idx = bins - 1;
    if (v < h.edges[idx] && idx > 0) --idx;
    if (idx + 1 < bins && v >= h.edges[idx + 1]) ++idx;
    ++h.counts[idx];
  }
  return h;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
  out.write(b, 8);
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() == 0) return false;
  if (in.gcount() != 8) throw FormatError("ensemble record truncated");
  v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return true;
}

}  // namespace

void write_ensemble_record(std::ostream& out, std::span<const double> samples) {
  put_u64(out, samples.size());
  for (double v : samples) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::vector<UncertainValue> read_ensemble_records(std::istream& in) {
  std::vector<UncertainValue> out;
  std::uint64_t len = 0;
  while (get_u64(in, len)) {
    if (len > (std::uint64_t{1} << 34)) throw FormatError("ensemble record length implausible");
    std::vector<double> s(len);
    for (auto& v : s) {
      std::uint64_t bits = 0;
      if (!get_u64(in, bits)) throw FormatError("ensemble record truncated");
      v = std::bit_cast<double>(bits);
    }
    out.emplace_back(std::move(s));
  }
  return out;
}

void write_ensemble_file(const std::string& path, std::span<const UncertainValue> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  for (const auto& v : values) write_ensemble_record(out, v.samples());
  if (!out) throw FormatError("write failed: " + path);
}

std::vector<UncertainValue> read_ensemble_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_ensemble_records(in);
}

}  // namespace uqsense
