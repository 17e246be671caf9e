#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "uqsense/ensemble.hpp"

using namespace uqsense;

namespace {

UncertainValue from(std::vector<double> v) { return UncertainValue(std::move(v)); }

double correlation(const UncertainValue& a, const UncertainValue& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Uniform, MomentsOfUnitWidthInterval) {
  EnsembleContext ctx(200000, 7);
  const auto u = uniform(ctx, Interval::half_open(-0.5, 0.5));
  const auto s = summarize(u);
  const double sd = 1.0 / std::sqrt(12.0);
  EXPECT_NEAR(s.mean, 0.0, 3.0 * sd / std::sqrt(200000.0));
  EXPECT_NEAR(s.std, sd, 0.003);
  EXPECT_GE(s.min, -0.5);
  EXPECT_LT(s.max, 0.5);
}

TEST(Uniform, DegenerateIntervalIsConstant) {
  EnsembleContext ctx(100, 7);
  const auto u = uniform(ctx, Interval::point(273.15));
  EXPECT_TRUE(u.degenerate());
  EXPECT_EQ(u[0], 273.15);
}

TEST(Uniform, DistinctStreamsAreUncorrelated) {
  EnsembleContext ctx(100000, 1);
  const auto a = uniform(ctx, Interval::half_open(0, 1));
  const auto b = uniform(ctx, Interval::half_open(0, 1));
  ASSERT_NE(a.stream_id(), b.stream_id());
  EXPECT_LT(std::abs(correlation(a, b)), 4.0 / std::sqrt(100000.0));
}

TEST(Uniform, StratifiedHitsEveryStratumOnce) {
  EnsembleContext ctx(256, 3, Sampling::Stratified);
  const auto u = uniform(ctx, Interval::half_open(0, 1));
  std::vector<int> hits(256, 0);
  for (double v : u.samples()) ++hits[static_cast<int>(v * 256)];
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Uniform, ReproducibleFromSeedAndStreamOrder) {
  EnsembleContext a(1000, 99), b(1000, 99);
  const auto x1 = uniform(a, Interval::half_open(2, 3));
  const auto x2 = uniform(b, Interval::half_open(2, 3));
  for (std::size_t i = 0; i < 1000; ++i) ASSERT_EQ(x1[i], x2[i]);
}

TEST(Constant, Basics) {
  EnsembleContext ctx(5, 0);
  EXPECT_TRUE(constant(ctx, 0.0).degenerate());
  EXPECT_EQ(constant(ctx, 273.15)[4], 273.15);
  const auto mixed = constant(ctx, 1.0) + uniform(ctx, Interval::half_open(0, 1));
  EXPECT_EQ(mixed.size(), 5u);
  EXPECT_THROW(constant(ctx, NAN), DomainError);
}

TEST(Apply, SelfDifferenceIsExactlyZero) {
  EnsembleContext ctx(1000, 5);
  const auto x = uniform(ctx, Interval::half_open(-3, 7));
  const auto d = x - x;
  for (double v : d.samples()) ASSERT_EQ(v, 0.0);
}

TEST(Apply, MonotoneMapCommutesWithQuantiles) {
  EnsembleContext ctx(4001, 5);
  const auto x = uniform(ctx, Interval::half_open(1, 2));
  const auto y = apply([](double v) { return v * v; }, x);
  const auto xs = x.sorted(), ys = y.sorted();
  for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    // with n-1 divisible by 1/p*... linear interpolation lands on order statistics
    const double qx = quantile_sorted(xs, p);
    EXPECT_DOUBLE_EQ(quantile_sorted(ys, p), qx * qx);
  }
}

TEST(Apply, ReportsSampleIndexOnDomainError) {
  const auto x = from({4.0, 1.0, -1.0, 9.0});
  try {
    apply([](double v) { return std::sqrt(v); }, x);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    ASSERT_TRUE(e.sample().has_value());
    EXPECT_EQ(*e.sample(), 2u);
  }
}

TEST(Apply, SizeMismatchRejected) {
  EXPECT_THROW(from({1, 2}) + from({1, 2, 3}), ConfigError);
}

TEST(Summarize, ConstantAndTwoPoint) {
  const auto c = summarize(constant(10, 3.5));
  EXPECT_EQ(c.std, 0.0);
  EXPECT_EQ(c.ci95_width, 0.0);
  const auto t = summarize(from({0.0, 1.0}));
  EXPECT_EQ(t.mean, 0.5);
  EXPECT_EQ(t.min, 0.0);
  EXPECT_EQ(t.max, 1.0);
  EXPECT_THROW(summarize(from({1.0})), DomainError);
}

TEST(Summarize, UniformCiWidth) {
  EnsembleContext ctx(100000, 8);
  const auto s = summarize(uniform(ctx, Interval::half_open(0, 1)));
  EXPECT_NEAR(s.ci95_width, 0.95, 0.005);
  EXPECT_LE(s.min, s.q025);
  EXPECT_LE(s.q025, s.q975);
  EXPECT_LE(s.q975, s.max);
}

TEST(Summarize, MatchesNumpyOnSkewedData) {
  // numpy: x = exp(0.01*arange(200)); quantile(x, .025/.975), x.std()
  std::vector<double> x(200);
  for (int i = 0; i < 200; ++i) x[i] = std::exp(0.01 * i);
  const auto s = summarize(from(x));
  EXPECT_NEAR(s.q025, 1.0510095883214332, 1e-13);
  EXPECT_NEAR(s.q975, 6.960499385886072, 1e-13);
  EXPECT_NEAR(s.std, 1.7783714624640943, 1e-13);
}

TEST(ErrorStats, Basics) {
  const auto z = error_stats(constant(4, 20.0), 20.0);
  EXPECT_EQ(z.mae, 0.0);
  EXPECT_EQ(z.max_ae, 0.0);
  EXPECT_EQ(*z.mre, 0.0);
  EXPECT_EQ(*z.max_re, 0.0);
  const auto pm = error_stats(from({19.0, 21.0}), 20.0);
  EXPECT_EQ(pm.mae, 1.0);
  EXPECT_EQ(pm.max_ae, 1.0);
  EXPECT_EQ(*pm.mre, 0.05);
  EXPECT_THROW(error_stats(from({1.0, 2.0}), 0.0), DomainError);
  EXPECT_FALSE(error_stats(from({1.0, 2.0}), 0.0, false).mre.has_value());
}

TEST(ErrorStats, UniformMeanAbsoluteDeviation) {
  EnsembleContext ctx(200000, 9);
  const auto x = uniform(ctx, Interval::half_open(9.5, 10.5));
  EXPECT_NEAR(error_stats(x, 10.0).mae, 0.25, 0.002);
}

TEST(Wasserstein, Examples) {
  const auto p = from({1.0, 5.0, 2.0});
  EXPECT_EQ(wasserstein1(p, p), 0.0);
  EXPECT_EQ(wasserstein1(from({3.0}), from({-1.5})), 4.5);
  EXPECT_THROW(wasserstein1(p, UncertainValue()), DomainError);
}

TEST(Wasserstein, ShiftedUniformGrids) {
  // Exact stratified grids of U[0,1) and U[0.5,1.5): distance is the shift.
  std::vector<double> a(1000), b(1000);
  for (int i = 0; i < 1000; ++i) {
    a[i] = (i + 0.5) / 1000.0;
    b[i] = a[i] + 0.5;
  }
  EXPECT_NEAR(wasserstein1(from(a), from(b)), 0.5, 1e-12);
}

TEST(Wasserstein, MatchesScipyOnUnequalSizes) {
  // scipy.stats.wasserstein_distance(2 sin(1.3 i), cos(0.7 j)^3)
  std::vector<double> p(37), q(101);
  for (int i = 0; i < 37; ++i) p[i] = std::sin(i * 1.3) * 2;
  for (int j = 0; j < 101; ++j) q[j] = std::pow(std::cos(j * 0.7), 3);
  EXPECT_NEAR(wasserstein1(from(p), from(q)), 0.815698275708668, 1e-13);
  EXPECT_NEAR(W1Reference(q).distance(p), 0.815698275708668, 1e-12);
}

TEST(Wasserstein, ReferenceAgreesWithMergeSweep) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0, 1);
  std::gamma_distribution<double> gam(2.0, 1.5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> ref(1 + rng() % 3000), probe(1 + rng() % 200);
    for (auto& v : ref) v = gam(rng);
    for (auto& v : probe) v = gam(rng) + 0.3 * g(rng);
    if (t % 7 == 0) probe.assign(probe.size(), ref[0]);  // ties and point masses
    const W1Reference r(ref);
    std::sort(ref.begin(), ref.end());
    std::sort(probe.begin(), probe.end());
    ASSERT_NEAR(r.distance_sorted(probe), wasserstein1_sorted(probe, ref), 1e-9);
  }
}

TEST(Histogram, DoaneMatchesNumpy) {
  std::vector<double> x(200);
  for (int i = 0; i < 200; ++i) x[i] = std::exp(0.01 * i);
  const auto h = doane_histogram(x);
  const std::vector<std::uint64_t> expected = {46, 31, 24, 19, 16, 14, 12, 11, 9, 9, 9};
  EXPECT_EQ(h.counts, expected);
  ASSERT_EQ(h.edges.size(), 12u);
  EXPECT_DOUBLE_EQ(h.edges[1], 1.5741394329372334);
  EXPECT_EQ(h.edges.back(), std::exp(0.01 * 199));
}

TEST(Histogram, DegenerateGetsOneBin) {
  const std::vector<double> x(10, 2.0);
  const auto h = doane_histogram(x);
  ASSERT_EQ(h.counts.size(), 1u);
  EXPECT_EQ(h.counts[0], 10u);
  EXPECT_EQ(h.edges[0], 1.5);
  EXPECT_EQ(h.edges[1], 2.5);
}

TEST(Serialization, BinaryRoundTripAndLayout) {
  std::stringstream ss;
  write_ensemble_record(ss, std::vector<double>{1.0, -2.5});
  write_ensemble_record(ss, std::vector<double>{});
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u + 16u + 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 2);
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F
  EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x3F);
  const auto back = read_ensemble_records(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0][1], -2.5);
  EXPECT_TRUE(back[1].empty());
}

TEST(Serialization, TruncatedRecordRejected) {
  std::stringstream ss;
  write_ensemble_record(ss, std::vector<double>{1.0, 2.0});
  std::string s = ss.str();
  s.resize(s.size() - 3);
  std::stringstream in(s);
  EXPECT_THROW(read_ensemble_records(in), FormatError);
}

TEST(Sobol, MatchesBoostEngineAsPointSet) {
  // Boost's engine walks the sequence in Gray-code order starting at point
  // 1; over the first 2^m - 1 points both orders give the same set.
  constexpr std::size_t D = 40, N = 128;
  boost::random::sobol gen(D);
  std::set<std::vector<std::uint32_t>> boost_pts, ours;
  for (std::size_t i = 1; i < N; ++i) {
    std::vector<std::uint32_t> p(D);
    for (auto& c : p) c = static_cast<std::uint32_t>(gen() >> 32);
    boost_pts.insert(p);
    std::vector<std::uint32_t> q(D);
    for (std::size_t d = 0; d < D; ++d) q[d] = sobol_point(d, i);
    ours.insert(q);
  }
  EXPECT_EQ(boost_pts, ours);
  // a high coordinate too
  boost::random::sobol tall(kSobolMaxDimension);
  std::set<std::uint32_t> a, b;
  for (std::size_t i = 1; i < 32; ++i) {
    std::uint64_t last = 0;
    for (std::size_t d = 0; d < kSobolMaxDimension; ++d) last = tall();
    a.insert(static_cast<std::uint32_t>(last >> 32));
    b.insert(sobol_point(kSobolMaxDimension - 1, i));
  }
  EXPECT_EQ(a, b);
}

TEST(Sobol, ScrambledDrawsStratifyJointly) {
  const std::size_t n = 256;
  const auto u = stream_unit_draws(9, 3, n, Sampling::Sobol);
  const auto v = stream_unit_draws(9, 4, n, Sampling::Sobol);
  std::vector<int> cells(16 * 16, 0), strata(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_GE(u[i], 0.0);
    ASSERT_LT(u[i], 1.0);
    ++strata[static_cast<std::size_t>(u[i] * n)];
    ++cells[static_cast<std::size_t>(u[i] * 16) * 16 + static_cast<std::size_t>(v[i] * 16)];
  }
  for (int c : strata) EXPECT_EQ(c, 1);
  // (0,m,2)-net property of the first two-dimensional projections
  for (int c : cells) EXPECT_EQ(c, 1);
  EXPECT_NE(u, stream_unit_draws(10, 3, n, Sampling::Sobol));
  EXPECT_THROW(stream_unit_draws(9, kSobolMaxDimension, 4, Sampling::Sobol), ConfigError);
}
