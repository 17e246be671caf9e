#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "uqsense/random.hpp"

using uqsense::Philox4x64;

// Known-answer vectors, cross-checked against numpy.random.Philox.
TEST(Philox, ZeroKeyZeroCounter) {
  const auto out = Philox4x64::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x16554d9eca36314cULL);
  EXPECT_EQ(out[1], 0xdb20fe9d672d0fdcULL);
  EXPECT_EQ(out[2], 0xd7e772cee186176bULL);
  EXPECT_EQ(out[3], 0x7e68b68aec7ba23bULL);
}

TEST(Philox, ArbitraryKeyAndCounter) {
  const auto out = Philox4x64::block({5, 0, 7, 0}, {0x0123456789abcdefULL, 0xfedcba9876543210ULL});
  EXPECT_EQ(out[0], 0x42cf41ac5a2620edULL);
  EXPECT_EQ(out[1], 0x62aabbf438cb1abaULL);
  EXPECT_EQ(out[2], 0x6e323ce0ee5e1a21ULL);
  EXPECT_EQ(out[3], 0x90f1b701d945f27cULL);
}

TEST(Philox, DrawsAreAddressable) {
  EXPECT_EQ(uqsense::random_bits(9, 3, 12345), uqsense::random_bits(9, 3, 12345));
  EXPECT_NE(uqsense::random_bits(9, 3, 12345), uqsense::random_bits(9, 4, 12345));
  EXPECT_NE(uqsense::random_bits(9, 3, 12345), uqsense::random_bits(10, 3, 12345));
}

TEST(Philox, UnitUniformRangeAndMean) {
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = uqsense::unit_uniform(1, 0, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // mean of U[0,1): 1/2, sd of the mean sqrt(1/12/n)
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(MixSeed, DistinctSalts) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(uqsense::mix_seed(42, s));
  EXPECT_EQ(seen.size(), 1000u);
}
