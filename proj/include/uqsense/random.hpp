#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace uqsense {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter), which makes every draw
/// addressable by (seed, stream, index) and independent of scheduling.
class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
  }

  static Counter single_round(const Counter& c, const Key& k) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// 64 random bits addressed by (seed, stream, index).
inline std::uint64_t random_bits(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  const auto out = Philox4x64::block({index >> 2, stream, 0, 0}, {seed, 0x5EED5EED5EED5EEDULL});
  return out[index & 3U];
}

/// Uniform double in [0, 1) with 53 random bits.
inline double unit_uniform(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
  return static_cast<double>(random_bits(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// unit_uniform for indices [first, first + count), written to
/// out[0], out[stride], ...; computes each Philox block once.
inline void fill_unit_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t first,
                              std::uint64_t count, double* out, std::size_t stride = 1) {
  std::uint64_t i = first;
  const std::uint64_t end = first + count;
  while (i < end) {
    const auto blk = Philox4x64::block({i >> 2, stream, 0, 0}, {seed, 0x5EED5EED5EED5EEDULL});
    for (std::uint64_t lane = i & 3U; lane < 4 && i < end; ++lane, ++i) {
      *out = static_cast<double>(blk[lane] >> 11) * 0x1.0p-53;
      out += stride;
    }
  }
}

/// Deterministic 64-bit mixing used to derive child seeds (trial seeds,
/// per-stream permutation seeds) from a parent seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace uqsense
