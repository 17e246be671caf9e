#include "uqsense/fixture.hpp"

#include <cmath>

namespace uqsense {

namespace {

// Small deterministic integer hash for per-pixel remainders.
std::int64_t hashed(std::size_t p, std::uint64_t salt, std::int64_t lo, std::int64_t hi) {
  std::uint64_t z = p * 0x9E3779B97F4A7C15ULL + salt;
  z = (z ^ (z >> 31)) * 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 29;
  return lo + static_cast<std::int64_t>(z % static_cast<std::uint64_t>(hi - lo + 1));
}

std::int64_t dome(double i, double centre) {
  const double t = (i - centre) / centre;
  return static_cast<std::int64_t>(std::lround(7.0 - 15.0 * t * t));
}

}  // namespace

CalibrationImage reference_sensor_image() {
  CalibrationImage im;
  im.sensor_id = "0x1f15cb2d0189";
  im.k_vdd = -3040;
  im.vdd25 = -12864;
  im.kv_ptat = 0.001953125;
  im.kt_ptat = 42.75;
  im.v_ptat25 = 12194;
  im.alpha_ptat = 9;
  im.gain = 6276;
  im.tgc = 0;
  im.kv_cp = 0.375;
  im.kta_cp = 0.00439453125;
  im.resolution_ee = 2;
  im.calibration_mode_ee = 128;
  im.ks_ta = -0.001220703125;
  im.ks_to = {-0.000396728515625, -0.00045013427734375, -0.00060272216796875,
              -0.00080108642578125};
  im.ks_to_scale_nibble = 9;
  im.temp_step = 20;
  im.ct2 = 120;
  im.ct3 = 240;
  im.alpha_cp0 = 3.6670826375484467e-09;
  im.alpha_cp1 = 3.5238372220192105e-09;
  im.cp_offset0 = -80;
  im.cp_offset1 = -75;
  im.il_chess = {0.9375, 4.0, 0.0};

  im.alpha_scale_nibble = 7;
  im.acc_row_scale = 9;
  im.acc_col_scale = 9;
  im.acc_rem_scale = 2;
  im.occ_row_scale = 2;
  im.occ_col_scale = 2;
  im.occ_rem_scale = 0;
  im.kta_scale1_nibble = 5;
  im.kta_scale2 = 2;
  im.kv_scale_nibble = 3;

  im.alpha_ref = 14403;
  im.offset_ref = -57;
  for (std::size_t r = 0; r < kRows; ++r) {
    im.acc_row[r] = dome(static_cast<double>(r), 11.5);
    im.occ_row[r] = static_cast<std::int64_t>(r % 4) - 2;
  }
  for (std::size_t c = 0; c < kCols; ++c) {
    im.acc_col[c] = dome(static_cast<double>(c), 15.5);
    im.occ_col[c] = static_cast<std::int64_t>(c % 5) - 2;
  }
  im.kta_avg = {98, 88, 92, 85};
  im.kv_avg = {5, 4, 5, 4};
  for (std::size_t p = 0; p < kPixels; ++p) {
    std::int64_t a = hashed(p, 1, -20, 20);
    if (a == 0) a = 1;  // keeps every pixel word nonzero (zero marks a broken pixel)
    im.alpha_rem[p] = a;
    im.offset_rem[p] = hashed(p, 2, -10, 10);
    im.kta_rem[p] = hashed(p, 3, -4, 3);
  }
  return im;
}

CalibrationMemory reference_sensor_memory() { return inverse_encode(reference_sensor_image()); }

AuxRegisters typical_aux() {
  AuxRegisters a;
  a.vdd_raw = -12864;
  a.vptat_raw = 1500;
  a.vbe_raw = 18746;
  a.gain_raw = 6276;
  a.cp_sp0_raw = -80;
  a.cp_sp1_raw = -75;
  a.subpage = 0;
  a.control_word = 0x1901;
  return a;
}

std::vector<double> flat_scene(double celsius) { return std::vector<double>(kPixels, celsius); }

std::vector<double> step_scene(double cold_c, double hot_c, std::size_t step_col,
                               double ramp_per_row) {
  std::vector<double> s(kPixels);
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t c = 0; c < kCols; ++c) {
      s[r * kCols + c] = c >= step_col ? hot_c + ramp_per_row * static_cast<double>(r) : cold_c;
    }
  }
  return s;
}

std::vector<double> graded_step_scene(double cold_c, double hot_c, std::size_t mid_col) {
  std::vector<double> s(kPixels);
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t c = 0; c < kCols; ++c) {
      s[r * kCols + c] = c < mid_col ? cold_c : (c == mid_col ? 0.5 * (cold_c + hot_c) : hot_c);
    }
  }
  return s;
}

}  // namespace uqsense
