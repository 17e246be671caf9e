#include "uqsense/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqsense/errors.hpp"
#include "uqsense/random.hpp"

namespace uqsense {

namespace {

constexpr double kScaleAlpha = 0.000001;  // driver's reciprocal storage constant

std::size_t split_of(std::size_t p) {
  const std::size_t row = p / kCols, col = p % kCols;
  return 2 * (row % 2) + col % 2;
}

// Raw-data accessor: realized value of element `idx` of catalog entry `id`.
struct Data {
  std::span<const double> v;
  double operator()(Fid id, std::size_t idx = 0) const { return v[datum_offset(id) + idx]; }
};

int storage_scale(double largest, double threshold) {
  if (!(largest > 0.0) || !std::isfinite(largest)) return 0;
  int s = 0;
  while (largest < threshold && s < 64) {
    largest *= 2;
    ++s;
  }
  return s;
}

double round_away(double t) { return t < 0 ? std::trunc(t - 0.5) : std::trunc(t + 0.5); }

}  // namespace

Extractor::Extractor(const CalibrationMemory& mem, ExtractOptions options) : options_(options) {
  const auto ints = read_all_data(mem);
  exact_.assign(ints.begin(), ints.end());
  uncertain_.reserve(ints.size());
  for (const auto& entry : field_catalog()) {
    for (std::size_t e = 0; e < entry.count; ++e) uncertain_.push_back(entry.field.uncertain);
  }

  auto exact_int = [&](Fid id) { return static_cast<int>(ints[datum_offset(id)]); };
  resolution_ee_ = exact_int(Fid::ResolutionEE);
  calibration_mode_ee_ = (exact_int(Fid::CalibrationMode) << 7) ^ 0x80;
  alpha_scale_ = exact_int(Fid::AlphaScale);
  acc_row_scale_ = exact_int(Fid::AccRowScale);
  acc_col_scale_ = exact_int(Fid::AccColScale);
  acc_rem_scale_ = exact_int(Fid::AccRemScale);
  occ_row_scale_ = exact_int(Fid::OccRowScale);
  occ_col_scale_ = exact_int(Fid::OccColScale);
  occ_rem_scale_ = exact_int(Fid::OccRemScale);
  kta_scale1_ = exact_int(Fid::KtaScale1) + 8;
  kta_scale2_ = exact_int(Fid::KtaScale2);
  kv_scale_ = exact_int(Fid::KvScale);
  ks_to_scale_ = exact_int(Fid::KsToScale) + 8;
  temp_step_ = exact_int(Fid::TempStep) * 10;

  for (std::size_t p = 0; p < kPixels; ++p) {
    const std::uint16_t w = mem.word(static_cast<std::uint16_t>(0x2440 + p));
    if (w == 0) {
      broken_.push_back(p);
    } else if ((w & 1U) != 0) {
      outlier_.push_back(p);
    }
  }

  // Storage exponents of the driver's integer re-discretization. They are
  // ordinal, so they come from the exact data and stay fixed in every
  // Monte Carlo iteration.
  const bool redisc = options_.emulate_driver_rediscretization;
  options_.emulate_driver_rediscretization = false;
  CalibrationParameters plain;
  evaluate(exact_, plain);
  options_.emulate_driver_rediscretization = redisc;
  double max_inv_alpha = -INFINITY, max_kta = 0.0, max_kv = 0.0;
  for (std::size_t p = 0; p < kPixels; ++p) {
    max_inv_alpha = std::max(max_inv_alpha, kScaleAlpha / plain.alpha[p]);
    max_kta = std::max(max_kta, std::abs(plain.kta[p]));
    max_kv = std::max(max_kv, std::abs(plain.kv[p]));
  }
  s_alpha_ = storage_scale(max_inv_alpha, 32767.4);
  s_kta_ = storage_scale(max_kta, 63.4);
  s_kv_ = storage_scale(max_kv, 63.4);
}

std::vector<std::size_t> Extractor::data_needed(std::span<const std::size_t> pixels) const {
  if (pixels.empty()) {
    std::vector<std::size_t> all(datum_count());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<bool> need(datum_count(), false);
  for (std::size_t k = 0; k < kFieldCount; ++k) {
    if (field_catalog()[k].count == 1) need[datum_offset(static_cast<Fid>(k))] = true;
  }
  for (std::size_t p : pixels) {
    if (p >= kPixels) throw ConfigError("pixel index out of range");
    const std::size_t r = p / kCols, c = p % kCols;
    need[datum_offset(Fid::AccRow) + r] = true;
    need[datum_offset(Fid::OccRow) + r] = true;
    need[datum_offset(Fid::AccCol) + c] = true;
    need[datum_offset(Fid::OccCol) + c] = true;
    need[datum_offset(Fid::PixAlphaRem) + p] = true;
    need[datum_offset(Fid::PixOffsetRem) + p] = true;
    need[datum_offset(Fid::PixKtaRem) + p] = true;
    need[datum_offset(Fid::PixOutlier) + p] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < need.size(); ++d) {
    if (need[d]) out.push_back(d);
  }
  return out;
}

void Extractor::evaluate(std::span<const double> data, CalibrationParameters& out,
                         std::span<const std::size_t> pixels) const {
  if (data.size() != datum_count()) throw ConfigError("raw data vector has the wrong length");
  const Data d{data};

  // Supply voltage and PTAT.
  out.k_vdd = d(Fid::KVdd) * 32.0;
  out.vdd25 = d(Fid::Vdd25) * 32.0 - 8192.0;
  out.kv_ptat = d(Fid::KvPtat) / 4096.0;
  out.kt_ptat = d(Fid::KtPtat) / 8.0;
  out.v_ptat25 = d(Fid::VPtat25);
  out.alpha_ptat = d(Fid::AlphaPtat) / 4.0 + 8.0;
  out.gain = d(Fid::Gain);
  out.tgc = d(Fid::Tgc) / 32.0;
  out.resolution_ee = resolution_ee_;
  out.calibration_mode_ee = calibration_mode_ee_;
  out.ks_ta = d(Fid::KsTa) / 8192.0;

  // KsTo ranges; the last range and the first two corners are hardcoded.
  const double ks_to_scale = std::ldexp(1.0, ks_to_scale_);
  out.ks_to[0] = d(Fid::KsTo0) / ks_to_scale;
  out.ks_to[1] = d(Fid::KsTo1) / ks_to_scale;
  out.ks_to[2] = d(Fid::KsTo2) / ks_to_scale;
  out.ks_to[3] = d(Fid::KsTo3) / ks_to_scale;
  out.ks_to[4] = -0.0;
  out.ct[0] = -40.0;
  out.ct[1] = 0.0;
  out.ct[2] = d(Fid::Ct2Step) * temp_step_;
  out.ct[3] = out.ct[2] + d(Fid::Ct3Step) * temp_step_;

  // Compensation pixel.
  out.alpha_cp0 = d(Fid::AlphaCp0) / std::ldexp(1.0, alpha_scale_ + 27);
  out.alpha_cp1 = (1.0 + d(Fid::AlphaCpRatio) / 128.0) * out.alpha_cp0;
  out.cp_offset[0] = d(Fid::OffsetCp0);
  out.cp_offset[1] = d(Fid::OffsetCpDelta) + out.cp_offset[0];
  out.kta_cp = d(Fid::CpKta) / std::ldexp(1.0, kta_scale1_);
  out.kv_cp = d(Fid::CpKv) / std::ldexp(1.0, kv_scale_);
  out.il_chess[0] = d(Fid::IlChessC0) / 16.0;
  out.il_chess[1] = d(Fid::IlChessC1) / 2.0;
  out.il_chess[2] = d(Fid::IlChessC2) / 8.0;

  out.s_alpha = s_alpha_;
  out.s_kta = s_kta_;
  out.s_kv = s_kv_;
  out.broken_pixels = broken_;
  out.outlier_pixels = outlier_;

  // Per-pixel vectors.
  out.alpha.resize(kPixels);
  out.offset.resize(kPixels);
  out.kta.resize(kPixels);
  out.kv.resize(kPixels);
  const double kta_rc[4] = {d(Fid::KtaRoCo), d(Fid::KtaRoCe), d(Fid::KtaReCo), d(Fid::KtaReCe)};
  const double kv_t[4] = {d(Fid::KvRoCo), d(Fid::KvRoCe), d(Fid::KvReCo), d(Fid::KvReCe)};
  const double alpha_div = std::ldexp(1.0, alpha_scale_ + 30);
  const double tgc_cp = out.tgc * (out.alpha_cp0 + out.alpha_cp1) / 2.0;
  const bool redisc = options_.emulate_driver_rediscretization;

  auto one_pixel = [&](std::size_t p) {
    const std::size_t r = p / kCols, c = p % kCols;
    // sensitivity
    double a = d(Fid::PixAlphaRem, p) * std::ldexp(1.0, acc_rem_scale_);
    a += d(Fid::AlphaRef) + d(Fid::AccRow, r) * std::ldexp(1.0, acc_row_scale_) +
         d(Fid::AccCol, c) * std::ldexp(1.0, acc_col_scale_);
    a /= alpha_div;
    a -= tgc_cp;
    // offset
    double o = d(Fid::PixOffsetRem, p) * std::ldexp(1.0, occ_rem_scale_);
    o += d(Fid::OffsetRef) + d(Fid::OccRow, r) * std::ldexp(1.0, occ_row_scale_) +
         d(Fid::OccCol, c) * std::ldexp(1.0, occ_col_scale_);
    // Kta and Kv
    double kt = d(Fid::PixKtaRem, p) * std::ldexp(1.0, kta_scale2_);
    kt += kta_rc[split_of(p)];
    kt /= std::ldexp(1.0, kta_scale1_);
    double kv = kv_t[split_of(p)] / std::ldexp(1.0, kv_scale_);
    if (redisc) {
      const double sa = std::ldexp(1.0, s_alpha_);
      const double stored = std::floor(kScaleAlpha / a * sa + 0.5);
      a = kScaleAlpha * sa / stored;
      kt = round_away(kt * std::ldexp(1.0, s_kta_)) / std::ldexp(1.0, s_kta_);
      kv = round_away(kv * std::ldexp(1.0, s_kv_)) / std::ldexp(1.0, s_kv_);
    }
    out.alpha[p] = a;
    out.offset[p] = o;
    out.kta[p] = kt;
    out.kv[p] = kv;
  };
  if (pixels.empty()) {
    for (std::size_t p = 0; p < kPixels; ++p) one_pixel(p);
  } else {
    for (std::size_t p : pixels) one_pixel(p);
  }
}

CalibrationParameters Extractor::conventional() const {
  CalibrationParameters out;
  evaluate(exact_, out);
  return out;
}

CalibrationParameters extract_conventional(const CalibrationMemory& mem,
                                           const ExtractOptions& options) {
  return Extractor(mem, options).conventional();
}

NoiseRealizer::NoiseRealizer(const Extractor& extractor, std::uint64_t seed,
                             std::uint64_t first_stream, const NoiseOptions& noise,
                             std::span<const std::size_t> data_needed, Sampling sampling,
                             std::size_t stratified_n)
    : extractor_(extractor),
      seed_(seed),
      first_stream_(first_stream),
      amplitude_(noise.amplitude),
      sampling_(sampling),
      stratified_n_(stratified_n) {
  if (!std::isfinite(noise.amplitude) || noise.amplitude < 0.0) {
    throw ConfigError("noise amplitude must be finite and non-negative");
  }
  std::vector<bool> allowed(datum_count(), noise.only_data.empty());
  for (std::size_t d : noise.only_data) {
    if (d >= datum_count()) throw ConfigError("noise datum out of range");
    allowed[d] = true;
  }
  for (std::size_t d : data_needed) {
    if (extractor.uncertain_mask()[d] && allowed[d]) noisy_.push_back(d);
  }
  if (sampling != Sampling::Pseudorandom) {
    if (stratified_n < 1) throw ConfigError("stratified sampling needs the ensemble size");
    stratified_units_.reserve(noisy_.size());
    for (std::size_t d : noisy_) {
      stratified_units_.push_back(
          stream_unit_draws(seed, first_stream + d, stratified_n, sampling));
    }
  }
}

void NoiseRealizer::realize(std::size_t first, std::size_t count,
                            std::vector<double>& block) const {
  const std::size_t D = datum_count();
  const auto& exact = extractor_.exact_data();
  block.resize(count * D);
  for (std::size_t j = 0; j < count; ++j) {
    std::copy(exact.begin(), exact.end(), block.begin() + static_cast<std::ptrdiff_t>(j * D));
  }
  std::vector<double> u(count);
  for (std::size_t k = 0; k < noisy_.size(); ++k) {
    const std::size_t d = noisy_[k];
    if (sampling_ != Sampling::Pseudorandom) {
      if (first + count > stratified_n_) throw ConfigError("iteration beyond stratified ensemble");
      std::copy_n(stratified_units_[k].begin() + static_cast<std::ptrdiff_t>(first), count,
                  u.begin());
    } else {
      fill_unit_uniform(seed_, first_stream_ + d, first, count, u.data());
    }
    for (std::size_t j = 0; j < count; ++j) {
      block[j * D + d] = exact[d] + amplitude_ * (u[j] - 0.5);
    }
  }
}

UncertainCalibrationParameters extract_uncertain(const CalibrationMemory& mem,
                                                 EnsembleContext& ctx,
                                                 const NoiseOptions& noise,
                                                 const ExtractOptions& options) {
  const Extractor ex(mem, options);
  const std::size_t D = datum_count();
  std::uint64_t first_stream = 0;
  for (std::size_t d = 0; d < D; ++d) {
    const std::uint64_t s = ctx.allocate_stream();
    if (d == 0) first_stream = s;
  }
  const auto needed = ex.data_needed({});
  const NoiseRealizer realizer(ex, ctx.master_seed(), first_stream, noise, needed,
                               ctx.sampling(), ctx.size());

  const std::size_t n = ctx.size();
  constexpr std::size_t kBlock = 64;
  // Per-parameter sample columns, filled iteration by iteration.
  std::vector<std::vector<double>> scal(64, std::vector<double>(n));
  std::array<std::vector<double>, 4> vec;
  for (auto& v : vec) v.assign(kPixels * n, 0.0);

  CalibrationParameters one;
  std::vector<double> block;
  for (std::size_t first = 0; first < n; first += kBlock) {
    const std::size_t count = std::min(kBlock, n - first);
    realizer.realize(first, count, block);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t i = first + j;
      ex.evaluate(std::span<const double>(block.data() + j * D, D), one);
      const double s[] = {one.k_vdd,     one.vdd25,        one.kv_ptat,      one.kt_ptat,
                          one.v_ptat25,  one.alpha_ptat,   one.gain,         one.tgc,
                          one.kv_cp,     one.kta_cp,       one.ks_ta,        one.ks_to[0],
                          one.ks_to[1],  one.ks_to[2],     one.ks_to[3],     one.ks_to[4],
                          one.ct[0],     one.ct[1],        one.ct[2],        one.ct[3],
                          one.alpha_cp0, one.alpha_cp1,    one.cp_offset[0], one.cp_offset[1],
                          one.il_chess[0], one.il_chess[1], one.il_chess[2]};
      for (std::size_t k = 0; k < std::size(s); ++k) scal[k][i] = s[k];
      for (std::size_t p = 0; p < kPixels; ++p) {
        vec[0][p * n + i] = one.alpha[p];
        vec[1][p * n + i] = one.offset[p];
        vec[2][p * n + i] = one.kta[p];
        vec[3][p * n + i] = one.kv[p];
      }
    }
  }

  UncertainCalibrationParameters out;
  std::size_t k = 0;
  auto next = [&]() { return UncertainValue(std::move(scal[k++])); };
  out.k_vdd = next();
  out.vdd25 = next();
  out.kv_ptat = next();
  out.kt_ptat = next();
  out.v_ptat25 = next();
  out.alpha_ptat = next();
  out.gain = next();
  out.tgc = next();
  out.kv_cp = next();
  out.kta_cp = next();
  out.ks_ta = next();
  for (auto& v : out.ks_to) v = next();
  for (auto& v : out.ct) v = next();
  out.alpha_cp0 = next();
  out.alpha_cp1 = next();
  for (auto& v : out.cp_offset) v = next();
  for (auto& v : out.il_chess) v = next();
  out.resolution_ee = one.resolution_ee;
  out.calibration_mode_ee = one.calibration_mode_ee;
  out.s_alpha = one.s_alpha;
  out.s_kta = one.s_kta;
  out.s_kv = one.s_kv;
  out.broken_pixels = one.broken_pixels;
  out.outlier_pixels = one.outlier_pixels;
  std::vector<UncertainValue>* dst[4] = {&out.alpha, &out.offset, &out.kta, &out.kv};
  for (int v = 0; v < 4; ++v) {
    dst[v]->reserve(kPixels);
    for (std::size_t p = 0; p < kPixels; ++p) {
      dst[v]->emplace_back(std::vector<double>(vec[v].begin() + static_cast<std::ptrdiff_t>(p * n),
                                               vec[v].begin() + static_cast<std::ptrdiff_t>((p + 1) * n)));
    }
  }
  return out;
}

CalibrationParameters sample_parameters(const UncertainCalibrationParameters& u, std::size_t i) {
  CalibrationParameters p;
  p.k_vdd = u.k_vdd[i];
  p.vdd25 = u.vdd25[i];
  p.kv_ptat = u.kv_ptat[i];
  p.kt_ptat = u.kt_ptat[i];
  p.v_ptat25 = u.v_ptat25[i];
  p.alpha_ptat = u.alpha_ptat[i];
  p.gain = u.gain[i];
  p.tgc = u.tgc[i];
  p.kv_cp = u.kv_cp[i];
  p.kta_cp = u.kta_cp[i];
  p.resolution_ee = u.resolution_ee;
  p.calibration_mode_ee = u.calibration_mode_ee;
  p.ks_ta = u.ks_ta[i];
  for (int k = 0; k < 5; ++k) p.ks_to[k] = u.ks_to[k][i];
  for (int k = 0; k < 4; ++k) p.ct[k] = u.ct[k][i];
  p.s_alpha = u.s_alpha;
  p.s_kta = u.s_kta;
  p.s_kv = u.s_kv;
  p.alpha_cp0 = u.alpha_cp0[i];
  p.alpha_cp1 = u.alpha_cp1[i];
  for (int k = 0; k < 2; ++k) p.cp_offset[k] = u.cp_offset[k][i];
  for (int k = 0; k < 3; ++k) p.il_chess[k] = u.il_chess[k][i];
  p.broken_pixels = u.broken_pixels;
  p.outlier_pixels = u.outlier_pixels;
  p.alpha.resize(u.alpha.size());
  p.offset.resize(u.offset.size());
  p.kta.resize(u.kta.size());
  p.kv.resize(u.kv.size());
  for (std::size_t q = 0; q < u.alpha.size(); ++q) {
    p.alpha[q] = u.alpha[q][i];
    p.offset[q] = u.offset[q][i];
    p.kta[q] = u.kta[q][i];
    p.kv[q] = u.kv[q][i];
  }
  return p;
}

}  // namespace uqsense
