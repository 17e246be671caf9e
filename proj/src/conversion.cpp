#include "uqsense/conversion.hpp"

#include <cmath>
#include <limits>

#include "uqsense/errors.hpp"

namespace uqsense {

namespace {

double checked(double v, const char* what, std::optional<std::size_t> pixel = std::nullopt) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " is not finite", std::nullopt, pixel);
  return v;
}

double fourth_root(double x, const char* what, std::optional<std::size_t> pixel = std::nullopt) {
  if (!(x >= 0.0)) {
    throw DomainError(std::string("negative radicand in ") + what, std::nullopt, pixel);
  }
  return std::sqrt(std::sqrt(x));
}

double pow4(double t) {
  const double t2 = t * t;
  return t2 * t2;
}

}  // namespace

double compute_tar(double eps, double t_r, double t_a, TarConvention convention) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("emissivity must lie in (0, 1]");
  if (!(t_r > 0.0) || !(t_a > 0.0)) throw DomainError("temperatures must be positive kelvin");
  const double tr4 = pow4(t_r), ta4 = pow4(t_a);
  if (convention == TarConvention::Datasheet) return tr4 - (tr4 - ta4) / eps;
  return -(1.0 - eps) * tr4 / eps - ta4 / eps;
}

double compute_to_physics(double v_out, double alpha, double s, double t_ar, double c0) {
  if (alpha == 0.0) throw DomainError("zero sensitivity");
  const double inner = fourth_root(v_out / alpha + t_ar, "inner root");
  const double denom = alpha * s * (inner - c0);
  const double outer = (v_out == 0.0 ? 0.0 : v_out / denom) + t_ar;
  return checked(fourth_root(outer, "outer root"), "object temperature");
}

UncertainValue compute_to_physics(const UncertainValue& v_out, const UncertainValue& alpha,
                                  const UncertainValue& s, const UncertainValue& t_ar, double c0) {
  std::vector<double> out(v_out.size());
  if (alpha.size() != out.size() || s.size() != out.size() || t_ar.size() != out.size()) {
    throw ConfigError("compute_to_physics: ensembles of different sizes");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    try {
      out[i] = compute_to_physics(v_out[i], alpha[i], s[i], t_ar[i], c0);
    } catch (const DomainError& e) {
      throw DomainError(e.message(), i, e.pixel());
    }
  }
  return UncertainValue(std::move(out));
}

double stefan_boltzmann_power(double eps, double t) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("emissivity must lie in [0, 1]");
  if (!(t >= 0.0)) throw DomainError("temperature must be non-negative kelvin");
  return eps * kStefanBoltzmann * pow4(t);
}

double thermocouple_voltage(double s_xy, double t_hot, double t_cold) {
  return checked(s_xy * (t_hot - t_cold), "thermocouple voltage");
}

double frame_vdd(const RawFrame& frame, const CalibrationParameters& p) {
  const int resolution_ram = (frame.aux.control_word >> 10) & 0x3;
  const double res_corr = std::ldexp(1.0, p.resolution_ee) / std::ldexp(1.0, resolution_ram);
  return checked((res_corr * frame.aux.vdd_raw - p.vdd25) / p.k_vdd + 3.3, "supply voltage");
}

double frame_ta(const RawFrame& frame, const CalibrationParameters& p, double vdd) {
  const double ptat = frame.aux.vptat_raw;
  const double ptat_art = ptat / (ptat * p.alpha_ptat + frame.aux.vbe_raw) * 262144.0;
  const double ta = (ptat_art / (1.0 + p.kv_ptat * (vdd - 3.3)) - p.v_ptat25) / p.kt_ptat + 25.0;
  return checked(ta, "ambient temperature");
}

FrameState prepare_frame(const RawFrame& frame, const CalibrationParameters& p,
                         const SceneConditions& scene) {
  if (frame.pixels.size() != kPixels) throw FormatError("raw frame needs 768 pixels");
  if (frame.aux.subpage != 0 && frame.aux.subpage != 1) throw FormatError("subpage must be 0 or 1");
  if (!(scene.emissivity > 0.0 && scene.emissivity <= 1.0)) {
    throw ConfigError("emissivity must lie in (0, 1]");
  }
  FrameState s;
  s.vdd = frame_vdd(frame, p);
  s.ta = scene.ambient_override_k ? *scene.ambient_override_k - kCelsiusOffset
                                  : frame_ta(frame, p, s.vdd);
  s.tr = scene.reflected_temperature_k ? *scene.reflected_temperature_k - kCelsiusOffset
                                       : s.ta - 8.0;
  s.d_ta = s.ta - 25.0;
  s.d_vdd = s.vdd - 3.3;
  s.ta_tr = compute_tar(scene.emissivity, s.tr + kCelsiusOffset, s.ta + kCelsiusOffset,
                        scene.convention);

  s.alpha_corr_r[0] = 1.0 / (1.0 + p.ks_to[0] * 40.0);
  s.alpha_corr_r[1] = 1.0;
  s.alpha_corr_r[2] = 1.0 + p.ks_to[1] * p.ct[2];
  s.alpha_corr_r[3] = s.alpha_corr_r[2] * (1.0 + p.ks_to[2] * (p.ct[3] - p.ct[2]));

  s.gain = checked(p.gain / frame.aux.gain_raw, "gain compensation");
  s.mode = (frame.aux.control_word & 0x1000) >> 5;

  const double cp_comp = (1.0 + p.kta_cp * s.d_ta) * (1.0 + p.kv_cp * s.d_vdd);
  s.ir_cp[0] = frame.aux.cp_sp0_raw * s.gain - p.cp_offset[0] * cp_comp;
  if (s.mode == p.calibration_mode_ee) {
    s.ir_cp[1] = frame.aux.cp_sp1_raw * s.gain - p.cp_offset[1] * cp_comp;
  } else {
    s.ir_cp[1] = frame.aux.cp_sp1_raw * s.gain - (p.cp_offset[1] + p.il_chess[0]) * cp_comp;
  }
  return s;
}

double convert_pixel(std::size_t px, const RawFrame& frame, const CalibrationParameters& p,
                     const SceneConditions& scene, const FrameState& s) {
  const int n = static_cast<int>(px);
  const int il_pattern = n / 32 - (n / 64) * 2;
  const int chess_pattern = il_pattern ^ (n - (n / 2) * 2);
  const int conversion_pattern =
      ((n + 2) / 4 - (n + 3) / 4 + (n + 1) / 4 - n / 4) * (1 - 2 * il_pattern);
  const int pattern = s.mode == 0 ? il_pattern : chess_pattern;

  double ir = frame.pixels[px] * s.gain;
  ir -= p.offset[px] * (1.0 + p.kta[px] * s.d_ta) * (1.0 + p.kv[px] * s.d_vdd);
  if (s.mode != p.calibration_mode_ee) {
    ir += p.il_chess[2] * (2 * il_pattern - 1) - p.il_chess[1] * conversion_pattern;
  }
  ir -= p.tgc * s.ir_cp[pattern];
  ir /= scene.emissivity;

  const double a = p.alpha[px] * (1.0 + p.ks_ta * s.d_ta);
  double sx = a * a * a * (ir + a * s.ta_tr);
  sx = fourth_root(sx, "Sx", px) * p.ks_to[1];
  double to = fourth_root(ir / (a * (1.0 - p.ks_to[1] * kCelsiusOffset) + sx) + s.ta_tr,
                          "first-pass To", px) -
              kCelsiusOffset;
  int range = 3;
  if (to < p.ct[1]) {
    range = 0;
  } else if (to < p.ct[2]) {
    range = 1;
  } else if (to < p.ct[3]) {
    range = 2;
  }
  to = fourth_root(ir / (a * s.alpha_corr_r[range] * (1.0 + p.ks_to[range] * (to - p.ct[range]))) +
                       s.ta_tr,
                   "To", px) -
       kCelsiusOffset;
  return checked(to, "object temperature", px);
}

TemperatureFrame convert_frame(const RawFrame& frame, const CalibrationParameters& params,
                               const SceneConditions& scene) {
  const FrameState s = prepare_frame(frame, params, scene);
  TemperatureFrame out(kPixels);
  for (std::size_t px = 0; px < kPixels; ++px) out[px] = convert_pixel(px, frame, params, scene, s);
  return out;
}

TemperatureFrameDistribution convert_frame(const RawFrame& frame,
                                           const UncertainCalibrationParameters& params,
                                           const SceneConditions& scene) {
  const std::size_t n = params.k_vdd.size();
  std::vector<double> cols(kPixels * n);
  for (std::size_t i = 0; i < n; ++i) {
    const CalibrationParameters one = sample_parameters(params, i);
    try {
      const FrameState s = prepare_frame(frame, one, scene);
      for (std::size_t px = 0; px < kPixels; ++px) {
        cols[px * n + i] = convert_pixel(px, frame, one, scene, s);
      }
    } catch (const DomainError& e) {
      throw DomainError(e.message(), i, e.pixel());
    }
  }
  TemperatureFrameDistribution out;
  out.reserve(kPixels);
  for (std::size_t px = 0; px < kPixels; ++px) {
    out.emplace_back(std::vector<double>(cols.begin() + static_cast<std::ptrdiff_t>(px * n),
                                         cols.begin() + static_cast<std::ptrdiff_t>((px + 1) * n)));
  }
  return out;
}

RawFrame synthesize_frame(const CalibrationParameters& params,
                          std::span<const double> scene_celsius, const AuxRegisters& aux,
                          const SceneConditions& scene) {
  if (scene_celsius.size() != kPixels) throw ConfigError("scene needs 768 temperatures");
  RawFrame frame;
  frame.aux = aux;
  const FrameState s = prepare_frame(frame, params, scene);
  auto temp_at = [&](std::size_t px, std::int32_t raw) {
    frame.pixels[px] = raw;
    try {
      return convert_pixel(px, frame, params, scene, s);
    } catch (const DomainError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  for (std::size_t px = 0; px < kPixels; ++px) {
    const double target = scene_celsius[px];
    // Output rises with the raw count; bisect for the first raw value at or
    // above the target, then keep whichever neighbour is closer.
    std::int32_t lo = -32768, hi = 32767;
    while (hi - lo > 1) {
      const std::int32_t mid = lo + (hi - lo) / 2;
      if (temp_at(px, mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double t_lo = temp_at(px, lo), t_hi = temp_at(px, hi);
    frame.pixels[px] = std::abs(t_lo - target) <= std::abs(t_hi - target) ? lo : hi;
  }
  return frame;
}

}  // namespace uqsense
