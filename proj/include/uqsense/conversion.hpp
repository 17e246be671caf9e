#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uqsense/ensemble.hpp"
#include "uqsense/extraction.hpp"

namespace uqsense {

inline constexpr double kCelsiusOffset = 273.15;
inline constexpr double kStefanBoltzmann = 5.670374419e-8;  // W m^-2 K^-4

/// Sensor RAM registers read alongside a subpage.
struct AuxRegisters {
  std::int32_t vdd_raw = 0;
  std::int32_t vptat_raw = 0;   // PTAT
  std::int32_t vbe_raw = 0;     // V_BE
  std::int32_t gain_raw = 0;
  std::int32_t cp_sp0_raw = 0;  // compensation pixel, subpage 0
  std::int32_t cp_sp1_raw = 0;  // compensation pixel, subpage 1
  int subpage = 0;
  std::uint16_t control_word = 0x1901;  // chess pattern, 18-bit resolution
};

struct RawFrame {
  std::vector<std::int32_t> pixels = std::vector<std::int32_t>(kPixels, 0);
  AuxRegisters aux;
  std::string meta_json = "{}";  // free-form: target temperature, timestamp, ...
};

using TemperatureFrame = std::vector<double>;                     // degC, index row*32+col
using TemperatureFrameDistribution = std::vector<UncertainValue>;  // degC

enum class TarConvention {
  Datasheet,     // Tr^4 - (Tr^4 - Ta^4)/eps
  AsPrinted,  // -(1 - eps) Tr^4/eps - Ta^4/eps
};

struct SceneConditions {
  double emissivity = 0.95;
  /// Reflected temperature in kelvin. Default: ambient minus 8 K, the
  /// vendor driver's open-air shift.
  std::optional<double> reflected_temperature_k;
  /// Replaces the ambient temperature derived from the PTAT registers.
  std::optional<double> ambient_override_k;
  TarConvention convention = TarConvention::Datasheet;
};

/// Combined ambient/reflected radiation term, in K^4.
double compute_tar(double emissivity, double t_r_kelvin, double t_a_kelvin,
                   TarConvention convention = TarConvention::Datasheet);

/// Object temperature in kelvin from the thermopile model
///   T_o = ( V / (alpha S (( V/alpha + T_ar )^(1/4) - c0)) + T_ar )^(1/4).
double compute_to_physics(double v_out, double alpha, double seebeck_slope, double t_ar,
                          double c0 = kCelsiusOffset);
UncertainValue compute_to_physics(const UncertainValue& v_out, const UncertainValue& alpha,
                                  const UncertainValue& seebeck_slope,
                                  const UncertainValue& t_ar, double c0 = kCelsiusOffset);

double stefan_boltzmann_power(double emissivity, double t_kelvin);
double thermocouple_voltage(double seebeck_xy, double t_hot, double t_cold);

/// Frame-level quantities shared by every pixel of one conversion.
struct FrameState {
  double vdd = 0, ta = 0, tr = 0, ta_tr = 0, gain = 0;
  double d_ta = 0, d_vdd = 0;
  double ir_cp[2] = {0, 0};
  double alpha_corr_r[4] = {0, 0, 0, 0};
  int mode = 0;  // 0x80 chess, 0 interleaved
};

FrameState prepare_frame(const RawFrame& frame, const CalibrationParameters& params,
                         const SceneConditions& scene);

/// Object temperature of one pixel in degC. Every pixel is converted using
/// the compensation-pixel reading of its own readout pattern.
double convert_pixel(std::size_t pixel, const RawFrame& frame, const CalibrationParameters& params,
                     const SceneConditions& scene, const FrameState& state);

TemperatureFrame convert_frame(const RawFrame& frame, const CalibrationParameters& params,
                               const SceneConditions& scene = {});

/// Ensemble mode: sample i of every output pixel is the conversion under
/// sample i of every parameter. Domain errors name pixel and sample.
TemperatureFrameDistribution convert_frame(const RawFrame& frame,
                                           const UncertainCalibrationParameters& params,
                                           const SceneConditions& scene = {});

/// Ambient and supply of a frame, exposed for fixtures and reports.
double frame_vdd(const RawFrame& frame, const CalibrationParameters& params);
double frame_ta(const RawFrame& frame, const CalibrationParameters& params, double vdd);

/// Raw frame whose conventional conversion is as close as the integer
/// pixel grid allows to `scene_celsius`.
RawFrame synthesize_frame(const CalibrationParameters& params,
                          std::span<const double> scene_celsius, const AuxRegisters& aux,
                          const SceneConditions& scene = {});

}  // namespace uqsense
