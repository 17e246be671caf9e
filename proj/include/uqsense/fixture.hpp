#pragma once

#include <vector>

#include "uqsense/conversion.hpp"
#include "uqsense/eeprom.hpp"

namespace uqsense {

/// Calibration image whose extraction reproduces the published scalar
/// parameters of sensor 0x1f15cb2d0189. The per-pixel decomposition is
/// synthetic (sensitivity falls toward the corners) but is chosen so the
/// driver's storage exponents come out as published (11, 13, 7).
CalibrationImage reference_sensor_image();
CalibrationMemory reference_sensor_memory();

/// Registers of a typical subpage-0 readout: Vdd = 3.3 V, Ta close to
/// 25 degC, unity gain ratio, chess pattern at 18-bit resolution.
AuxRegisters typical_aux();

std::vector<double> flat_scene(double celsius);

/// Hot object on the right (columns >= step_col) over a cooler
/// background. A gentle vertical ramp on the hot side makes the gradient
/// maximum unique along the step.
std::vector<double> step_scene(double cold_c, double hot_c, std::size_t step_col,
                               double ramp_per_row = 0.0);

/// Low-contrast step for edge tests: `cold_c` left of `mid_col`, `hot_c`
/// right of it, and the midpoint temperature in column `mid_col` itself so
/// the gradient peak (the true edge) sits on that column in every row.
std::vector<double> graded_step_scene(double cold_c = 25.0, double hot_c = 27.0,
                                      std::size_t mid_col = 15);

}  // namespace uqsense
