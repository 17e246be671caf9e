#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "uqsense/eeprom.hpp"
#include "uqsense/ensemble.hpp"

namespace uqsense {

/// Every extracted calibration parameter. T is double (conventional mode,
/// or one Monte Carlo iteration) or UncertainValue (ensemble mode). Scale
/// exponents, the resolution and the calibration mode are exact integers
/// in every mode.
template <class T>
struct CalibrationParametersT {
  T k_vdd{}, vdd25{}, kv_ptat{}, kt_ptat{}, v_ptat25{}, alpha_ptat{};
  T gain{}, tgc{}, kv_cp{}, kta_cp{};
  int resolution_ee = 0;
  int calibration_mode_ee = 0;
  T ks_ta{};
  std::array<T, 5> ks_to{};
  std::array<T, 4> ct{};
  int s_alpha = 0, s_kta = 0, s_kv = 0;
  T alpha_cp0{}, alpha_cp1{};
  std::array<T, 2> cp_offset{};
  std::array<T, 3> il_chess{};
  std::vector<std::size_t> broken_pixels, outlier_pixels;
  std::vector<T> alpha, offset, kta, kv;
};

using CalibrationParameters = CalibrationParametersT<double>;
using UncertainCalibrationParameters = CalibrationParametersT<UncertainValue>;

struct ExtractOptions {
  /// Round alpha, Kta and Kv through the vendor driver's integer storage
  /// and read them back. Off by default: the vectors stay real-valued.
  bool emulate_driver_rediscretization = false;
};

/// Representation-noise model: each uncertain raw datum x becomes
/// x + amplitude * (u - 1/2), u ~ U[0,1). The datum is the field value
/// after the logical shift that aligns it and after sign restoration, and
/// before any scaling or combination with other parameters.
struct NoiseOptions {
  double amplitude = 1.0;
  /// When non-empty, only these datum numbers receive noise.
  std::vector<std::size_t> only_data;
};

/// Extraction routines, written once over a vector of realized raw data
/// (one value per datum, see `datum_offset`). Conventional mode feeds the
/// exact integers; a Monte Carlo iteration feeds integers plus noise.
class Extractor {
 public:
  explicit Extractor(const CalibrationMemory& mem, ExtractOptions options = {});

  const std::vector<double>& exact_data() const { return exact_; }
  const std::vector<bool>& uncertain_mask() const { return uncertain_; }
  const ExtractOptions& options() const { return options_; }

  /// Data numbers that extraction of `pixels` reads (all data if empty).
  std::vector<std::size_t> data_needed(std::span<const std::size_t> pixels) const;

  /// Fills `out` from `data`. Only the listed pixels of the four vectors
  /// are computed (all if empty); vectors are always sized 768.
  void evaluate(std::span<const double> data, CalibrationParameters& out,
                std::span<const std::size_t> pixels = {}) const;

  CalibrationParameters conventional() const;

 private:
  ExtractOptions options_;
  std::vector<double> exact_;
  std::vector<bool> uncertain_;
  int s_alpha_ = 0, s_kta_ = 0, s_kv_ = 0;
  int resolution_ee_ = 0, calibration_mode_ee_ = 0;
  int alpha_scale_ = 0, acc_row_scale_ = 0, acc_col_scale_ = 0, acc_rem_scale_ = 0;
  int occ_row_scale_ = 0, occ_col_scale_ = 0, occ_rem_scale_ = 0;
  int kta_scale1_ = 0, kta_scale2_ = 0, kv_scale_ = 0, ks_to_scale_ = 0, temp_step_ = 0;
  std::vector<std::size_t> broken_, outlier_;
};

CalibrationParameters extract_conventional(const CalibrationMemory& mem,
                                           const ExtractOptions& options = {});

/// Ensemble-mode extraction. Allocates one noise stream per raw datum from
/// `ctx`, in datum order, and realizes every datum once per sample.
UncertainCalibrationParameters extract_uncertain(const CalibrationMemory& mem,
                                                 EnsembleContext& ctx,
                                                 const NoiseOptions& noise = {},
                                                 const ExtractOptions& options = {});

/// Sample i of an ensemble-mode parameter set as a plain parameter set.
CalibrationParameters sample_parameters(const UncertainCalibrationParameters& p, std::size_t i);

/// Realizes raw data for iterations of a Monte Carlo run: unit draws of
/// stream (first_stream + d) at iteration i drive datum d.
class NoiseRealizer {
 public:
  NoiseRealizer(const Extractor& extractor, std::uint64_t seed, std::uint64_t first_stream,
                const NoiseOptions& noise, std::span<const std::size_t> data_needed,
                Sampling sampling = Sampling::Pseudorandom, std::size_t stratified_n = 0);

  /// Writes data for iterations [first, first + count) into rows of
  /// `block` (count x datum_count, row-major); data not needed keep their
  /// exact value.
  void realize(std::size_t first, std::size_t count, std::vector<double>& block) const;

 private:
  const Extractor& extractor_;
  std::uint64_t seed_;
  std::uint64_t first_stream_;
  double amplitude_;
  std::vector<std::size_t> noisy_;  // data that get noise
  Sampling sampling_;
  std::size_t stratified_n_;
  std::vector<std::vector<double>> stratified_units_;  // per noisy datum
};

}  // namespace uqsense
