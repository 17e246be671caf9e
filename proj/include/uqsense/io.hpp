#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "uqsense/conversion.hpp"
#include "uqsense/extraction.hpp"
#include "uqsense/montecarlo.hpp"

namespace uqsense {

// Raw frame file:
//   {"pixels": [768 ints, row-major], "aux": {"vdd_raw": .., "vptat_raw": ..,
//    "vbe_raw": .., "gain_raw": .., "cp_sp0_raw": .., "cp_sp1_raw": ..,
//    "subpage": 0|1, "control_word": int or "0x1901"}, "meta": {...}}
// Datasets in other layouts plug in by converting to this schema.
std::string frame_to_json(const RawFrame& frame);
RawFrame frame_from_json(const std::string& text);
RawFrame load_frame(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Parameters in calibration-table order. Scalars are numbers; pixel
/// vectors are arrays of 768.
std::string parameters_to_json(const CalibrationParameters& p);
/// Ensemble-mode parameters: each scalar gets {conventional, mean, std,
/// min, max, ci95}; pixel vectors get per-pixel mean and std arrays.
std::string parameters_to_json(const UncertainCalibrationParameters& p,
                               const CalibrationParameters& conventional);

/// 24 lines of 32 comma-separated numbers, row-major.
void write_frame_csv(std::ostream& out, const std::vector<double>& frame);
std::vector<double> read_frame_csv(std::istream& in);
std::vector<double> load_frame_csv(const std::string& path);

/// One row per tracked pixel:
/// pixel,row,col,reference,mean,std,min,max,q025,q975,ci95,mae,max_ae,mre,max_re
/// (mre/max_re empty when the reference is zero).
void write_stats_csv(std::ostream& out, const std::vector<PixelStats>& stats);
std::vector<PixelStats> read_stats_csv(std::istream& in);
std::vector<PixelStats> load_stats_csv(const std::string& path);

/// The first `m` samples of every record of an ensemble file (all of them
/// when m == 0), without loading the rest.
std::vector<UncertainValue> read_ensemble_prefix(const std::string& path, std::size_t m);

/// Aggregates across pixel distributions.
struct MetricAggregate {
  std::string metric;
  double min = 0.0, mean = 0.0, max = 0.0;
  std::size_t count = 0;
};
std::vector<MetricAggregate> aggregate_stats(const std::vector<PixelStats>& stats);

}  // namespace uqsense
