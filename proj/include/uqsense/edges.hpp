#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uqsense/conversion.hpp"

namespace uqsense {

/// 24 rows x 32 columns, row-major; 1 marks an edge pixel.
using EdgeMap = std::vector<std::uint8_t>;
/// Per-pixel edge probability in [0, 1], same layout.
using EdgeProbabilityMap = std::vector<double>;

struct CannyConfig {
  double gaussian_sigma = 1.0;
  double truncate = 4.0;  // kernel radius = int(truncate * sigma + 0.5)
  double low_frac = 0.10;
  double high_frac = 0.20;
  bool normalize = true;  // per-frame min-max to [0, 1] before smoothing
};

void validate(const CannyConfig& cfg);

/// Gaussian smoothing (nearest-edge replication) then Sobel gradients;
/// exposed for tests and diagnostics.
struct Gradients {
  std::vector<double> smoothed, dx, dy, magnitude;
};
Gradients canny_gradients(std::span<const double> frame, const CannyConfig& cfg);

/// Canny detector: smoothing, Sobel, non-maximum suppression along the
/// gradient direction quantized to 0/45/90/135 degrees (a pixel beats the
/// earlier neighbour strictly and the later one or equal), hysteresis with
/// thresholds as fractions of the frame's largest gradient magnitude and
/// 8-connectivity. The outermost ring of pixels is never marked.
EdgeMap canny(std::span<const double> frame, const CannyConfig& cfg = {});

/// Fraction of the first m sample-frames (frame i = sample i of every
/// pixel) in which each pixel is an edge.
EdgeProbabilityMap edge_probability(const TemperatureFrameDistribution& dist,
                                    const CannyConfig& cfg, std::size_t m,
                                    std::size_t workers = 0);

/// Same, from per-sample maps already computed.
EdgeProbabilityMap edge_probability(std::span<const EdgeMap> per_sample);

/// Sample-frame i of an ensemble frame.
std::vector<double> sample_frame(const TemperatureFrameDistribution& dist, std::size_t i);

/// Pixels whose probability is strictly above `threshold`.
EdgeMap filter_edges(std::span<const double> prob, double threshold);

struct FalsePositiveStats {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t max = 0;
  double fraction_of_frame = 0.0;  // mean / 768
  std::vector<std::size_t> counts;
};

FalsePositiveStats false_positive_stats(std::span<const EdgeMap> per_sample,
                                        const EdgeMap& reference);

/// Per-sample Canny maps of the first m sample-frames.
std::vector<EdgeMap> sample_edge_maps(const TemperatureFrameDistribution& dist,
                                      const CannyConfig& cfg, std::size_t m,
                                      std::size_t workers = 0);

std::size_t count_edges(const EdgeMap& map);

void write_edge_pgm(std::ostream& out, const EdgeMap& map);            // P5, 0/255
void write_probability_pgm16(std::ostream& out, std::span<const double> prob);  // P5, 0..65535
void write_grid_csv(std::ostream& out, std::span<const double> values, int precision = 17);
std::string edge_map_json(const EdgeMap& map);

}  // namespace uqsense
