#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "uqsense/conversion.hpp"
#include "uqsense/eeprom.hpp"
#include "uqsense/ensemble.hpp"
#include "uqsense/extraction.hpp"

namespace uqsense {

enum class McMode { FullMc, FastPath };

struct McConfig {
  std::size_t iterations = 500000;
  std::uint64_t master_seed = 0;
  std::size_t workers = 0;  // 0: hardware concurrency (capped by UQSENSE_THREADS)
  McMode mode = McMode::FullMc;
  std::size_t fastpath_k = 256;
  Sampling fastpath_sampling = Sampling::Sobol;
  NoiseOptions noise;
  ExtractOptions extract;
  bool skip_invalid_samples = false;
  /// Pixels to convert, ascending or not; empty means all 768.
  std::vector<std::size_t> pixels;
  /// Iterations per work item. Affects scheduling only, never results.
  std::size_t block = 256;

  std::size_t sample_count() const { return mode == McMode::FullMc ? iterations : fastpath_k; }
};

struct McResult {
  std::vector<std::size_t> pixels;          // pixel index of each distribution
  TemperatureFrameDistribution dist;        // one ensemble per entry of `pixels`
  std::size_t requested = 0;                // iterations attempted
  std::vector<std::size_t> skipped;         // iterations dropped as invalid
};

/// Monte Carlo propagation of calibration-data representation noise
/// through extraction and conversion. Raw datum d is driven by noise
/// stream d under `master_seed`, so the result depends only on the
/// configuration, never on worker count or block size.
McResult run_mc(const CalibrationMemory& mem, const RawFrame& frame, const SceneConditions& scene,
                const McConfig& cfg);

/// Draws `m` samples of each tracked pixel for one trial of the cutoff
/// search; `seed` is the trial seed.
using TrialSampler =
    std::function<std::vector<std::vector<double>>(std::size_t m, std::uint64_t seed)>;

struct EqMcOptions {
  double target_w1 = 0.0;  // degC
  double p = 0.9;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t min_iterations = 2;
  /// Largest m tried before giving up; 0 means a quarter of the ground
  /// truth size.
  std::size_t max_iterations = 0;
};

struct EqMcReport {
  double target_w1 = 0.0;
  double p = 0.0;
  std::size_t cutoff_iterations = 0;
  std::size_t trials = 0;
  double pass_fraction = 0.0;  // at the cutoff
};

/// Smallest m for which at least a fraction p of `trials` independent
/// m-sample runs have W1 to the ground truth <= target (the worst pixel
/// counts when several are tracked). Doubling from min_iterations, then
/// bisection. Trial t reuses the same seed for every m tried.
EqMcReport eqmc_cutoff(std::span<const W1Reference> ground_truth, const TrialSampler& sampler,
                       const EqMcOptions& options);

/// Sampler that runs pseudorandom (or stratified) Monte Carlo of the given
/// problem with a fresh master seed per trial.
TrialSampler mc_sampler(const CalibrationMemory& mem, const RawFrame& frame,
                        const SceneConditions& scene, McConfig base);

struct FastPathComparison {
  std::vector<double> w1;   // per tracked pixel
  double target_w1 = 0.0;   // worst-pixel W1 of the fast path
  EqMcReport eqmc;          // pseudorandom cutoff for that target
  double iteration_ratio = 0.0;
};

/// Runs FastPath(k) for the pixels of `base`, measures W1 to the ground
/// truth, then asks how many pseudorandom iterations reach the same W1.
FastPathComparison fastpath_compare(const CalibrationMemory& mem, const RawFrame& frame,
                                    const SceneConditions& scene, const McConfig& base,
                                    std::size_t k, std::span<const W1Reference> ground_truth,
                                    const EqMcOptions& eqmc);

struct PixelStats {
  std::size_t pixel = 0;
  double reference = 0.0;  // conventional conversion
  SummaryStats summary;
  ErrorStats errors;
};

/// Summary and error metrics of every distribution against the
/// conventional output of the same pixel.
std::vector<PixelStats> pixel_stats(const McResult& result, const TemperatureFrame& conventional);

}  // namespace uqsense
