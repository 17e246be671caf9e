#include "uqsense/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "uqsense/errors.hpp"
#include "uqsense/parallel.hpp"
#include "uqsense/random.hpp"

namespace uqsense {

namespace {

std::vector<std::size_t> checked_pixels(const std::vector<std::size_t>& requested) {
  if (requested.empty()) {
    std::vector<std::size_t> all(kPixels);
    for (std::size_t i = 0; i < kPixels; ++i) all[i] = i;
    return all;
  }
  std::vector<bool> seen(kPixels, false);
  for (std::size_t p : requested) {
    if (p >= kPixels) throw ConfigError("pixel index " + std::to_string(p) + " out of range");
    if (seen[p]) throw ConfigError("pixel " + std::to_string(p) + " listed twice");
    seen[p] = true;
  }
  return requested;
}

}  // namespace

McResult run_mc(const CalibrationMemory& mem, const RawFrame& frame, const SceneConditions& scene,
                const McConfig& cfg) {
  const std::size_t n = cfg.sample_count();
  if (cfg.mode == McMode::FullMc && n < 2) throw ConfigError("iterations must be at least 2");
  if (cfg.mode == McMode::FastPath && n < 2) throw ConfigError("fast-path k must be at least 2");
  if (cfg.block == 0) throw ConfigError("block size must be positive");

  McResult res;
  res.pixels = checked_pixels(cfg.pixels);
  res.requested = n;
  const std::size_t P = res.pixels.size();
  // Conversion only needs the subset when it is a strict one.
  std::vector<std::size_t> subset;
  if (!cfg.pixels.empty()) subset = res.pixels;

  const Extractor ex(mem, cfg.extract);
  const auto needed = ex.data_needed(subset);
  const Sampling sampling =
      cfg.mode == McMode::FullMc ? Sampling::Pseudorandom : cfg.fastpath_sampling;
  const NoiseRealizer realizer(ex, cfg.master_seed, 0, cfg.noise, needed, sampling, n);

  std::vector<double> out(P * n);
  std::vector<char> invalid(n, 0);
  const std::size_t blocks = (n + cfg.block - 1) / cfg.block;
  const std::size_t D = datum_count();

  parallel_for(blocks, resolve_workers(cfg.workers), [&](std::size_t b) {
    const std::size_t first = b * cfg.block;
    const std::size_t count = std::min(cfg.block, n - first);
    std::vector<double> data;
    realizer.realize(first, count, data);
    CalibrationParameters params;
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t i = first + j;
      try {
        ex.evaluate(std::span<const double>(data.data() + j * D, D), params, subset);
        const FrameState s = prepare_frame(frame, params, scene);
        for (std::size_t k = 0; k < P; ++k) {
          out[k * n + i] = convert_pixel(res.pixels[k], frame, params, scene, s);
        }
      } catch (const DomainError& e) {
        if (!cfg.skip_invalid_samples) throw DomainError(e.message(), i, e.pixel());
        invalid[i] = 1;
      }
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (invalid[i]) res.skipped.push_back(i);
  }
  if (res.skipped.size() == n) throw DomainError("every Monte Carlo iteration was invalid");
  res.dist.reserve(P);
  for (std::size_t k = 0; k < P; ++k) {
    std::vector<double> v;
    v.reserve(n - res.skipped.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!invalid[i]) v.push_back(out[k * n + i]);
    }
    res.dist.emplace_back(std::move(v));
  }
  return res;
}

TrialSampler mc_sampler(const CalibrationMemory& mem, const RawFrame& frame,
                        const SceneConditions& scene, McConfig base) {
  return [&mem, &frame, scene, base](std::size_t m, std::uint64_t seed) {
    McConfig cfg = base;
    cfg.iterations = m;
    cfg.fastpath_k = m;
    cfg.master_seed = seed;
    const McResult r = run_mc(mem, frame, scene, cfg);
    std::vector<std::vector<double>> samples;
    samples.reserve(r.dist.size());
    for (const auto& d : r.dist) samples.push_back(d.sorted());
    return samples;
  };
}

EqMcReport eqmc_cutoff(std::span<const W1Reference> gt, const TrialSampler& sampler,
                       const EqMcOptions& o) {
  if (gt.empty()) throw ConfigError("eqmc: empty ground truth");
  if (!(o.p > 0.0 && o.p < 1.0)) throw ConfigError("eqmc: confidence p must lie in (0, 1)");
  if (o.trials < 1) throw ConfigError("eqmc: at least one trial");
  if (std::isnan(o.target_w1) || o.target_w1 < 0.0) throw ConfigError("eqmc: bad target W1");
  if (o.min_iterations < 1) throw ConfigError("eqmc: min_iterations must be positive");
  std::size_t n_gt = gt[0].size();
  for (const auto& g : gt) n_gt = std::min(n_gt, g.size());
  const std::size_t max_m =
      o.max_iterations ? o.max_iterations : std::max(o.min_iterations, n_gt / 4);

  EqMcReport rep;
  rep.target_w1 = o.target_w1;
  rep.p = o.p;
  rep.trials = o.trials;

  auto fraction = [&](std::size_t m) {
    std::size_t pass = 0;
    for (std::size_t t = 0; t < o.trials; ++t) {
      const auto samples = sampler(m, mix_seed(o.seed, t));
      if (samples.size() != gt.size()) throw ConfigError("eqmc: sampler pixel count mismatch");
      double worst = 0.0;
      for (std::size_t j = 0; j < gt.size(); ++j) {
        worst = std::max(worst, gt[j].distance_sorted(samples[j]));
      }
      pass += worst <= o.target_w1;
    }
    return static_cast<double>(pass) / static_cast<double>(o.trials);
  };

  std::size_t m = o.min_iterations;
  if (std::isinf(o.target_w1)) {
    rep.cutoff_iterations = m;
    rep.pass_fraction = 1.0;
    return rep;
  }
  double f = fraction(m);
  if (f >= o.p) {
    rep.cutoff_iterations = m;
    rep.pass_fraction = f;
    return rep;
  }
  std::size_t lo = m, hi = 0;
  double f_hi = 0.0;
  while (hi == 0) {
    const std::size_t next = std::min(2 * m, max_m);
    if (next <= m) {
      throw UnreachableTarget("eqmc: target W1 " + std::to_string(o.target_w1) +
                              " not reached within " + std::to_string(max_m) + " iterations");
    }
    f = fraction(next);
    if (f >= o.p) {
      hi = next;
      f_hi = f;
    } else {
      lo = m = next;
    }
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    f = fraction(mid);
    if (f >= o.p) {
      hi = mid;
      f_hi = f;
    } else {
      lo = mid;
    }
  }
  rep.cutoff_iterations = hi;
  rep.pass_fraction = f_hi;
  return rep;
}

FastPathComparison fastpath_compare(const CalibrationMemory& mem, const RawFrame& frame,
                                    const SceneConditions& scene, const McConfig& base,
                                    std::size_t k, std::span<const W1Reference> gt,
                                    const EqMcOptions& eqmc) {
  McConfig fast = base;
  fast.mode = McMode::FastPath;
  fast.fastpath_k = k;
  const McResult r = run_mc(mem, frame, scene, fast);
  if (r.dist.size() != gt.size()) throw ConfigError("fastpath: ground truth pixel count mismatch");
  FastPathComparison cmp;
  for (std::size_t j = 0; j < gt.size(); ++j) {
    cmp.w1.push_back(gt[j].distance_sorted(r.dist[j].sorted()));
    cmp.target_w1 = std::max(cmp.target_w1, cmp.w1.back());
  }
  McConfig pseudo = base;
  pseudo.mode = McMode::FullMc;
  EqMcOptions o = eqmc;
  o.target_w1 = cmp.target_w1;
  cmp.eqmc = eqmc_cutoff(gt, mc_sampler(mem, frame, scene, pseudo), o);
  cmp.iteration_ratio =
      static_cast<double>(cmp.eqmc.cutoff_iterations) / static_cast<double>(k);
  return cmp;
}

std::vector<PixelStats> pixel_stats(const McResult& result, const TemperatureFrame& conventional) {
  if (conventional.size() != kPixels) throw ConfigError("conventional frame needs 768 values");
  std::vector<PixelStats> out;
  out.reserve(result.pixels.size());
  for (std::size_t k = 0; k < result.pixels.size(); ++k) {
    PixelStats s;
    s.pixel = result.pixels[k];
    s.reference = conventional[s.pixel];
    s.summary = summarize(result.dist[k]);
    s.errors = error_stats(result.dist[k], s.reference, s.reference != 0.0);
    out.push_back(s);
  }
  return out;
}

}  // namespace uqsense
