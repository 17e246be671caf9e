#include "uqsense/edges.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "uqsense/errors.hpp"
#include "uqsense/parallel.hpp"

namespace uqsense {

namespace {

constexpr int R = static_cast<int>(kRows);
constexpr int C = static_cast<int>(kCols);

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Symmetric correlation along one axis with nearest-edge replication.
// Centre first, then mirrored pairs from the outermost tap inward; the order
// matters only for exact ties in the later suppression step, and this one
// agrees with scipy.ndimage.
std::vector<double> smooth_axis(const std::vector<double>& in, const std::vector<double>& w,
                                bool along_rows) {
  std::vector<double> out(in.size());
  const int radius = static_cast<int>(w.size()) - 1;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      auto at = [&](int k) {
        return along_rows ? in[clampi(r + k, 0, R - 1) * C + c] : in[r * C + clampi(c + k, 0, C - 1)];
      };
      double acc = at(0) * w[0];
      for (int k = radius; k >= 1; --k) acc += (at(-k) + at(k)) * w[k];
      out[r * C + c] = acc;
    }
  }
  return out;
}

std::vector<double> diff_axis(const std::vector<double>& in, bool along_rows) {
  std::vector<double> out(in.size());
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      out[r * C + c] = along_rows ? in[clampi(r + 1, 0, R - 1) * C + c] - in[clampi(r - 1, 0, R - 1) * C + c]
                                  : in[r * C + clampi(c + 1, 0, C - 1)] - in[r * C + clampi(c - 1, 0, C - 1)];
    }
  }
  return out;
}

// Pairwise summation in numpy's blocking, so kernel weights round the same.
double pairwise_sum(const double* a, std::size_t n) {
  if (n < 8) {
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += a[i];
    return res;
  }
  if (n <= 128) {
    double r[8];
    for (int j = 0; j < 8; ++j) r[j] = a[j];
    std::size_t i = 8;
    for (; i < n - n % 8; i += 8) {
      for (int j = 0; j < 8; ++j) r[j] += a[i + j];
    }
    double res = ((r[0] + r[1]) + (r[2] + r[3])) + ((r[4] + r[5]) + (r[6] + r[7]));
    for (; i < n; ++i) res += a[i];
    return res;
  }
  std::size_t n2 = n / 2;
  n2 -= n2 % 8;
  return pairwise_sum(a, n2) + pairwise_sum(a + n2, n - n2);
}

std::vector<double> gaussian_weights(double sigma, double truncate) {
  const int radius = static_cast<int>(truncate * sigma + 0.5);
  const double coef = -0.5 / (sigma * sigma);
  std::vector<double> phi;
  for (int k = -radius; k <= radius; ++k) phi.push_back(std::exp(coef * static_cast<double>(k * k)));
  const double sum = pairwise_sum(phi.data(), phi.size());
  std::vector<double> w(static_cast<std::size_t>(radius) + 1);
  for (int k = 0; k <= radius; ++k) w[k] = phi[k + radius] / sum;
  return w;
}

}  // namespace

void validate(const CannyConfig& cfg) {
  if (!(cfg.gaussian_sigma > 0.0) || !std::isfinite(cfg.gaussian_sigma)) {
    throw ConfigError("canny: sigma must be positive");
  }
  if (!(cfg.truncate > 0.0)) throw ConfigError("canny: truncate must be positive");
  if (!(cfg.low_frac >= 0.0 && cfg.low_frac <= cfg.high_frac && cfg.high_frac <= 1.0)) {
    throw ConfigError("canny: need 0 <= low_frac <= high_frac <= 1");
  }
}

Gradients canny_gradients(std::span<const double> frame, const CannyConfig& cfg) {
  validate(cfg);
  if (frame.size() != kPixels) throw ConfigError("canny: frame needs 768 values");
  std::vector<double> img(frame.begin(), frame.end());
  for (double v : img) {
    if (!std::isfinite(v)) throw DomainError("canny: frame value is not finite");
  }
  if (cfg.normalize) {
    const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
    const double mn = *lo, range = *hi - *lo;
    for (double& v : img) v = range > 0.0 ? (v - mn) / range : 0.0;
  }
  const auto w = gaussian_weights(cfg.gaussian_sigma, cfg.truncate);
  Gradients g;
  g.smoothed = smooth_axis(smooth_axis(img, w, true), w, false);
  const std::vector<double> sobel_w = {2.0, 1.0};
  g.dx = smooth_axis(diff_axis(g.smoothed, false), sobel_w, true);
  g.dy = smooth_axis(diff_axis(g.smoothed, true), sobel_w, false);
  g.magnitude.resize(kPixels);
  for (std::size_t i = 0; i < kPixels; ++i) g.magnitude[i] = std::hypot(g.dx[i], g.dy[i]);
  return g;
}

EdgeMap canny(std::span<const double> frame, const CannyConfig& cfg) {
  const Gradients g = canny_gradients(frame, cfg);
  const auto& m = g.magnitude;
  EdgeMap out(kPixels, 0);
  const double peak = *std::max_element(m.begin(), m.end());
  if (!(peak > 0.0)) return out;
  const double low = cfg.low_frac * peak, high = cfg.high_frac * peak;
  constexpr double kTan22 = 0.41421356237309504880;

  // 0: not a candidate, 1: weak candidate, 2: strong
  std::vector<std::uint8_t> cls(kPixels, 0);
  for (int r = 1; r < R - 1; ++r) {
    for (int c = 1; c < C - 1; ++c) {
      const int i = r * C + c;
      const double v = m[i];
      if (!(v > low)) continue;
      const double ax = std::abs(g.dx[i]), ay = std::abs(g.dy[i]);
      const double tg22x = ax * kTan22;
      bool keep;
      if (ay < tg22x) {
        keep = v > m[i - 1] && v >= m[i + 1];
      } else if (ay > tg22x + 2.0 * ax) {
        keep = v > m[i - C] && v >= m[i + C];
      } else {
        const int s = (g.dx[i] < 0) != (g.dy[i] < 0) ? -1 : 1;
        keep = v > m[i - C - s] && v > m[i + C + s];
      }
      if (keep) cls[i] = v > high ? 2 : 1;
    }
  }
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(kPixels); ++i) {
    if (cls[i] == 2) stack.push_back(i);
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (out[i]) continue;
    out[i] = 1;
    const int r = i / C, c = i % C;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
        const int j = rr * C + cc;
        if (cls[j] != 0 && !out[j]) stack.push_back(j);
      }
    }
  }
  return out;
}

std::vector<double> sample_frame(const TemperatureFrameDistribution& dist, std::size_t i) {
  if (dist.size() != kPixels) throw ConfigError("ensemble frame needs 768 pixels");
  std::vector<double> f(kPixels);
  for (std::size_t p = 0; p < kPixels; ++p) {
    if (i >= dist[p].size()) throw ConfigError("sample index beyond ensemble size");
    f[p] = dist[p][i];
  }
  return f;
}

std::vector<EdgeMap> sample_edge_maps(const TemperatureFrameDistribution& dist,
                                      const CannyConfig& cfg, std::size_t m, std::size_t workers) {
  validate(cfg);
  if (m < 1) throw ConfigError("edge probability needs at least one sample-frame");
  if (dist.size() != kPixels) throw ConfigError("ensemble frame needs 768 pixels");
  for (const auto& d : dist) {
    if (d.size() < m) throw ConfigError("m exceeds the ensemble size");
  }
  std::vector<EdgeMap> maps(m);
  parallel_for(m, resolve_workers(workers),
               [&](std::size_t i) { maps[i] = canny(sample_frame(dist, i), cfg); });
  return maps;
}

EdgeProbabilityMap edge_probability(const TemperatureFrameDistribution& dist,
                                    const CannyConfig& cfg, std::size_t m, std::size_t workers) {
  const auto maps = sample_edge_maps(dist, cfg, m, workers);
  return edge_probability(maps);
}

EdgeProbabilityMap edge_probability(std::span<const EdgeMap> per_sample) {
  if (per_sample.empty()) throw ConfigError("edge probability needs at least one sample-frame");
  std::vector<std::size_t> counts(kPixels, 0);
  for (const auto& e : per_sample) {
    if (e.size() != kPixels) throw ConfigError("edge map shape mismatch");
    for (std::size_t p = 0; p < kPixels; ++p) counts[p] += e[p];
  }
  EdgeProbabilityMap prob(kPixels);
  const double m = static_cast<double>(per_sample.size());
  for (std::size_t p = 0; p < kPixels; ++p) prob[p] = static_cast<double>(counts[p]) / m;
  return prob;
}

EdgeMap filter_edges(std::span<const double> prob, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (prob.size() != kPixels) throw ConfigError("probability map needs 768 values");
  EdgeMap out(kPixels, 0);
  for (std::size_t p = 0; p < kPixels; ++p) out[p] = prob[p] > threshold;
  return out;
}

std::size_t count_edges(const EdgeMap& map) {
  return static_cast<std::size_t>(std::count(map.begin(), map.end(), std::uint8_t{1}));
}

FalsePositiveStats false_positive_stats(std::span<const EdgeMap> per_sample,
                                        const EdgeMap& reference) {
  if (reference.size() != kPixels) throw ConfigError("reference edge map needs 768 pixels");
  if (per_sample.empty()) throw ConfigError("no sample edge maps");
  FalsePositiveStats s;
  for (const auto& e : per_sample) {
    if (e.size() != kPixels) throw ConfigError("edge map shape mismatch");
    std::size_t fp = 0;
    for (std::size_t p = 0; p < kPixels; ++p) fp += e[p] && !reference[p];
    s.counts.push_back(fp);
  }
  const double n = static_cast<double>(s.counts.size());
  double sum = 0.0;
  for (auto c : s.counts) sum += static_cast<double>(c);
  s.mean = sum / n;
  double ss = 0.0;
  for (auto c : s.counts) ss += (static_cast<double>(c) - s.mean) * (static_cast<double>(c) - s.mean);
  s.std = std::sqrt(ss / n);
  s.max = *std::max_element(s.counts.begin(), s.counts.end());
  s.fraction_of_frame = s.mean / static_cast<double>(kPixels);
  return s;
}

void write_edge_pgm(std::ostream& out, const EdgeMap& map) {
  if (map.size() != kPixels) throw ConfigError("edge map needs 768 pixels");
  out << "P5\n" << C << ' ' << R << "\n255\n";
  for (auto v : map) out.put(static_cast<char>(v ? 255 : 0));
}

void write_probability_pgm16(std::ostream& out, std::span<const double> prob) {
  if (prob.size() != kPixels) throw ConfigError("probability map needs 768 values");
  out << "P5\n" << C << ' ' << R << "\n65535\n";
  for (double p : prob) {
    const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0, 1.0) * 65535.0));
    out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xFF));
  }
}

void write_grid_csv(std::ostream& out, std::span<const double> values, int precision) {
  if (values.size() != kPixels) throw ConfigError("grid needs 768 values");
  std::ostringstream s;
  s << std::setprecision(precision);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      if (c) s << ',';
      s << values[r * C + c];
    }
    s << '\n';
  }
  out << s.str();
}

std::string edge_map_json(const EdgeMap& map) {
  if (map.size() != kPixels) throw ConfigError("edge map needs 768 pixels");
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < R; ++r) {
    std::vector<int> row(C);
    for (int c = 0; c < C; ++c) row[c] = map[r * C + c];
    rows.push_back(row);
  }
  nlohmann::json j = {{"rows", R}, {"cols", C}, {"edge_count", count_edges(map)}, {"edges", rows}};
  return j.dump() + "\n";
}

}  // namespace uqsense
