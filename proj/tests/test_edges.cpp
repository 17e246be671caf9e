#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "uqsense/edges.hpp"
#include "uqsense/errors.hpp"
#include "uqsense/extraction.hpp"
#include "uqsense/fixture.hpp"
#include "uqsense/montecarlo.hpp"

using namespace uqsense;

namespace {

std::vector<double> image(const char* name) {
  std::vector<double> v(kPixels);
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t c = 0; c < kCols; ++c) {
      double x = 0.0;
      const std::string n = name;
      if (n == "step") x = c >= 16 ? 100.0 : 20.0;
      if (n == "step_ramp") x = c >= 16 ? 70.0 + 0.2 * static_cast<double>(r) : 25.0;
      if (n == "disk") {
        const long dr = static_cast<long>(r) - 12, dc = static_cast<long>(c) - 16;
        x = dr * dr + dc * dc < 49 ? 90.0 : 30.0;
      }
      if (n == "hash") x = static_cast<double>((r * 37 + c * 101) % 17) + (c >= 20 ? 40.0 : 0.0);
      if (n == "flat") x = 33.0;
      v[r * kCols + c] = x;
    }
  }
  return v;
}

std::vector<std::size_t> edge_indices(const EdgeMap& e) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> column_line(std::size_t col) {
  std::vector<std::size_t> out;
  for (std::size_t r = 1; r + 1 < kRows; ++r) out.push_back(r * kCols + col);
  return out;
}

}  // namespace

// Expected maps come from tests/oracles/canny_oracle.py (scipy filters, label
// based hysteresis; step and disk also agree with OpenCV's Canny).
TEST(Canny, VerticalStepGivesOneColumn) {
  EXPECT_EQ(edge_indices(canny(image("step"))), column_line(15));
}

TEST(Canny, RampedStepPicksHotSide) {
  EXPECT_EQ(edge_indices(canny(image("step_ramp"))), column_line(16));
}

TEST(Canny, DiskMatchesOracle) {
  const std::vector<std::size_t> want = {
      204, 205, 206, 207, 208, 209, 210, 211, 212, 235, 236, 244, 245, 266, 267, 277,
      278, 298, 310, 330, 342, 362, 374, 394, 406, 426, 438, 458, 470, 490, 502, 522,
      523, 533, 534, 555, 556, 564, 565, 588, 589, 590, 591, 592, 593, 594, 595, 596};
  EXPECT_EQ(edge_indices(canny(image("disk"))), want);
}

TEST(Canny, TexturedImageMatchesOracle) {
  const std::vector<std::size_t> want = {
      34,  35,  36,  37,  52,  70,  71,  72,  84,  105, 106, 107, 116, 140, 141, 147, 174, 175,
      176, 179, 211, 244, 276, 308, 340, 371, 403, 436, 467, 499, 531, 545, 546, 563, 579, 580,
      581, 596, 614, 615, 628, 648, 649, 650, 660, 683, 684, 685, 691, 718, 719, 720, 723};
  EXPECT_EQ(edge_indices(canny(image("hash"))), want);
}

TEST(Canny, FlatFrameHasNoEdges) {
  EXPECT_EQ(count_edges(canny(image("flat"))), 0u);
  CannyConfig raw;
  raw.normalize = false;
  EXPECT_EQ(count_edges(canny(image("flat"), raw)), 0u);
}

TEST(Canny, BorderNeverMarked) {
  // Step right at the frame edge: strongest gradient sits on the border.
  std::vector<double> v(kPixels, 0.0);
  for (std::size_t r = 0; r < kRows; ++r) v[r * kCols] = 50.0;
  for (std::size_t c = 0; c < kCols; ++c) v[c] = 50.0;
  const auto e = canny(v);
  for (std::size_t r = 0; r < kRows; ++r) {
    EXPECT_EQ(e[r * kCols], 0);
    EXPECT_EQ(e[r * kCols + kCols - 1], 0);
  }
  for (std::size_t c = 0; c < kCols; ++c) {
    EXPECT_EQ(e[c], 0);
    EXPECT_EQ(e[(kRows - 1) * kCols + c], 0);
  }
}

TEST(Canny, InvariantToOffsetAndPositiveScale) {
  for (const char* name : {"step", "step_ramp", "disk", "hash"}) {
    const auto base = canny(image(name));
    auto shifted = image(name);
    for (double& x : shifted) x += 273.15;
    auto scaled = image(name);
    for (double& x : scaled) x *= 4.0;
    EXPECT_EQ(canny(shifted), base) << name;
    EXPECT_EQ(canny(scaled), base) << name;
  }
}

TEST(Canny, RejectsBadInput) {
  EXPECT_THROW(canny(std::vector<double>(10, 0.0)), ConfigError);
  auto v = image("step");
  v[5] = std::nan("");
  EXPECT_THROW(canny(v), DomainError);
  CannyConfig c;
  c.low_frac = 0.3;
  EXPECT_THROW(canny(image("step"), c), ConfigError);
  c = {};
  c.gaussian_sigma = 0.0;
  EXPECT_THROW(canny(image("step"), c), ConfigError);
}

TEST(Canny, GaussianKernelRadiusFour) {
  // A single hot pixel spreads exactly four pixels either way.
  std::vector<double> v(kPixels, 0.0);
  v[12 * kCols + 16] = 1.0;
  const auto g = canny_gradients(v, {});
  EXPECT_GT(g.smoothed[12 * kCols + 20], 0.0);
  EXPECT_EQ(g.smoothed[12 * kCols + 21], 0.0);
  EXPECT_GT(g.smoothed[8 * kCols + 16], 0.0);
  EXPECT_EQ(g.smoothed[7 * kCols + 16], 0.0);
}

namespace {

TemperatureFrameDistribution ensemble_of(const std::vector<std::vector<double>>& frames) {
  TemperatureFrameDistribution d;
  for (std::size_t p = 0; p < kPixels; ++p) {
    std::vector<double> s;
    for (const auto& f : frames) s.push_back(f[p]);
    d.emplace_back(std::move(s));
  }
  return d;
}

}  // namespace

TEST(EdgeProbability, CountsFramesAndFilters) {
  const auto a = image("step"), b = image("disk");
  const auto dist = ensemble_of({a, a, a, b});
  const auto prob = edge_probability(dist, {}, 4, 1);
  const auto ea = canny(a), eb = canny(b);
  for (std::size_t p = 0; p < kPixels; ++p) {
    EXPECT_DOUBLE_EQ(prob[p], (3.0 * ea[p] + eb[p]) / 4.0);
  }
  // only the first m frames
  const auto prob3 = edge_probability(dist, {}, 3, 1);
  for (std::size_t p = 0; p < kPixels; ++p) EXPECT_EQ(prob3[p], ea[p] ? 1.0 : 0.0);

  const auto kept = filter_edges(prob, 0.5);
  EXPECT_EQ(kept, ea);
  const auto all = filter_edges(prob, 0.0);
  for (std::size_t p = 0; p < kPixels; ++p) EXPECT_EQ(all[p], ea[p] || eb[p]);
  EXPECT_EQ(count_edges(filter_edges(prob, 1.0)), 0u);  // strictly above
  EXPECT_THROW(filter_edges(prob, 1.5), ConfigError);
  EXPECT_THROW(edge_probability(dist, {}, 5), ConfigError);
  EXPECT_THROW(edge_probability(dist, {}, 0), ConfigError);
}

TEST(EdgeProbability, WorkerCountDoesNotMatter) {
  std::vector<std::vector<double>> frames;
  for (int k = 0; k < 37; ++k) {
    auto f = image("hash");
    for (std::size_t p = 0; p < kPixels; ++p) f[p] += static_cast<double>((p * 7 + k * 13) % 11);
    frames.push_back(f);
  }
  const auto dist = ensemble_of(frames);
  EXPECT_EQ(edge_probability(dist, {}, 37, 1), edge_probability(dist, {}, 37, 4));
}

TEST(EdgeProbability, ZeroNoiseMonteCarloIsCertain) {
  const auto mem = reference_sensor_memory();
  const auto conv = extract_conventional(mem);
  const auto frame = synthesize_frame(conv, step_scene(25.0, 70.0, 16, 0.2), typical_aux());
  McConfig cfg;
  cfg.iterations = 8;
  cfg.noise.amplitude = 0.0;
  const auto r = run_mc(mem, frame, {}, cfg);
  const auto prob = edge_probability(r.dist, {}, 8);
  const auto ref = canny(convert_frame(frame, conv));
  // Raw-word rounding jitters the step, but every interior row keeps one
  // edge pixel next to it.
  for (std::size_t r = 1; r + 1 < kRows; ++r) {
    EXPECT_EQ(ref[r * kCols + 15] + ref[r * kCols + 16], 1) << r;
  }
  EXPECT_EQ(count_edges(ref), kRows - 2);
  for (std::size_t p = 0; p < kPixels; ++p) EXPECT_EQ(prob[p], ref[p] ? 1.0 : 0.0);
}

TEST(FalsePositives, HandExample) {
  EdgeMap ref(kPixels, 0), a(kPixels, 0), b(kPixels, 0);
  ref[40] = ref[41] = 1;
  a[40] = 1;             // 0 false positives
  b[41] = b[42] = b[43] = b[44] = 1;  // 3
  std::vector<EdgeMap> maps = {a, b, b};
  const auto s = false_positive_stats(maps, ref);
  EXPECT_EQ(s.counts, (std::vector<std::size_t>{0, 3, 3}));
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.0));
  EXPECT_EQ(s.max, 3u);
  EXPECT_DOUBLE_EQ(s.fraction_of_frame, 2.0 / 768.0);
  EXPECT_THROW(false_positive_stats(std::vector<EdgeMap>{}, ref), ConfigError);
}

TEST(EdgeOutput, PgmCsvJson) {
  const auto e = canny(image("step"));
  std::ostringstream pgm;
  write_edge_pgm(pgm, e);
  const std::string s = pgm.str();
  const std::string header = "P5\n32 24\n255\n";
  ASSERT_EQ(s.size(), header.size() + kPixels);
  EXPECT_EQ(s.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 47]), 255);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 48]), 0);

  std::vector<double> prob(kPixels, 0.0);
  prob[1] = 1.0;
  prob[2] = 0.5;
  std::ostringstream p16;
  write_probability_pgm16(p16, prob);
  const std::string h16 = "P5\n32 24\n65535\n";
  const std::string t = p16.str();
  ASSERT_EQ(t.size(), h16.size() + 2 * kPixels);
  EXPECT_EQ(static_cast<unsigned char>(t[h16.size() + 2]), 0xFF);
  EXPECT_EQ(static_cast<unsigned char>(t[h16.size() + 3]), 0xFF);
  EXPECT_EQ(static_cast<unsigned char>(t[h16.size() + 4]), 0x80);  // 32768 big-endian

  std::ostringstream csv;
  write_grid_csv(csv, prob);
  std::istringstream lines(csv.str());
  std::string first;
  std::getline(lines, first);
  EXPECT_EQ(first.substr(0, 8), "0,1,0.5,");
  int n = 1;
  for (std::string l; std::getline(lines, l);) ++n;
  EXPECT_EQ(n, 24);

  const auto j = nlohmann::json::parse(edge_map_json(e));
  EXPECT_EQ(j["edge_count"], 22);
  EXPECT_EQ(j["edges"][1][15], 1);
  EXPECT_EQ(j["edges"].size(), 24u);
}

TEST(EdgeProbability, GradedStepFiltersSpuriousEdges) {
  const auto mem = reference_sensor_memory();
  const auto conv = extract_conventional(mem);
  const auto scene = graded_step_scene();
  const auto truth = canny(scene);
  ASSERT_EQ(edge_indices(truth), column_line(15));
  const auto frame = synthesize_frame(conv, scene, typical_aux());
  McConfig cfg;
  cfg.iterations = 1000;
  cfg.master_seed = 7;
  const auto r = run_mc(mem, frame, {}, cfg);
  const auto maps = sample_edge_maps(r.dist, {}, 1000);
  const auto fp = false_positive_stats(maps, truth);
  EXPECT_GT(fp.max, 0u);
  const auto prob = edge_probability(r.dist, {}, 1000);
  for (std::size_t p = 0; p < kPixels; ++p) {
    if (truth[p]) EXPECT_EQ(prob[p], 1.0) << p;
    else EXPECT_LT(prob[p], 1.0) << p;
  }
  const auto kept = filter_edges(prob, 0.99);
  EXPECT_EQ(kept, truth);
  // higher thresholds only shrink the map
  const auto loose = filter_edges(prob, 0.05);
  for (std::size_t p = 0; p < kPixels; ++p) EXPECT_LE(kept[p], loose[p]);
  EXPECT_GT(count_edges(loose), count_edges(kept));
}
