#include "app.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "uqsense/edges.hpp"
#include "uqsense/eeprom.hpp"
#include "uqsense/errors.hpp"
#include "uqsense/extraction.hpp"
#include "uqsense/fixture.hpp"
#include "uqsense/io.hpp"
#include "uqsense/montecarlo.hpp"
#include "uqsense/random.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace uqsense::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return s.str();
}

namespace {

// Everything needed to reproduce one artifact set. No clocks, no host
// names: equal manifests mean equal outputs.
class Manifest {
 public:
  Manifest(std::string command, ordered_json config) {
    j_["tool"] = "uqsense";
    j_["version"] = UQSENSE_VERSION;
    j_["command"] = std::move(command);
    j_["config"] = std::move(config);
    j_["inputs"] = ordered_json::array();
    j_["outputs"] = ordered_json::array();
  }
  void input(const std::string& path) {
    j_["inputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}});
  }
  void output(const fs::path& path) {
    outputs_.push_back(path);
  }
  void write(const fs::path& dir) {
    for (const auto& p : outputs_) {
      j_["outputs"].push_back({{"file", p.filename().string()}, {"sha256", sha256_file(p.string())}});
    }
    write_text_file((dir / "manifest.json").string(), j_.dump(1) + "\n");
  }

 private:
  ordered_json j_;
  std::vector<fs::path> outputs_;
};

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw FormatError("cannot create output directory " + out + ": " + ec.message());
  return fs::path(out);
}

std::vector<std::size_t> parse_pixels(const std::string& spec) {
  std::vector<std::size_t> out;
  if (spec.empty() || spec == "all") return out;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto dash = tok.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoul(tok));
      } else {
        const auto a = std::stoul(tok.substr(0, dash)), b = std::stoul(tok.substr(dash + 1));
        if (b < a) throw ConfigError("bad pixel range " + tok);
        for (auto p = a; p <= b; ++p) out.push_back(p);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad pixel list entry '" + tok + "'");
    }
  }
  for (auto p : out) {
    if (p >= kPixels) throw ConfigError("pixel " + std::to_string(p) + " out of range");
  }
  return out;
}

Sampling parse_sampling(const std::string& s) {
  if (s == "sobol") return Sampling::Sobol;
  if (s == "lhs" || s == "stratified") return Sampling::Stratified;
  if (s == "pseudorandom") return Sampling::Pseudorandom;
  throw ConfigError("unknown sampling '" + s + "' (sobol, lhs, pseudorandom)");
}

void write_stream_file(const fs::path& p, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot open " + p.string() + " for writing");
  fn(out);
  if (!out) throw FormatError("write failed: " + p.string());
}

bool read_record(std::istream& in, std::vector<double>& v) {
  auto get = [&](std::uint64_t& x) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
    x = 0;
    for (int k = 7; k >= 0; --k) x = (x << 8) | b[k];
    return true;
  };
  std::uint64_t len = 0;
  if (!get(len)) return false;
  v.resize(len);
  for (auto& x : v) {
    std::uint64_t bits = 0;
    if (!get(bits)) throw FormatError("ensemble record truncated");
    x = std::bit_cast<double>(bits);
  }
  return true;
}

// ---------------------------------------------------------------- commands

struct Common {
  std::string out;
  std::size_t workers = 0;
};

int cmd_catalog(std::ostream& out) {
  out << catalog_to_json() << "\n";
  return kOk;
}

struct FixtureArgs {
  Common c;
  std::string scene = "graded";
  bool binary = false;
};

int cmd_fixture(const FixtureArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  const auto mem = reference_sensor_memory();
  const auto conv = extract_conventional(mem);
  std::vector<double> scene;
  if (a.scene == "graded") scene = graded_step_scene();
  else if (a.scene == "step") scene = step_scene(25.0, 70.0, 16, 0.2);
  else if (a.scene == "flat") scene = flat_scene(30.0);
  else throw ConfigError("unknown scene '" + a.scene + "' (graded, step, flat)");
  RawFrame frame = synthesize_frame(conv, scene, typical_aux());
  frame.meta_json = ordered_json{{"scene", a.scene}, {"synthetic", true}}.dump();

  Manifest m("fixture", {{"scene", a.scene}, {"binary", a.binary}});
  const fs::path eeprom = dir / (a.binary ? "eeprom.bin" : "eeprom.json");
  if (a.binary) {
    const auto bytes = memory_to_bytes(mem);
    write_stream_file(eeprom, [&](std::ostream& o) {
      o.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    });
  } else {
    write_text_file(eeprom.string(), memory_to_json(mem) + "\n");
  }
  write_text_file((dir / "frame.json").string(), frame_to_json(frame));
  write_stream_file(dir / "scene.csv", [&](std::ostream& o) { write_frame_csv(o, scene); });
  m.output(eeprom);
  m.output(dir / "frame.json");
  m.output(dir / "scene.csv");
  m.write(dir);
  out << "fixture written to " << dir.string() << "\n";
  return kOk;
}

struct ExtractArgs {
  Common c;
  std::string eeprom;
  std::string mode = "conventional";
  std::uint64_t seed = 0;
  std::size_t ensemble_size = 10000;
  double amplitude = 1.0;
  bool rediscretize = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  const auto mem = load_eeprom(a.eeprom);
  ExtractOptions eo;
  eo.emulate_driver_rediscretization = a.rediscretize;
  const auto conv = extract_conventional(mem, eo);
  std::string text;
  ordered_json cfg = {{"mode", a.mode}, {"rediscretize", a.rediscretize}};
  if (a.mode == "conventional") {
    text = parameters_to_json(conv);
  } else if (a.mode == "uncertain") {
    if (a.ensemble_size < 2) throw ConfigError("--ensemble-size must be at least 2");
    if (!(a.amplitude >= 0.0)) throw ConfigError("--noise-amplitude must be non-negative");
    EnsembleContext ctx(a.ensemble_size, a.seed);
    NoiseOptions no;
    no.amplitude = a.amplitude;
    text = parameters_to_json(extract_uncertain(mem, ctx, no, eo), conv);
    cfg["seed"] = a.seed;
    cfg["ensemble_size"] = a.ensemble_size;
    cfg["noise_amplitude"] = a.amplitude;
  } else {
    throw ConfigError("unknown --mode '" + a.mode + "' (conventional, uncertain)");
  }
  Manifest m("extract", cfg);
  m.input(a.eeprom);
  const fs::path p = dir / "parameters.json";
  write_text_file(p.string(), text);
  m.output(p);
  m.write(dir);
  out << "parameters written to " << p.string() << "\n";
  return kOk;
}

struct McArgs {
  Common c;
  std::string eeprom, frame;
  std::size_t iterations = 500000;
  std::uint64_t seed = 0;
  double emissivity = 0.95;
  bool skip_invalid = false;
  std::size_t fast_path = 0;  // 0: full Monte Carlo
  std::string sampling = "sobol";
  double amplitude = 1.0;
  std::string pixels = "all";
  std::size_t chunk_pixels = 64;
  bool no_ensembles = false;
};

int cmd_mc(const McArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  const auto mem = load_eeprom(a.eeprom);
  const auto frame = load_frame(a.frame);
  if (!(a.emissivity > 0.0 && a.emissivity <= 1.0)) throw ConfigError("--emissivity must lie in (0, 1]");
  if (a.chunk_pixels == 0) throw ConfigError("--chunk-pixels must be positive");
  if (!(a.amplitude >= 0.0)) throw ConfigError("--noise-amplitude must be non-negative");
  SceneConditions scene;
  scene.emissivity = a.emissivity;

  McConfig base;
  base.iterations = a.iterations;
  base.master_seed = a.seed;
  base.workers = a.c.workers;
  base.mode = a.fast_path ? McMode::FastPath : McMode::FullMc;
  base.fastpath_k = a.fast_path;
  base.fastpath_sampling = parse_sampling(a.sampling);
  base.noise.amplitude = a.amplitude;
  base.skip_invalid_samples = a.skip_invalid;

  std::vector<std::size_t> pixels = parse_pixels(a.pixels);
  {
    std::set<std::size_t> seen(pixels.begin(), pixels.end());
    if (seen.size() != pixels.size()) throw ConfigError("pixel listed twice");
  }
  if (pixels.empty()) {
    for (std::size_t p = 0; p < kPixels; ++p) pixels.push_back(p);
  }
  const auto conventional = convert_frame(frame, extract_conventional(mem), scene);
  const std::size_t n = base.sample_count();

  // Pixel chunks bound memory at large iteration counts. Each chunk is the
  // same Monte Carlo run restricted to fewer pixels, so the concatenation
  // equals a single full run.
  const fs::path ens = dir / "ensembles.bin";
  const fs::path partial = dir / "ensembles.partial";
  std::vector<std::vector<std::size_t>> chunk_skipped;
  std::set<std::size_t> all_skipped;
  {
    std::ofstream tmp(partial, std::ios::binary);
    if (!tmp) throw FormatError("cannot open " + partial.string());
    for (std::size_t first = 0; first < pixels.size(); first += a.chunk_pixels) {
      McConfig cfg = base;
      cfg.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(first),
                        pixels.begin() + static_cast<std::ptrdiff_t>(std::min(pixels.size(), first + a.chunk_pixels)));
      const McResult r = run_mc(mem, frame, scene, cfg);
      for (const auto& d : r.dist) write_ensemble_record(tmp, d.samples());
      chunk_skipped.push_back(r.skipped);
      all_skipped.insert(r.skipped.begin(), r.skipped.end());
    }
    if (!tmp) throw FormatError("write failed: " + partial.string());
  }
  if (all_skipped.size() == n) throw DomainError("every Monte Carlo iteration was invalid");

  // Second pass: drop iterations that failed in any chunk so sample i is
  // the same world for every pixel, then compute statistics.
  std::vector<PixelStats> stats;
  {
    std::ifstream in(partial, std::ios::binary);
    std::ofstream ens_out;
    if (!a.no_ensembles) {
      ens_out.open(ens, std::ios::binary);
      if (!ens_out) throw FormatError("cannot open " + ens.string());
    }
    std::vector<double> rec, kept;
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      if (!read_record(in, rec)) throw FormatError("ensemble scratch file truncated");
      const auto& skipped = chunk_skipped[k / a.chunk_pixels];
      kept.clear();
      std::size_t s = 0, j = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (s < skipped.size() && skipped[s] == i) {
          ++s;
          continue;
        }
        if (!all_skipped.count(i)) kept.push_back(rec[j]);
        ++j;
      }
      if (!a.no_ensembles) write_ensemble_record(ens_out, kept);
      PixelStats ps;
      ps.pixel = pixels[k];
      ps.reference = conventional[ps.pixel];
      const UncertainValue uv(kept);
      ps.summary = summarize(uv);
      ps.errors = error_stats(uv, ps.reference, ps.reference != 0.0);
      stats.push_back(ps);
    }
    if (!a.no_ensembles && !ens_out) throw FormatError("write failed: " + ens.string());
  }
  fs::remove(partial);

  Manifest m("mc", {{"iterations", a.iterations},
                    {"seed", a.seed},
                    {"emissivity", a.emissivity},
                    {"skip_invalid_samples", a.skip_invalid},
                    {"fast_path", a.fast_path},
                    {"sampling", a.fast_path ? a.sampling : "pseudorandom"},
                    {"noise_amplitude", a.amplitude},
                    {"pixels", a.pixels},
                    {"chunk_pixels", a.chunk_pixels},
                    {"workers", a.c.workers},
                    {"ensembles", !a.no_ensembles}});
  m.input(a.eeprom);
  m.input(a.frame);
  write_stream_file(dir / "stats.csv", [&](std::ostream& o) { write_stats_csv(o, stats); });
  write_stream_file(dir / "conventional.csv", [&](std::ostream& o) { write_frame_csv(o, conventional); });
  ordered_json summary = {{"samples_requested", n},
                          {"samples_kept", n - all_skipped.size()},
                          {"skipped", std::vector<std::size_t>(all_skipped.begin(), all_skipped.end())},
                          {"pixels", pixels}};
  write_text_file((dir / "mc_summary.json").string(), summary.dump(1) + "\n");
  if (!a.no_ensembles) m.output(ens);
  m.output(dir / "stats.csv");
  m.output(dir / "conventional.csv");
  m.output(dir / "mc_summary.json");
  m.write(dir);
  double max_std = 0.0;
  for (const auto& s : stats) max_std = std::max(max_std, s.summary.std);
  out << "mc: " << pixels.size() << " pixels, " << n - all_skipped.size() << "/" << n
      << " samples kept, max std " << max_std << " degC -> " << dir.string() << "\n";
  return kOk;
}

struct EdgesArgs {
  Common c;
  std::string ensemble;
  double sigma = 1.0;
  double threshold = 0.99;
  std::size_t samples = 0;
  double low_frac = 0.10, high_frac = 0.20;
  bool no_normalize = false;
  std::string reference;  // frame CSV whose Canny map is the reference
};

int cmd_edges(const EdgesArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");
  CannyConfig cfg;
  cfg.gaussian_sigma = a.sigma;
  cfg.low_frac = a.low_frac;
  cfg.high_frac = a.high_frac;
  cfg.normalize = !a.no_normalize;
  validate(cfg);

  const auto dist = read_ensemble_prefix(a.ensemble, a.samples);
  if (dist.size() != kPixels) {
    throw FormatError("edges needs an ensemble file with 768 records, got " + std::to_string(dist.size()));
  }
  std::size_t m = dist[0].size();
  for (const auto& d : dist) m = std::min(m, d.size());
  if (a.samples && m < a.samples) throw ConfigError("--samples exceeds the ensemble size");

  std::string ref_path = a.reference;
  if (ref_path.empty()) {
    const auto guess = fs::path(a.ensemble).parent_path() / "conventional.csv";
    if (fs::exists(guess)) ref_path = guess.string();
  }

  const auto maps = sample_edge_maps(dist, cfg, m, a.c.workers);
  const auto prob = edge_probability(maps);
  const auto filtered = filter_edges(prob, a.threshold);

  ordered_json conf = {{"sigma", a.sigma},         {"threshold", a.threshold}, {"samples", m},
                       {"low_frac", a.low_frac},   {"high_frac", a.high_frac},
                       {"normalize", !a.no_normalize}, {"reference", ref_path}};
  Manifest man("edges", conf);
  man.input(a.ensemble);
  ordered_json summary = {{"samples", m}, {"threshold", a.threshold},
                          {"filtered_edges", count_edges(filtered)}};
  if (!ref_path.empty()) {
    man.input(ref_path);
    const auto ref = canny(load_frame_csv(ref_path), cfg);
    const auto fp = false_positive_stats(maps, ref);
    std::size_t with_fp = 0;
    for (auto c : fp.counts) with_fp += c > 0;
    std::size_t filtered_fp = 0, hit = 0;
    for (std::size_t p = 0; p < kPixels; ++p) {
      filtered_fp += filtered[p] && !ref[p];
      hit += filtered[p] && ref[p];
    }
    const std::size_t nref = count_edges(ref);
    summary["reference_edges"] = nref;
    summary["per_sample_false_positives"] = {{"mean", fp.mean},
                                             {"std", fp.std},
                                             {"max", fp.max},
                                             {"fraction_of_frame", fp.fraction_of_frame},
                                             {"frames_with_any", with_fp}};
    summary["filtered_false_positives"] = filtered_fp;
    summary["filtered_recall"] = nref ? static_cast<double>(hit) / static_cast<double>(nref) : 1.0;
    write_stream_file(dir / "reference.pgm", [&](std::ostream& o) { write_edge_pgm(o, ref); });
    man.output(dir / "reference.pgm");
  }
  write_stream_file(dir / "probability.csv", [&](std::ostream& o) { write_grid_csv(o, prob); });
  write_stream_file(dir / "probability.pgm", [&](std::ostream& o) { write_probability_pgm16(o, prob); });
  write_stream_file(dir / "filtered.pgm", [&](std::ostream& o) { write_edge_pgm(o, filtered); });
  write_text_file((dir / "filtered.json").string(), edge_map_json(filtered));
  write_text_file((dir / "edges_summary.json").string(), summary.dump(1) + "\n");
  for (const char* f : {"probability.csv", "probability.pgm", "filtered.pgm", "filtered.json", "edges_summary.json"}) {
    man.output(dir / f);
  }
  man.write(dir);
  out << summary.dump() << "\n";
  return kOk;
}

struct ReportArgs {
  Common c;
  std::vector<std::string> stats;
  std::string ensemble;
  std::string hist_pixels;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  if (a.stats.empty()) throw ConfigError("report needs at least one stats file");
  Manifest man("report", {{"stats", a.stats}, {"ensemble", a.ensemble}, {"hist_pixels", a.hist_pixels}});
  std::vector<PixelStats> all;
  std::vector<std::size_t> first_order;
  for (std::size_t i = 0; i < a.stats.size(); ++i) {
    man.input(a.stats[i]);
    auto s = load_stats_csv(a.stats[i]);
    if (i == 0) {
      for (const auto& p : s) first_order.push_back(p.pixel);
    }
    all.insert(all.end(), s.begin(), s.end());
  }
  const auto agg = aggregate_stats(all);

  ordered_json j;
  j["distributions"] = all.size();
  j["metrics"] = ordered_json::object();
  std::ostringstream csv;
  csv << std::setprecision(17) << "metric,min,mean,max,count\n";
  for (const auto& g : agg) {
    j["metrics"][g.metric] = {{"min", g.min}, {"mean", g.mean}, {"max", g.max}, {"count", g.count}};
    csv << g.metric << ',' << g.min << ',' << g.mean << ',' << g.max << ',' << g.count << '\n';
  }

  const auto hp = parse_pixels(a.hist_pixels);
  if (!hp.empty()) {
    if (a.ensemble.empty()) throw ConfigError("--hist-pixels needs --ensemble");
    man.input(a.ensemble);
    const auto dist = read_ensemble_prefix(a.ensemble, 0);
    // Records follow the pixel order of the run; a full frame is in pixel order.
    std::vector<std::size_t> order = first_order;
    if (dist.size() == kPixels) {
      order.resize(kPixels);
      for (std::size_t p = 0; p < kPixels; ++p) order[p] = p;
    }
    if (order.size() != dist.size()) throw FormatError("ensemble record count does not match the stats file");
    j["histograms"] = ordered_json::object();
    for (auto p : hp) {
      const auto it = std::find(order.begin(), order.end(), p);
      if (it == order.end()) throw ConfigError("pixel " + std::to_string(p) + " not in the ensemble");
      const auto h = doane_histogram(dist[static_cast<std::size_t>(it - order.begin())].samples());
      j["histograms"][std::to_string(p)] = {{"edges", h.edges}, {"counts", h.counts}};
      const fs::path hf = dir / ("hist_" + std::to_string(p) + ".csv");
      write_stream_file(hf, [&](std::ostream& o) {
        o << std::setprecision(17) << "left,right,count\n";
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
          o << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
        }
      });
      man.output(hf);
    }
  }
  write_text_file((dir / "report.json").string(), j.dump(1) + "\n");
  write_text_file((dir / "report.csv").string(), csv.str());
  man.output(dir / "report.json");
  man.output(dir / "report.csv");
  man.write(dir);
  out << csv.str();
  return kOk;
}

struct FastPathArgs {
  Common c;
  std::string eeprom, frame;
  std::string pixels = "400";
  std::size_t k = 256;
  std::string sampling = "sobol";
  std::size_t ground_truth = 500000;
  std::size_t trials = 100;
  double p = 0.9;
  std::uint64_t seed = 0;
  double emissivity = 0.95;
};

int cmd_fastpath(const FastPathArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.c.out);
  const auto mem = load_eeprom(a.eeprom);
  const auto frame = load_frame(a.frame);
  SceneConditions scene;
  scene.emissivity = a.emissivity;
  McConfig base;
  base.pixels = parse_pixels(a.pixels);
  if (base.pixels.empty()) throw ConfigError("fastpath needs an explicit pixel list");
  base.workers = a.c.workers;
  base.fastpath_sampling = parse_sampling(a.sampling);

  McConfig gt_cfg = base;
  gt_cfg.iterations = a.ground_truth;
  gt_cfg.master_seed = mix_seed(a.seed, 1);
  const McResult gt = run_mc(mem, frame, scene, gt_cfg);
  std::vector<W1Reference> refs;
  for (const auto& d : gt.dist) refs.emplace_back(d);

  base.master_seed = a.seed;
  EqMcOptions eo;
  eo.p = a.p;
  eo.trials = a.trials;
  eo.seed = mix_seed(a.seed, 2);
  const auto cmp = fastpath_compare(mem, frame, scene, base, a.k, refs, eo);

  ordered_json j = {{"k", a.k},
                    {"sampling", a.sampling},
                    {"ground_truth", a.ground_truth},
                    {"w1", cmp.w1},
                    {"target_w1", cmp.target_w1},
                    {"eqmc_cutoff", cmp.eqmc.cutoff_iterations},
                    {"pass_fraction", cmp.eqmc.pass_fraction},
                    {"trials", cmp.eqmc.trials},
                    {"p", cmp.eqmc.p},
                    {"iteration_ratio", cmp.iteration_ratio}};
  Manifest man("fastpath", {{"pixels", a.pixels}, {"k", a.k}, {"sampling", a.sampling},
                            {"ground_truth", a.ground_truth}, {"trials", a.trials}, {"p", a.p},
                            {"seed", a.seed}, {"emissivity", a.emissivity}});
  man.input(a.eeprom);
  man.input(a.frame);
  write_text_file((dir / "fastpath.json").string(), j.dump(1) + "\n");
  man.output(dir / "fastpath.json");
  man.write(dir);
  out << j.dump() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representation-uncertainty propagation for thermal-array calibration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(UQSENSE_VERSION));

  std::size_t workers = 0;
  app.add_option("--workers", workers, "Worker threads (0: all, capped by UQSENSE_THREADS)");

  auto* catalog = app.add_subcommand("catalog", "Print the calibration field catalog as JSON");

  FixtureArgs fx;
  auto* fixture = app.add_subcommand("fixture", "Write the synthetic reference sensor and a frame");
  fixture->add_option("--out", fx.c.out, "Output directory")->required();
  fixture->add_option("--scene", fx.scene, "graded | step | flat")->capture_default_str();
  fixture->add_flag("--binary", fx.binary, "Write the calibration dump as 1664 raw bytes");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract calibration parameters");
  extract->add_option("eeprom", ex.eeprom, "Calibration dump (.json or raw bytes)")->required();
  extract->add_option("--out", ex.c.out, "Output directory")->required();
  extract->add_option("--mode", ex.mode, "conventional | uncertain")->capture_default_str();
  extract->add_option("--seed", ex.seed, "Master seed")->capture_default_str();
  extract->add_option("--ensemble-size", ex.ensemble_size, "Samples per parameter")->capture_default_str();
  extract->add_option("--noise-amplitude", ex.amplitude, "Width of the uniform noise per raw datum")
      ->capture_default_str();
  extract->add_flag("--rediscretize", ex.rediscretize, "Round alpha/Kta/Kv through the driver's storage");

  McArgs mc;
  auto* mcc = app.add_subcommand("mc", "Monte Carlo propagation to output temperatures");
  mcc->add_option("eeprom", mc.eeprom, "Calibration dump")->required();
  mcc->add_option("frame", mc.frame, "Raw frame JSON")->required();
  mcc->add_option("--out", mc.c.out, "Output directory")->required();
  mcc->add_option("--iterations", mc.iterations, "Monte Carlo iterations")->capture_default_str();
  mcc->add_option("--seed", mc.seed, "Master seed")->capture_default_str();
  mcc->add_option("--emissivity", mc.emissivity, "Object emissivity")->capture_default_str();
  mcc->add_flag("--skip-invalid-samples", mc.skip_invalid, "Drop iterations that leave the numeric domain");
  mcc->add_option("--fast-path", mc.fast_path, "Use k low-discrepancy samples instead (0: off)")
      ->capture_default_str();
  mcc->add_option("--sampling", mc.sampling, "Fast-path sampling: sobol | lhs | pseudorandom")
      ->capture_default_str();
  mcc->add_option("--noise-amplitude", mc.amplitude, "Width of the uniform noise per raw datum")
      ->capture_default_str();
  mcc->add_option("--pixels", mc.pixels, "Pixel list, e.g. 0-31,400 (default all)")->capture_default_str();
  mcc->add_option("--chunk-pixels", mc.chunk_pixels, "Pixels per pass (memory bound)")->capture_default_str();
  mcc->add_flag("--no-ensemble-file", mc.no_ensembles, "Skip writing ensembles.bin");

  EdgesArgs ed;
  auto* edges = app.add_subcommand("edges", "Probabilistic Canny edges over an ensemble frame");
  edges->add_option("ensemble", ed.ensemble, "ensembles.bin with 768 records")->required();
  edges->add_option("--out", ed.c.out, "Output directory")->required();
  edges->add_option("--sigma", ed.sigma, "Gaussian sigma")->capture_default_str();
  edges->add_option("--threshold", ed.threshold, "Keep pixels with edge probability above this")
      ->capture_default_str();
  edges->add_option("--samples", ed.samples, "Sample-frames to use (0: all)")->capture_default_str();
  edges->add_option("--low-frac", ed.low_frac, "Low hysteresis threshold / max gradient")->capture_default_str();
  edges->add_option("--high-frac", ed.high_frac, "High hysteresis threshold / max gradient")->capture_default_str();
  edges->add_flag("--no-normalize", ed.no_normalize, "Skip per-frame min-max normalization");
  edges->add_option("--reference", ed.reference,
                    "Frame CSV defining reference edges (default: conventional.csv beside the ensemble)");

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Aggregate per-pixel statistics");
  report->add_option("stats", rp.stats, "stats.csv files")->required();
  report->add_option("--out", rp.c.out, "Output directory")->required();
  report->add_option("--ensemble", rp.ensemble, "Ensemble file for histograms");
  report->add_option("--hist-pixels", rp.hist_pixels, "Pixels to histogram (Doane bins)");

  FastPathArgs fp;
  auto* fast = app.add_subcommand("fastpath", "Compare a fast-path ensemble with equal-accuracy Monte Carlo");
  fast->add_option("eeprom", fp.eeprom, "Calibration dump")->required();
  fast->add_option("frame", fp.frame, "Raw frame JSON")->required();
  fast->add_option("--out", fp.c.out, "Output directory")->required();
  fast->add_option("--pixels", fp.pixels, "Tracked pixels")->capture_default_str();
  fast->add_option("--k", fp.k, "Fast-path samples")->capture_default_str();
  fast->add_option("--sampling", fp.sampling, "sobol | lhs | pseudorandom")->capture_default_str();
  fast->add_option("--ground-truth", fp.ground_truth, "Ground-truth iterations")->capture_default_str();
  fast->add_option("--trials", fp.trials, "Trials per candidate iteration count")->capture_default_str();
  fast->add_option("--p", fp.p, "Required pass fraction")->capture_default_str();
  fast->add_option("--seed", fp.seed, "Master seed")->capture_default_str();
  fast->add_option("--emissivity", fp.emissivity, "Object emissivity")->capture_default_str();

  std::string demo_out;
  std::size_t demo_iterations = 5000;
  auto* demo = app.add_subcommand("demo", "fixture -> mc -> edges -> report on the synthetic sensor");
  demo->add_option("--out", demo_out, "Output directory")->required();
  demo->add_option("--iterations", demo_iterations, "Monte Carlo iterations")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    fx.c.workers = ex.c.workers = mc.c.workers = ed.c.workers = rp.c.workers = fp.c.workers = workers;
    if (*catalog) return cmd_catalog(out);
    if (*fixture) return cmd_fixture(fx, out);
    if (*extract) return cmd_extract(ex, out);
    if (*mcc) return cmd_mc(mc, out);
    if (*edges) return cmd_edges(ed, out);
    if (*report) return cmd_report(rp, out);
    if (*fast) return cmd_fastpath(fp, out);
    if (*demo) {
      const fs::path d = prepare_out(demo_out);
      const std::string w = std::to_string(workers);
      const std::string prog = args.empty() ? "uqsense" : args[0];
      for (const std::vector<std::string>& step : std::vector<std::vector<std::string>>{
               {prog, "fixture", "--out", (d / "fixture").string()},
               {prog, "--workers", w, "mc", (d / "fixture/eeprom.json").string(),
                (d / "fixture/frame.json").string(), "--iterations", std::to_string(demo_iterations),
                "--out", (d / "mc").string()},
               {prog, "--workers", w, "edges", (d / "mc/ensembles.bin").string(), "--reference",
                (d / "fixture/scene.csv").string(), "--out", (d / "edges").string()},
               {prog, "report", (d / "mc/stats.csv").string(), "--ensemble",
                (d / "mc/ensembles.bin").string(), "--hist-pixels", "400", "--out",
                (d / "report").string()}}) {
        const int rc = run(step, out, err);
        if (rc != kOk) return rc;
      }
      return kOk;
    }
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << "\n";
    return kDomain;
  } catch (const UnreachableTarget& e) {
    err << "unreachable target: " << e.what() << "\n";
    return kDomain;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace uqsense::cli
