#include "uqsense/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "uqsense/errors.hpp"

namespace uqsense {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw FormatError("write failed: " + path);
}

std::string frame_to_json(const RawFrame& f) {
  ordered_json j;
  j["pixels"] = f.pixels;
  j["aux"] = {{"vdd_raw", f.aux.vdd_raw},       {"vptat_raw", f.aux.vptat_raw},
              {"vbe_raw", f.aux.vbe_raw},       {"gain_raw", f.aux.gain_raw},
              {"cp_sp0_raw", f.aux.cp_sp0_raw}, {"cp_sp1_raw", f.aux.cp_sp1_raw},
              {"subpage", f.aux.subpage},       {"control_word", f.aux.control_word}};
  j["meta"] = ordered_json::parse(f.meta_json.empty() ? "{}" : f.meta_json);
  return j.dump() + "\n";
}

namespace {

std::int32_t int_field(const json& obj, const char* key) {
  if (!obj.contains(key)) throw FormatError(std::string("frame JSON: aux.") + key + " missing");
  const auto& v = obj[key];
  if (v.is_string()) {
    try {
      return static_cast<std::int32_t>(std::stol(v.get<std::string>(), nullptr, 0));
    } catch (const std::exception&) {
      throw FormatError(std::string("frame JSON: aux.") + key + " is not an integer");
    }
  }
  if (!v.is_number_integer()) throw FormatError(std::string("frame JSON: aux.") + key + " is not an integer");
  const auto x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) throw FormatError(std::string("frame JSON: aux.") + key + " out of range");
  return static_cast<std::int32_t>(x);
}

}  // namespace

RawFrame frame_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("frame JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("pixels") || !j["pixels"].is_array()) {
    throw FormatError("frame JSON: missing \"pixels\" array");
  }
  if (j["pixels"].size() != kPixels) {
    throw FormatError("frame JSON: expected 768 pixels, got " + std::to_string(j["pixels"].size()));
  }
  RawFrame f;
  for (std::size_t i = 0; i < kPixels; ++i) {
    const auto& v = j["pixels"][i];
    if (!v.is_number_integer()) throw FormatError("frame JSON: pixel " + std::to_string(i) + " is not an integer");
    f.pixels[i] = v.get<std::int32_t>();
  }
  if (!j.contains("aux") || !j["aux"].is_object()) throw FormatError("frame JSON: missing \"aux\" object");
  const auto& a = j["aux"];
  f.aux.vdd_raw = int_field(a, "vdd_raw");
  f.aux.vptat_raw = int_field(a, "vptat_raw");
  f.aux.vbe_raw = int_field(a, "vbe_raw");
  f.aux.gain_raw = int_field(a, "gain_raw");
  f.aux.cp_sp0_raw = int_field(a, "cp_sp0_raw");
  f.aux.cp_sp1_raw = int_field(a, "cp_sp1_raw");
  f.aux.subpage = a.contains("subpage") ? int_field(a, "subpage") : 0;
  if (f.aux.subpage != 0 && f.aux.subpage != 1) throw FormatError("frame JSON: subpage must be 0 or 1");
  if (a.contains("control_word")) {
    const auto cw = int_field(a, "control_word");
    if (cw < 0 || cw > 0xFFFF) throw FormatError("frame JSON: control_word is not 16-bit");
    f.aux.control_word = static_cast<std::uint16_t>(cw);
  }
  f.meta_json = j.contains("meta") ? j["meta"].dump() : "{}";
  return f;
}

RawFrame load_frame(const std::string& path) { return frame_from_json(read_text_file(path)); }

namespace {

template <class T, class F>
void put_params(ordered_json& j, const CalibrationParametersT<T>& p, F&& conv) {
  j["k_vdd"] = conv(p.k_vdd);
  j["vdd25"] = conv(p.vdd25);
  j["kv_ptat"] = conv(p.kv_ptat);
  j["kt_ptat"] = conv(p.kt_ptat);
  j["v_ptat25"] = conv(p.v_ptat25);
  j["alpha_ptat"] = conv(p.alpha_ptat);
  j["gain"] = conv(p.gain);
  j["tgc"] = conv(p.tgc);
  j["kv_cp"] = conv(p.kv_cp);
  j["kta_cp"] = conv(p.kta_cp);
  j["resolution_ee"] = p.resolution_ee;
  j["calibration_mode_ee"] = p.calibration_mode_ee;
  j["ks_ta"] = conv(p.ks_ta);
  ordered_json a = ordered_json::array();
  for (const auto& v : p.ks_to) a.push_back(conv(v));
  j["ks_to"] = a;
  a = ordered_json::array();
  for (const auto& v : p.ct) a.push_back(conv(v));
  j["ct"] = a;
  j["s_alpha"] = p.s_alpha;
  j["s_kta"] = p.s_kta;
  j["s_kv"] = p.s_kv;
  j["alpha_cp"] = {conv(p.alpha_cp0), conv(p.alpha_cp1)};
  j["cp_offset"] = {conv(p.cp_offset[0]), conv(p.cp_offset[1])};
  a = ordered_json::array();
  for (const auto& v : p.il_chess) a.push_back(conv(v));
  j["il_chess"] = a;
  j["broken_pixels"] = p.broken_pixels;
  j["outlier_pixels"] = p.outlier_pixels;
}

}  // namespace

std::string parameters_to_json(const CalibrationParameters& p) {
  ordered_json j;
  j["mode"] = "conventional";
  put_params(j, p, [](double v) { return v; });
  j["alpha"] = p.alpha;
  j["offset"] = p.offset;
  j["kta"] = p.kta;
  j["kv"] = p.kv;
  return j.dump(1) + "\n";
}

std::string parameters_to_json(const UncertainCalibrationParameters& p,
                               const CalibrationParameters& c) {
  ordered_json j;
  j["mode"] = "uncertain";
  j["ensemble_size"] = p.k_vdd.size();
  // Same field walk twice; the conventional value is merged into each
  // summary object by key.
  ordered_json conv_j;
  put_params(conv_j, c, [](double v) { return v; });
  ordered_json unc_j;
  put_params(unc_j, p, [](const UncertainValue& v) {
    const SummaryStats s = summarize(v);
    ordered_json o;
    o["mean"] = s.mean;
    o["std"] = s.std;
    o["min"] = s.min;
    o["max"] = s.max;
    o["ci95"] = s.ci95_width;
    return o;
  });
  for (auto it = unc_j.begin(); it != unc_j.end(); ++it) {
    const auto& cv = conv_j[it.key()];
    if (it->is_object()) {
      ordered_json o = {{"conventional", cv}};
      o.update(*it);
      j[it.key()] = o;
    } else if (it->is_array() && !it->empty() && (*it)[0].is_object()) {
      ordered_json arr = ordered_json::array();
      for (std::size_t k = 0; k < it->size(); ++k) {
        ordered_json o = {{"conventional", cv[k]}};
        o.update((*it)[k]);
        arr.push_back(o);
      }
      j[it.key()] = arr;
    } else {
      j[it.key()] = *it;
    }
  }
  auto vec = [&](const char* name, const std::vector<UncertainValue>& v, const std::vector<double>& cv) {
    std::vector<double> mean, sd;
    for (const auto& x : v) {
      const auto s = summarize(x);
      mean.push_back(s.mean);
      sd.push_back(s.std);
    }
    j[name] = {{"conventional", cv}, {"mean", mean}, {"std", sd}};
  };
  vec("alpha", p.alpha, c.alpha);
  vec("offset", p.offset, c.offset);
  vec("kta", p.kta, c.kta);
  vec("kv", p.kv, c.kv);
  return j.dump(1) + "\n";
}

void write_frame_csv(std::ostream& out, const std::vector<double>& frame) {
  if (frame.size() != kPixels) throw ConfigError("frame needs 768 values");
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t c = 0; c < kCols; ++c) {
      if (c) s << ',';
      s << frame[r * kCols + c];
    }
    s << '\n';
  }
  out << s.str();
}

std::vector<double> read_frame_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    std::stringstream ss(line);
    std::size_t cols = 0;
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("frame CSV row " + std::to_string(rows) + ": bad number '" + cell + "'");
      }
      ++cols;
    }
    if (cols != kCols) throw FormatError("frame CSV row " + std::to_string(rows) + ": expected 32 values");
  }
  if (rows != kRows) throw FormatError("frame CSV: expected 24 rows, got " + std::to_string(rows));
  return out;
}

std::vector<double> load_frame_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_frame_csv(in);
}

namespace {

const char* kStatsHeader = "pixel,row,col,reference,mean,std,min,max,q025,q975,ci95,mae,max_ae,mre,max_re";

}  // namespace

void write_stats_csv(std::ostream& out, const std::vector<PixelStats>& stats) {
  std::ostringstream s;
  s << std::setprecision(17) << kStatsHeader << '\n';
  for (const auto& p : stats) {
    s << p.pixel << ',' << p.pixel / kCols << ',' << p.pixel % kCols << ',' << p.reference << ','
      << p.summary.mean << ',' << p.summary.std << ',' << p.summary.min << ',' << p.summary.max << ','
      << p.summary.q025 << ',' << p.summary.q975 << ',' << p.summary.ci95_width << ','
      << p.errors.mae << ',' << p.errors.max_ae << ',';
    if (p.errors.mre) s << *p.errors.mre;
    s << ',';
    if (p.errors.max_re) s << *p.errors.max_re;
    s << '\n';
  }
  out << s.str();
}

std::vector<PixelStats> read_stats_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("stats CSV: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStatsHeader) throw FormatError("stats CSV: unexpected header");
  std::vector<PixelStats> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 15) throw FormatError("stats CSV line " + std::to_string(lineno) + ": expected 15 fields");
    auto num = [&](std::size_t k) {
      try {
        std::size_t used = 0;
        const double v = std::stod(f[k], &used);
        if (used != f[k].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw FormatError("stats CSV line " + std::to_string(lineno) + ": bad number '" + f[k] + "'");
      }
    };
    PixelStats p;
    p.pixel = static_cast<std::size_t>(num(0));
    if (p.pixel >= kPixels) throw FormatError("stats CSV line " + std::to_string(lineno) + ": pixel out of range");
    p.reference = num(3);
    p.summary.mean = num(4);
    p.summary.std = num(5);
    p.summary.min = num(6);
    p.summary.max = num(7);
    p.summary.q025 = num(8);
    p.summary.q975 = num(9);
    p.summary.ci95_width = num(10);
    p.errors.mae = num(11);
    p.errors.max_ae = num(12);
    if (!f[13].empty()) p.errors.mre = num(13);
    if (!f[14].empty()) p.errors.max_re = num(14);
    out.push_back(p);
  }
  return out;
}

std::vector<PixelStats> load_stats_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_stats_csv(in);
}

std::vector<UncertainValue> read_ensemble_prefix(const std::string& path, std::size_t m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  auto get = [&](std::uint64_t& v) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
    return true;
  };
  std::vector<UncertainValue> out;
  std::uint64_t len = 0;
  while (get(len)) {
    if (len > (std::uint64_t{1} << 34)) throw FormatError("ensemble record length implausible");
    const std::size_t take = m == 0 ? len : std::min<std::uint64_t>(m, len);
    std::vector<double> s(take);
    for (auto& v : s) {
      std::uint64_t bits = 0;
      if (!get(bits)) throw FormatError("ensemble record truncated");
      v = std::bit_cast<double>(bits);
    }
    in.seekg(static_cast<std::streamoff>((len - take) * 8), std::ios::cur);
    if (!in) throw FormatError("ensemble record truncated");
    out.emplace_back(std::move(s));
  }
  return out;
}

std::vector<MetricAggregate> aggregate_stats(const std::vector<PixelStats>& stats) {
  if (stats.empty()) throw ConfigError("report: no pixel statistics");
  struct Getter {
    const char* name;
    std::optional<double> (*get)(const PixelStats&);
  };
  static const Getter getters[] = {
      {"mean", [](const PixelStats& p) -> std::optional<double> { return p.summary.mean; }},
      {"std", [](const PixelStats& p) -> std::optional<double> { return p.summary.std; }},
      {"ci95", [](const PixelStats& p) -> std::optional<double> { return p.summary.ci95_width; }},
      {"mae", [](const PixelStats& p) -> std::optional<double> { return p.errors.mae; }},
      {"max_ae", [](const PixelStats& p) -> std::optional<double> { return p.errors.max_ae; }},
      {"mre", [](const PixelStats& p) { return p.errors.mre; }},
      {"max_re", [](const PixelStats& p) { return p.errors.max_re; }},
  };
  std::vector<MetricAggregate> out;
  for (const auto& g : getters) {
    MetricAggregate a;
    a.metric = g.name;
    double sum = 0.0;
    for (const auto& p : stats) {
      const auto v = g.get(p);
      if (!v) continue;
      if (a.count == 0) a.min = a.max = *v;
      a.min = std::min(a.min, *v);
      a.max = std::max(a.max, *v);
      sum += *v;
      ++a.count;
    }
    a.mean = a.count ? sum / static_cast<double>(a.count) : 0.0;
    out.push_back(a);
  }
  return out;
}

}  // namespace uqsense
