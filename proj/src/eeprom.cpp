#include "uqsense/eeprom.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "uqsense/errors.hpp"

namespace uqsense {

using json = nlohmann::json;

namespace {

CatalogEntry scalar(const char* name, std::uint16_t addr, int msb, int lsb, bool sgn, bool unc,
                    int scale_exp, const char* row, const char* note = "", int bias = 0) {
  CatalogEntry e;
  e.field = RawField{name, addr, msb, lsb, sgn, bias, scale_exp, unc};
  e.table_row = row;
  e.note = note;
  return e;
}

CatalogEntry nibbles(const char* name, std::uint16_t addr, std::size_t count, const char* row) {
  CatalogEntry e;
  e.field = RawField{name, addr, 3, 0, true, 0, 0, true};
  e.count = count;
  e.layout = FieldLayout::NibbleArray;
  e.table_row = row;
  return e;
}

CatalogEntry pixels(const char* name, int msb, int lsb, bool sgn, bool unc, const char* row) {
  CatalogEntry e;
  e.field = RawField{name, 0x2440, msb, lsb, sgn, 0, 0, unc};
  e.count = kPixels;
  e.layout = FieldLayout::PixelArray;
  e.table_row = row;
  return e;
}

std::vector<CatalogEntry> build_catalog() {
  // Bit positions follow the vendor datasheet; widths mirror the
  // calibration-data table. Scale fields are ordinal and mode bits nominal,
  // so neither carries representation uncertainty.
  std::vector<CatalogEntry> c;
  c.push_back(scalar("alpha_ptat", 0x2410, 15, 12, false, true, -2, "(Alpha PTAT - 8)*4"));
  c.push_back(scalar("occ_row_scale", 0x2410, 11, 8, false, false, 0, "Scale OCC Row"));
  c.push_back(scalar("occ_col_scale", 0x2410, 7, 4, false, false, 0, "Scale OCC Col"));
  c.push_back(scalar("occ_rem_scale", 0x2410, 3, 0, false, false, 0, "Scale OCC Rem"));
  c.push_back(scalar("offset_ref", 0x2411, 15, 0, true, true, 0, "Pix Os Average"));
  c.push_back(nibbles("occ_row", 0x2412, kRows, "OCC row (datasheet)"));
  c.push_back(nibbles("occ_col", 0x2418, kCols, "OCC column (datasheet)"));
  c.push_back(scalar("alpha_scale", 0x2420, 15, 12, false, false, 0, "Alpha Scale - 30"));
  c.push_back(scalar("acc_row_scale", 0x2420, 11, 8, false, false, 0, "Scale ACC Row"));
  c.push_back(scalar("acc_col_scale", 0x2420, 7, 4, false, false, 0, "Scale ACC Col"));
  c.push_back(scalar("acc_rem_scale", 0x2420, 3, 0, false, false, 0, "Scale ACC Rem"));
  c.push_back(scalar("alpha_ref", 0x2421, 15, 0, false, true, 0, "Pix Sensitivity Average"));
  c.push_back(nibbles("acc_row", 0x2422, kRows, "ACC row (datasheet)"));
  c.push_back(nibbles("acc_col", 0x2428, kCols, "ACC column (datasheet)"));
  c.push_back(scalar("gain", 0x2430, 15, 0, true, true, 0, "Gain"));
  c.push_back(scalar("v_ptat25", 0x2431, 15, 0, true, true, 0, "PTAT 25"));
  c.push_back(scalar("kv_ptat", 0x2432, 15, 10, true, true, -12, "Kv PTAT"));
  c.push_back(scalar("kt_ptat", 0x2432, 9, 0, true, true, -3, "Kt PTAT"));
  c.push_back(scalar("k_vdd", 0x2433, 15, 8, true, true, 5, "Kv Vdd"));
  c.push_back(scalar("vdd25", 0x2433, 7, 0, false, true, 5, "Vdd 25",
                     "stored +256; value = byte - 256, then *32 - 8192", -256));
  c.push_back(scalar("kv_ro_co", 0x2434, 15, 12, true, true, 0, "Kv Avg Row-Odd Column-Odd"));
  c.push_back(scalar("kv_re_co", 0x2434, 11, 8, true, true, 0, "Kv Avg Row-Even Column-Odd"));
  c.push_back(scalar("kv_ro_ce", 0x2434, 7, 4, true, true, 0, "Kv Avg Row-Odd Column-Even"));
  c.push_back(scalar("kv_re_ce", 0x2434, 3, 0, true, true, 0, "Kv Avg Row-Even Column-Even"));
  c.push_back(scalar("il_chess_c2", 0x2435, 15, 11, true, true, -3, "IL Chess C3"));
  c.push_back(scalar("il_chess_c1", 0x2435, 10, 6, true, true, -1, "IL Chess C2"));
  c.push_back(scalar("il_chess_c0", 0x2435, 5, 0, true, true, -4, "IL Chess C1"));
  c.push_back(scalar("kta_ro_co", 0x2436, 15, 8, true, true, 0, "Kt Avg Row-Odd Column-Odd"));
  c.push_back(scalar("kta_re_co", 0x2436, 7, 0, true, true, 0, "Kt Avg Row-Even Column-Odd",
                     "datasheet/driver position; the table lists Row-Odd Column-Even here"));
  c.push_back(scalar("kta_ro_ce", 0x2437, 15, 8, true, true, 0, "Kt Avg Row-Odd Column-Even",
                     "datasheet/driver position; the table lists Row-Even Column-Odd here"));
  c.push_back(scalar("kta_re_ce", 0x2437, 7, 0, true, true, 0, "Kt Avg Row-Even Column-Even"));
  c.push_back(scalar("resolution_ee", 0x2438, 13, 12, false, false, 0, "Res Control Calib"));
  c.push_back(scalar("kv_scale", 0x2438, 11, 8, false, false, 0, "Kv Scale"));
  c.push_back(scalar("kta_scale1", 0x2438, 7, 4, false, false, 0, "Kta Scale 1", "+8"));
  c.push_back(scalar("kta_scale2", 0x2438, 3, 0, false, false, 0, "Kta Scale 2"));
  c.push_back(scalar("alpha_cp_ratio", 0x2439, 15, 10, true, true, -7,
                     "Alpha (CP Subpage 1 / CP Subpage 0 - 1)*2^7"));
  c.push_back(scalar("alpha_cp0", 0x2439, 9, 0, true, true, 0, "Alpha CP Subpage 0",
                     "divided by 2^(alpha_scale+27)"));
  c.push_back(scalar("offset_cp_delta", 0x243A, 15, 10, true, true, 0,
                     "Offset (CP Subpage 1 - CP Subpage 0)", "6 bits per datasheet"));
  c.push_back(scalar("offset_cp0", 0x243A, 9, 0, true, true, 0, "Offset CP Subpage 0",
                     "10 bits per datasheet"));
  c.push_back(scalar("cp_kv", 0x243B, 15, 8, true, true, 0, "Kv CP", "divided by 2^kv_scale"));
  c.push_back(scalar("cp_kta", 0x243B, 7, 0, true, true, 0, "Kta CP",
                     "divided by 2^(kta_scale1+8)"));
  c.push_back(scalar("ks_ta", 0x243C, 15, 8, true, true, -13, "KsTa*2^13"));
  c.push_back(scalar("tgc", 0x243C, 7, 0, true, true, -5, "TGC"));
  c.push_back(scalar("ks_to1", 0x243D, 15, 8, true, true, 0, "KsTo Range 2"));
  c.push_back(scalar("ks_to0", 0x243D, 7, 0, true, true, 0, "KsTo Range 1"));
  c.push_back(scalar("ks_to3", 0x243E, 15, 8, true, true, 0, "KsTo Range 4"));
  c.push_back(scalar("ks_to2", 0x243E, 7, 0, true, true, 0, "KsTo Range 3"));
  c.push_back(scalar("temp_step", 0x243F, 13, 12, false, false, 0, "Temp Step x10",
                     "treated as ordinal"));
  c.push_back(scalar("ct3_steps", 0x243F, 11, 8, false, true, 0, "CT4"));
  c.push_back(scalar("ct2_steps", 0x243F, 7, 4, false, true, 0, "CT3"));
  c.push_back(scalar("ks_to_scale", 0x243F, 3, 0, false, false, 0, "KsTo Scale Offset - 8"));
  c.push_back(scalar("calibration_mode", 0x240A, 11, 11, false, false, 0,
                     "CalibrationMode (datasheet)"));
  c.push_back(pixels("pix_alpha_rem", 9, 4, true, true, "per-pixel ACC remainder"));
  c.push_back(pixels("pix_offset_rem", 15, 10, true, true, "per-pixel OCC remainder"));
  c.push_back(pixels("pix_kta_rem", 3, 1, true, true, "per-pixel Kta"));
  c.push_back(pixels("pix_outlier", 0, 0, false, false, "outlier flag"));
  return c;
}

std::vector<std::size_t> build_offsets() {
  std::vector<std::size_t> off(kFieldCount + 1, 0);
  const auto& cat = field_catalog();
  for (std::size_t k = 0; k < kFieldCount; ++k) off[k + 1] = off[k] + cat[k].count;
  return off;
}

const std::vector<std::size_t>& offsets() {
  static const std::vector<std::size_t> off = build_offsets();
  return off;
}

}  // namespace

const std::vector<CatalogEntry>& field_catalog() {
  static const std::vector<CatalogEntry> catalog = build_catalog();
  return catalog;
}

const CatalogEntry& catalog_entry(Fid id) { return field_catalog()[static_cast<std::size_t>(id)]; }

RawField element_field(const CatalogEntry& entry, std::size_t index) {
  if (index >= entry.count) throw ConfigError("field index out of range: " + entry.field.name);
  RawField f = entry.field;
  switch (entry.layout) {
    case FieldLayout::Scalar:
      break;
    case FieldLayout::NibbleArray:
      f.address = static_cast<std::uint16_t>(f.address + index / 4);
      f.lsb = static_cast<int>(4 * (index % 4));
      f.msb = f.lsb + 3;
      break;
    case FieldLayout::PixelArray:
      f.address = static_cast<std::uint16_t>(f.address + index);
      break;
  }
  if (entry.count > 1) f.name += "[" + std::to_string(index) + "]";
  return f;
}

std::size_t datum_offset(Fid id) { return offsets()[static_cast<std::size_t>(id)]; }
std::size_t datum_count() { return offsets().back(); }

std::uint16_t CalibrationMemory::word(std::uint16_t address) const {
  if (address < kEepromBase || address >= kEepromBase + kEepromWords) {
    throw FormatError("address out of calibration memory range");
  }
  return words_[address - kEepromBase];
}

std::int64_t read_field(const CalibrationMemory& mem, const RawField& field) {
  const unsigned width = static_cast<unsigned>(field.bit_count());
  const std::uint32_t raw = (static_cast<std::uint32_t>(mem.word(field.address)) >> field.lsb) &
                            ((1U << width) - 1U);
  std::int64_t v = raw;
  if (field.is_signed && (raw >> (width - 1)) != 0) v -= std::int64_t{1} << width;
  return v + field.bias;
}

std::vector<std::int64_t> read_all_data(const CalibrationMemory& mem) {
  std::vector<std::int64_t> out;
  out.reserve(datum_count());
  for (const auto& entry : field_catalog()) {
    for (std::size_t e = 0; e < entry.count; ++e) {
      out.push_back(read_field(mem, element_field(entry, e)));
    }
  }
  return out;
}

CalibrationMemory parse_words(std::span<const std::uint16_t> words, std::string sensor_id) {
  if (words.size() != kEepromWords) {
    throw FormatError("calibration memory needs " + std::to_string(kEepromWords) +
                      " words, got " + std::to_string(words.size()));
  }
  std::array<std::uint16_t, kEepromWords> w{};
  std::copy(words.begin(), words.end(), w.begin());
  return CalibrationMemory(std::move(sensor_id), w);
}

CalibrationMemory parse_bytes(std::span<const std::uint8_t> bytes, std::string sensor_id) {
  if (bytes.size() != 2 * kEepromWords) {
    throw FormatError("calibration dump needs " + std::to_string(2 * kEepromWords) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<std::uint16_t> w(kEepromWords);
  for (std::size_t k = 0; k < kEepromWords; ++k) {
    w[k] = static_cast<std::uint16_t>((bytes[2 * k] << 8) | bytes[2 * k + 1]);
  }
  return parse_words(w, std::move(sensor_id));
}

CalibrationMemory parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("calibration JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("words") || !j["words"].is_array()) {
    throw FormatError("calibration JSON: missing \"words\" array");
  }
  std::uint64_t base = kEepromBase;
  if (j.contains("base_address")) {
    const auto& b = j["base_address"];
    if (b.is_string()) {
      base = std::stoull(b.get<std::string>(), nullptr, 0);
    } else if (b.is_number_unsigned() || b.is_number_integer()) {
      base = b.get<std::uint64_t>();
    } else {
      throw FormatError("calibration JSON: bad base_address");
    }
  }
  if (base != kEepromBase) throw FormatError("calibration JSON: base_address must be 0x2400");
  std::vector<std::uint16_t> w;
  w.reserve(j["words"].size());
  std::size_t idx = 0;
  for (const auto& v : j["words"]) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 0xFFFF) {
      std::ostringstream msg;
      msg << "calibration JSON: word at 0x" << std::hex << (kEepromBase + idx)
          << " is not a 16-bit unsigned integer";
      throw FormatError(msg.str());
    }
    w.push_back(static_cast<std::uint16_t>(v.get<std::int64_t>()));
    ++idx;
  }
  const std::string id = j.value("sensor_id", std::string("unknown"));
  return parse_words(w, id);
}

CalibrationMemory load_eeprom(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open calibration memory file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  const bool looks_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (looks_json) return parse_json(std::string(bytes.begin(), bytes.end()));
  std::string stem = path.substr(path.find_last_of('/') + 1);
  stem = stem.substr(0, stem.find('.'));
  return parse_bytes(bytes, stem);
}

std::string memory_to_json(const CalibrationMemory& mem) {
  json j;
  j["sensor_id"] = mem.sensor_id();
  j["base_address"] = kEepromBase;
  j["words"] = mem.words();
  return j.dump();
}

std::vector<std::uint8_t> memory_to_bytes(const CalibrationMemory& mem) {
  std::vector<std::uint8_t> out;
  out.reserve(2 * kEepromWords);
  for (std::uint16_t w : mem.words()) {
    out.push_back(static_cast<std::uint8_t>(w >> 8));
    out.push_back(static_cast<std::uint8_t>(w & 0xFF));
  }
  return out;
}

std::string catalog_to_json() {
  json fields = json::array();
  for (const auto& e : field_catalog()) {
    std::string layout = "scalar";
    if (e.layout == FieldLayout::NibbleArray) layout = "nibble_array";
    if (e.layout == FieldLayout::PixelArray) layout = "pixel_array";
    json f = {{"name", e.field.name},         {"address", e.field.address},
              {"msb", e.field.msb},           {"lsb", e.field.lsb},
              {"bit_count", e.field.bit_count()}, {"signed", e.field.is_signed},
              {"bias", e.field.bias},         {"scale_exponent", e.field.scale_exponent},
              {"uncertain", e.field.uncertain}, {"count", e.count},
              {"layout", layout},             {"table_row", e.table_row}};
    if (!e.note.empty()) f["note"] = e.note;
    fields.push_back(f);
  }
  json j = {{"catalog_version", 1}, {"base_address", kEepromBase}, {"words", kEepromWords},
            {"fields", fields}};
  return j.dump(2) + "\n";
}

void MemoryBuilder::set_word(std::uint16_t address, std::uint16_t value) {
  if (address < kEepromBase || address >= kEepromBase + kEepromWords) {
    throw ConfigError("address out of calibration memory range");
  }
  words_[address - kEepromBase] = value;
}

void MemoryBuilder::write_field(const RawField& field, std::int64_t value) {
  const int width = field.bit_count();
  const std::int64_t stored = value - field.bias;
  const std::int64_t lo = field.is_signed ? -(std::int64_t{1} << (width - 1)) : 0;
  const std::int64_t hi = field.is_signed ? (std::int64_t{1} << (width - 1)) - 1
                                          : (std::int64_t{1} << width) - 1;
  if (stored < lo || stored > hi) {
    throw ConfigError("value " + std::to_string(value) + " does not fit field " + field.name +
                      " (" + std::to_string(width) + " bits)");
  }
  const std::uint32_t mask = ((1U << width) - 1U) << field.lsb;
  const auto bits = (static_cast<std::uint32_t>(stored) << field.lsb) & mask;
  std::uint16_t& w = words_[field.address - kEepromBase];
  w = static_cast<std::uint16_t>((w & ~mask) | bits);
}

void MemoryBuilder::write(Fid id, std::int64_t value, std::size_t index) {
  write_field(element_field(catalog_entry(id), index), value);
}

namespace {

std::int64_t to_int(double v, const char* what) {
  if (!std::isfinite(v)) throw ConfigError(std::string("non-finite value for ") + what);
  return static_cast<std::int64_t>(std::round(v));
}

}  // namespace

CalibrationMemory inverse_encode(const CalibrationImage& im) {
  MemoryBuilder b(im.sensor_id);
  // Scale fields first: other inversions depend on them.
  b.write(Fid::AlphaScale, im.alpha_scale_nibble);
  b.write(Fid::AccRowScale, im.acc_row_scale);
  b.write(Fid::AccColScale, im.acc_col_scale);
  b.write(Fid::AccRemScale, im.acc_rem_scale);
  b.write(Fid::OccRowScale, im.occ_row_scale);
  b.write(Fid::OccColScale, im.occ_col_scale);
  b.write(Fid::OccRemScale, im.occ_rem_scale);
  b.write(Fid::KtaScale1, im.kta_scale1_nibble);
  b.write(Fid::KtaScale2, im.kta_scale2);
  b.write(Fid::KvScale, im.kv_scale_nibble);
  b.write(Fid::ResolutionEE, im.resolution_ee);
  b.write(Fid::KsToScale, im.ks_to_scale_nibble);
  if (im.temp_step % 10 != 0) throw ConfigError("temp_step must be a multiple of 10");
  b.write(Fid::TempStep, im.temp_step / 10);
  if (im.calibration_mode_ee != 0 && im.calibration_mode_ee != 128) {
    throw ConfigError("calibration_mode_ee must be 0 or 128");
  }
  b.write(Fid::CalibrationMode, (im.calibration_mode_ee ^ 0x80) >> 7);

  b.write(Fid::KVdd, to_int(im.k_vdd / 32.0, "k_vdd"));
  b.write(Fid::Vdd25, to_int((im.vdd25 + 8192.0) / 32.0, "vdd25"));
  b.write(Fid::KvPtat, to_int(im.kv_ptat * 4096.0, "kv_ptat"));
  b.write(Fid::KtPtat, to_int(im.kt_ptat * 8.0, "kt_ptat"));
  b.write(Fid::VPtat25, to_int(im.v_ptat25, "v_ptat25"));
  b.write(Fid::AlphaPtat, to_int((im.alpha_ptat - 8.0) * 4.0, "alpha_ptat"));
  b.write(Fid::Gain, to_int(im.gain, "gain"));
  b.write(Fid::Tgc, to_int(im.tgc * 32.0, "tgc"));
  b.write(Fid::KsTa, to_int(im.ks_ta * 8192.0, "ks_ta"));

  const double ks_to_scale = std::ldexp(1.0, im.ks_to_scale_nibble + 8);
  const Fid ks_to_ids[4] = {Fid::KsTo0, Fid::KsTo1, Fid::KsTo2, Fid::KsTo3};
  for (int r = 0; r < 4; ++r) b.write(ks_to_ids[r], to_int(im.ks_to[r] * ks_to_scale, "ks_to"));

  if (im.temp_step == 0) {
    if (im.ct2 != 0.0 || im.ct3 != 0.0) throw ConfigError("corner temperatures need a step");
  } else {
    const auto ct2 = to_int(im.ct2 / im.temp_step, "ct2");
    b.write(Fid::Ct2Step, ct2);
    b.write(Fid::Ct3Step, to_int((im.ct3 - im.ct2) / im.temp_step, "ct3"));
  }

  const double cp_alpha_scale = std::ldexp(1.0, im.alpha_scale_nibble + 27);
  b.write(Fid::AlphaCp0, to_int(im.alpha_cp0 * cp_alpha_scale, "alpha_cp0"));
  if (im.alpha_cp0 == 0.0) {
    if (im.alpha_cp1 != 0.0) throw ConfigError("alpha_cp1 needs a nonzero alpha_cp0");
  } else {
    b.write(Fid::AlphaCpRatio, to_int((im.alpha_cp1 / im.alpha_cp0 - 1.0) * 128.0, "alpha_cp1"));
  }
  b.write(Fid::OffsetCp0, to_int(im.cp_offset0, "cp_offset0"));
  b.write(Fid::OffsetCpDelta, to_int(im.cp_offset1 - im.cp_offset0, "cp_offset1"));
  b.write(Fid::CpKv, to_int(im.kv_cp * std::ldexp(1.0, im.kv_scale_nibble), "kv_cp"));
  b.write(Fid::CpKta, to_int(im.kta_cp * std::ldexp(1.0, im.kta_scale1_nibble + 8), "kta_cp"));
  b.write(Fid::IlChessC0, to_int(im.il_chess[0] * 16.0, "il_chess_c0"));
  b.write(Fid::IlChessC1, to_int(im.il_chess[1] * 2.0, "il_chess_c1"));
  b.write(Fid::IlChessC2, to_int(im.il_chess[2] * 8.0, "il_chess_c2"));

  b.write(Fid::AlphaRef, im.alpha_ref);
  b.write(Fid::OffsetRef, im.offset_ref);
  for (std::size_t r = 0; r < kRows; ++r) {
    b.write(Fid::AccRow, im.acc_row[r], r);
    b.write(Fid::OccRow, im.occ_row[r], r);
  }
  for (std::size_t c = 0; c < kCols; ++c) {
    b.write(Fid::AccCol, im.acc_col[c], c);
    b.write(Fid::OccCol, im.occ_col[c], c);
  }
  // split order RoCo, RoCe, ReCo, ReCe
  b.write(Fid::KtaRoCo, im.kta_avg[0]);
  b.write(Fid::KtaRoCe, im.kta_avg[1]);
  b.write(Fid::KtaReCo, im.kta_avg[2]);
  b.write(Fid::KtaReCe, im.kta_avg[3]);
  b.write(Fid::KvRoCo, im.kv_avg[0]);
  b.write(Fid::KvRoCe, im.kv_avg[1]);
  b.write(Fid::KvReCo, im.kv_avg[2]);
  b.write(Fid::KvReCe, im.kv_avg[3]);
  for (std::size_t p = 0; p < kPixels; ++p) {
    b.write(Fid::PixAlphaRem, im.alpha_rem[p], p);
    b.write(Fid::PixOffsetRem, im.offset_rem[p], p);
    b.write(Fid::PixKtaRem, im.kta_rem[p], p);
    b.write(Fid::PixOutlier, im.outlier[p] ? 1 : 0, p);
  }
  return b.build();
}

}  // namespace uqsense
