#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uqsense {

inline constexpr std::uint16_t kEepromBase = 0x2400;
inline constexpr std::size_t kEepromWords = 832;
inline constexpr std::size_t kRows = 24;
inline constexpr std::size_t kCols = 32;
inline constexpr std::size_t kPixels = kRows * kCols;

/// Immutable image of the 832 calibration words at 0x2400..0x273F.
class CalibrationMemory {
 public:
  CalibrationMemory() = default;
  CalibrationMemory(std::string sensor_id, std::array<std::uint16_t, kEepromWords> words)
      : sensor_id_(std::move(sensor_id)), words_(words) {}

  const std::string& sensor_id() const { return sensor_id_; }
  std::uint16_t word(std::uint16_t address) const;
  const std::array<std::uint16_t, kEepromWords>& words() const { return words_; }

 private:
  std::string sensor_id_;
  std::array<std::uint16_t, kEepromWords> words_{};
};

/// One bit field inside one memory word. `bias` is added after sign
/// restoration (the Vdd25 byte is stored offset by +256).
struct RawField {
  std::string name;
  std::uint16_t address = kEepromBase;
  int msb = 15;
  int lsb = 0;
  bool is_signed = false;
  int bias = 0;
  int scale_exponent = 0;  // informational: fixed power of two applied downstream
  bool uncertain = false;

  int bit_count() const { return msb - lsb + 1; }
};

/// Field families. Arrays are laid out either four 4-bit elements per word
/// (element e in bits 4(e%4)+3..4(e%4) of word base + e/4) or one element
/// per pixel word.
enum class FieldLayout { Scalar, NibbleArray, PixelArray };

struct CatalogEntry {
  RawField field;  // element 0 for arrays
  std::size_t count = 1;
  FieldLayout layout = FieldLayout::Scalar;
  std::string table_row;  // calibration-data table row this mirrors
  std::string note;
};

/// Identifiers of catalog entries, in canonical order. The order also fixes
/// noise-stream allocation, so it must never be reshuffled.
enum class Fid : std::size_t {
  AlphaPtat,
  OccRowScale,
  OccColScale,
  OccRemScale,
  OffsetRef,
  OccRow,
  OccCol,
  AlphaScale,
  AccRowScale,
  AccColScale,
  AccRemScale,
  AlphaRef,
  AccRow,
  AccCol,
  Gain,
  VPtat25,
  KvPtat,
  KtPtat,
  KVdd,
  Vdd25,
  KvRoCo,
  KvReCo,
  KvRoCe,
  KvReCe,
  IlChessC2,
  IlChessC1,
  IlChessC0,
  KtaRoCo,
  KtaReCo,
  KtaRoCe,
  KtaReCe,
  ResolutionEE,
  KvScale,
  KtaScale1,
  KtaScale2,
  AlphaCpRatio,
  AlphaCp0,
  OffsetCpDelta,
  OffsetCp0,
  CpKv,
  CpKta,
  KsTa,
  Tgc,
  KsTo1,
  KsTo0,
  KsTo3,
  KsTo2,
  TempStep,
  Ct3Step,
  Ct2Step,
  KsToScale,
  CalibrationMode,
  PixAlphaRem,
  PixOffsetRem,
  PixKtaRem,
  PixOutlier,
  Count_
};

inline constexpr std::size_t kFieldCount = static_cast<std::size_t>(Fid::Count_);

const std::vector<CatalogEntry>& field_catalog();
const CatalogEntry& catalog_entry(Fid id);

/// Concrete field of element `index` of an array entry.
RawField element_field(const CatalogEntry& entry, std::size_t index);

/// Flat numbering of every raw datum (catalog order, then element order).
/// Datum d is realized from noise stream d.
std::size_t datum_offset(Fid id);
std::size_t datum_count();

/// Bits [msb..lsb], two's-complement when signed, plus bias. No scaling.
std::int64_t read_field(const CalibrationMemory& mem, const RawField& field);

/// Integer value of every datum, indexed by datum number.
std::vector<std::int64_t> read_all_data(const CalibrationMemory& mem);

CalibrationMemory parse_words(std::span<const std::uint16_t> words, std::string sensor_id);
/// Raw dump: 1664 bytes, big-endian words.
CalibrationMemory parse_bytes(std::span<const std::uint8_t> bytes, std::string sensor_id);
/// {"sensor_id", "base_address", "words": [...]}
CalibrationMemory parse_json(const std::string& text);
CalibrationMemory load_eeprom(const std::string& path);

std::string memory_to_json(const CalibrationMemory& mem);
std::vector<std::uint8_t> memory_to_bytes(const CalibrationMemory& mem);
std::string catalog_to_json();

/// Writable word image used to build fixtures.
class MemoryBuilder {
 public:
  explicit MemoryBuilder(std::string sensor_id) : sensor_id_(std::move(sensor_id)) {}
  /// Stores `value` (after removing bias) into the field; throws ConfigError
  /// if it does not fit the field width and signedness.
  void write_field(const RawField& field, std::int64_t value);
  void write(Fid id, std::int64_t value, std::size_t index = 0);
  void set_word(std::uint16_t address, std::uint16_t value);
  CalibrationMemory build() const { return CalibrationMemory(sensor_id_, words_); }

 private:
  std::string sensor_id_;
  std::array<std::uint16_t, kEepromWords> words_{};
};

/// Conventional scalar values and raw per-pixel building blocks that a
/// memory image should encode. Scalars are given in physical units and
/// are inverted through the extraction scaling with nearest-integer
/// rounding.
struct CalibrationImage {
  std::string sensor_id = "fixture";
  // supply and PTAT
  double k_vdd = 0, vdd25 = 0, kv_ptat = 0, kt_ptat = 0, v_ptat25 = 0, alpha_ptat = 8;
  double gain = 0, tgc = 0, ks_ta = 0;
  int resolution_ee = 2;
  int calibration_mode_ee = 128;
  // KsTo and corner temperatures
  std::array<double, 4> ks_to{};
  int ks_to_scale_nibble = 0;
  int temp_step = 10;  // degrees, multiple of 10 in {0..30}
  double ct2 = 0, ct3 = 0;
  // compensation pixel
  double alpha_cp0 = 0, alpha_cp1 = 0, cp_offset0 = 0, cp_offset1 = 0;
  double kv_cp = 0, kta_cp = 0;
  std::array<double, 3> il_chess{};
  // scale nibbles
  int alpha_scale_nibble = 0, acc_row_scale = 0, acc_col_scale = 0, acc_rem_scale = 0;
  int occ_row_scale = 0, occ_col_scale = 0, occ_rem_scale = 0;
  int kta_scale1_nibble = 0, kta_scale2 = 0, kv_scale_nibble = 0;
  // per-pixel decomposition (raw integers)
  std::int64_t alpha_ref = 0, offset_ref = 0;
  std::array<std::int64_t, kRows> acc_row{}, occ_row{};
  std::array<std::int64_t, kCols> acc_col{}, occ_col{};
  std::array<std::int64_t, 4> kta_avg{};  // RoCo, RoCe, ReCo, ReCe (split order)
  std::array<std::int64_t, 4> kv_avg{};   // same order
  std::vector<std::int64_t> alpha_rem = std::vector<std::int64_t>(kPixels, 0);
  std::vector<std::int64_t> offset_rem = std::vector<std::int64_t>(kPixels, 0);
  std::vector<std::int64_t> kta_rem = std::vector<std::int64_t>(kPixels, 0);
  std::vector<bool> outlier = std::vector<bool>(kPixels, false);
};

CalibrationMemory inverse_encode(const CalibrationImage& image);

}  // namespace uqsense
