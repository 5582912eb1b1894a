#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustpulse/calibration.hpp"
#include "robustpulse/device.hpp"
#include "robustpulse/pulse.hpp"

namespace robustpulse {

using Json = nlohmann::json;

inline constexpr int kCsvSchemaVersion = 1;

// Fixed 9-significant-digit rendering used by every artifact.
std::string format_double(double v);
double parse_double(std::string_view s);

// Comma-separated table with "# key: value" metadata lines above the header.
// Other '#' lines are kept verbatim in `comments`.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void set_meta(const std::string& key, const std::string& value);
  std::string meta_value(const std::string& key) const;
  void add_row(std::vector<std::string> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const Json& config);

// {"label", "dt_ns", "samples": [{"i", "q"}, ...]} on the dt grid, plus
// "samples_per_segment" so the segment structure survives a round trip.
Json waveform_to_json(const Waveform& w);
Waveform waveform_from_json(const Json& j);
void save_waveform(const std::filesystem::path& path, const Waveform& w);
Waveform load_waveform(const std::filesystem::path& path);

// freq_mhz,mag_i,mag_q rows with "# marker,<label>,<freq>" comment lines.
CsvTable spectrum_table(const Spectrum& s);

Json device_to_json(const DeviceModel& d);
DeviceModel device_from_json(const Json& j);

Json front_end_to_json(const FrontEndModel& fe);
FrontEndModel front_end_from_json(const Json& j);

}  // namespace robustpulse
