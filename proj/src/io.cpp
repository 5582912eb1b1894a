#include "robustpulse/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace robustpulse {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double parse_double(std::string_view s) {
  const std::string str(s);
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (str.empty() || end != str.c_str() + str.size())
    throw IoError("not a number: '" + str + "'");
  return v;
}

void CsvTable::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

std::string CsvTable::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return {};
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw IoError("CSV row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == name) return k;
  throw IoError("CSV has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_double(rows.at(row).at(column(name)));
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k].find_first_of(",\n") != std::string::npos)
      throw IoError("CSV field contains a separator: '" + v[k] + "'");
    if (k) out += ',';
    out += v[k];
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const CsvTable& t) {
  std::string out;
  for (const auto& [k, v] : t.meta) out += "# " + k + ": " + v + "\n";
  for (const auto& c : t.comments) out += "# " + c + "\n";
  out += join(t.columns) + "\n";
  for (const auto& r : t.rows) out += join(r) + "\n";
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) throw IoError("CSV metadata after the header line");
      std::string body = line.substr(std::min<std::size_t>(line.size(), 2));
      const auto colon = body.find(": ");
      if (colon != std::string::npos && body.find(',') == std::string::npos)
        t.meta.emplace_back(body.substr(0, colon), body.substr(colon + 2));
      else
        t.comments.push_back(body);
      continue;
    }
    if (!header) {
      t.columns = split(line);
      header = true;
    } else {
      auto row = split(line);
      if (row.size() != t.columns.size()) throw IoError("CSV row width does not match the header");
      t.rows.push_back(std::move(row));
    }
  }
  if (!header) throw IoError("CSV has no header line");
  return t;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text(path, to_csv(table));
}

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("bad field '") + key + "': " + e.what());
  }
}

template <class T>
T field_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

}  // namespace

Json waveform_to_json(const Waveform& w) {
  Json samples = Json::array();
  for (const Complex& g : w.samples()) samples.push_back({{"i", g.real()}, {"q", g.imag()}});
  return {{"label", w.label()},
          {"dt_ns", w.grid().dt},
          {"samples_per_segment", w.grid().samples_per_segment},
          {"samples", samples}};
}

Waveform waveform_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("waveform JSON must be an object");
  const Json samples = field<Json>(j, "samples");
  if (!samples.is_array() || samples.empty()) throw IoError("waveform 'samples' must be a non-empty array");
  TimeGrid grid;
  grid.dt = field<double>(j, "dt_ns");
  grid.samples_per_segment = field_or<int>(j, "samples_per_segment", 1);
  if (grid.samples_per_segment < 1 || samples.size() % grid.samples_per_segment != 0)
    throw IoError("sample count is not a multiple of samples_per_segment");
  grid.segment_count = static_cast<int>(samples.size() / grid.samples_per_segment);
  try {
    grid.validate();
  } catch (const Error& e) {
    throw IoError(std::string("invalid waveform grid: ") + e.what());
  }
  std::vector<Complex> seg(grid.segment_count);
  for (int k = 0; k < grid.segment_count; ++k) {
    for (int m = 0; m < grid.samples_per_segment; ++m) {
      const Json& s = samples[static_cast<std::size_t>(k) * grid.samples_per_segment + m];
      const Complex g(field<double>(s, "i"), field<double>(s, "q"));
      if (m == 0)
        seg[k] = g;
      else if (g != seg[k])
        throw IoError("samples are not constant within a segment");
    }
  }
  return Waveform(grid, std::move(seg), field_or<std::string>(j, "label", ""));
}

void save_waveform(const std::filesystem::path& path, const Waveform& w) {
  write_json(path, waveform_to_json(w));
}

Waveform load_waveform(const std::filesystem::path& path) {
  try {
    return waveform_from_json(read_json(path));
  } catch (const IoError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw IoError(path.string() + ": " + msg);
  }
}

CsvTable spectrum_table(const Spectrum& sp) {
  CsvTable t;
  t.set_meta("schema", "robustpulse-spectrum/" + std::to_string(kCsvSchemaVersion));
  for (const auto& [label, f] : sp.leakage_markers) t.comments.push_back("marker," + label + "," + format_double(f));
  t.columns = {"freq_mhz", "mag_i", "mag_q"};
  for (std::size_t k = 0; k < sp.frequencies.size(); ++k)
    t.add_row({format_double(sp.frequencies[k]), format_double(sp.magnitudes_i[k]),
               format_double(sp.magnitudes_q[k])});
  return t;
}

Json device_to_json(const DeviceModel& d) {
  Json qubits = Json::array();
  for (const auto& q : d.qubits)
    qubits.push_back({{"frequency_ghz", q.omega / kTwoPi},
                      {"anharmonicity_mhz", mhz_from_angular(q.anharmonicity)},
                      {"t1_us", q.t1 * 1e-3}});
  Json xt = Json::array();
  for (std::size_t v = 0; v < d.crosstalk.size(); ++v)
    for (std::size_t s = 0; s < d.crosstalk[v].size(); ++s) {
      const auto& c = d.crosstalk[v][s];
      if (c.x_coupling != 0.0 || c.stark_coefficient != 0.0)
        xt.push_back({{"victim", v}, {"source", s}, {"x", c.x_coupling}, {"stark", c.stark_coefficient}});
    }
  return {{"name", d.name},
          {"levels", d.levels},
          {"qubits", qubits},
          {"crosstalk", xt},
          {"drift", {{"detuning_sd_mhz", d.drift.detuning_sd_mhz}, {"amplitude_sd", d.drift.amplitude_sd}}},
          {"readout_visibility", d.readout_visibility},
          {"omega_max_mhz", mhz_from_angular(d.omega_max)},
          {"pi_duration_ns", d.pi_duration_ns}};
}

DeviceModel device_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("device JSON must be an object");
  DeviceModel d;
  d.name = field_or<std::string>(j, "name", "custom");
  d.levels = field_or<int>(j, "levels", 2);
  for (const auto& q : field<Json>(j, "qubits")) {
    d.qubits.push_back({kTwoPi * field<double>(q, "frequency_ghz"),
                        angular_from_mhz(field_or<double>(q, "anharmonicity_mhz", 0.0)),
                        field<double>(q, "t1_us") * 1e3});
  }
  if (j.contains("crosstalk")) {
    const std::size_t n = d.qubits.size();
    d.crosstalk.assign(n, std::vector<CrosstalkCoupling>(n));
    for (const auto& c : j.at("crosstalk")) {
      const auto v = field<std::size_t>(c, "victim"), s = field<std::size_t>(c, "source");
      if (v >= n || s >= n) throw IoError("crosstalk entry refers to a missing qubit");
      d.crosstalk[v][s] = {field_or<double>(c, "x", 0.0), field_or<double>(c, "stark", 0.0)};
    }
  }
  if (j.contains("drift")) {
    const Json& dr = j.at("drift");
    d.drift = {field_or<double>(dr, "detuning_sd_mhz", 0.0), field_or<double>(dr, "amplitude_sd", 0.0)};
  }
  d.readout_visibility = field_or<double>(j, "readout_visibility", 1.0);
  d.omega_max = angular_from_mhz(field<double>(j, "omega_max_mhz"));
  d.pi_duration_ns = field_or<double>(j, "pi_duration_ns", 0.0);
  try {
    d.validate();
  } catch (const Error& e) {
    throw ModelError(std::string("invalid device model: ") + e.what());
  }
  return d;
}

Json front_end_to_json(const FrontEndModel& fe) {
  return {{"g1", fe.g1},
          {"g3", fe.g3},
          {"rate_scale_mhz", mhz_from_angular(fe.rate_scale)},
          {"true_s_amp", fe.true_s_amp},
          {"true_s_rel", fe.true_s_rel},
          {"offset_i", fe.offset_i},
          {"offset_q", fe.offset_q},
          {"iq_skew", fe.iq_skew},
          {"visibility", fe.visibility}};
}

FrontEndModel front_end_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("front-end JSON must be an object");
  FrontEndModel fe;
  fe.g1 = field_or(j, "g1", fe.g1);
  fe.g3 = field_or(j, "g3", fe.g3);
  fe.rate_scale = angular_from_mhz(field_or(j, "rate_scale_mhz", mhz_from_angular(fe.rate_scale)));
  fe.true_s_amp = field_or(j, "true_s_amp", fe.true_s_amp);
  fe.true_s_rel = field_or(j, "true_s_rel", fe.true_s_rel);
  fe.offset_i = field_or(j, "offset_i", fe.offset_i);
  fe.offset_q = field_or(j, "offset_q", fe.offset_q);
  fe.iq_skew = field_or(j, "iq_skew", fe.iq_skew);
  fe.visibility = field_or(j, "visibility", fe.visibility);
  fe.validate();
  return fe;
}

}  // namespace robustpulse
