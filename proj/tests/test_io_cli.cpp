#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "robustpulse/cli.hpp"
#include "robustpulse/io.hpp"

using namespace robustpulse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("robustpulse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST(Format, NineSignificantDigits) {
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_double(5.57e-3), "0.00557");
  EXPECT_EQ(format_double(-2.5e-12), "-2.5e-12");
  EXPECT_DOUBLE_EQ(parse_double("1.25e-3"), 1.25e-3);
  EXPECT_THROW(parse_double("abc"), IoError);
}

TEST(Csv, RoundTripKeepsMetaCommentsAndRows) {
  CsvTable t;
  t.set_meta("schema", "1");
  t.set_meta("seed", "42");
  t.comments.push_back("marker,leak,530");
  t.columns = {"a", "b"};
  t.add_row({"1", "0.5"});
  t.add_row({"2", "-3e-05"});
  const CsvTable u = parse_csv(to_csv(t));
  EXPECT_EQ(u.meta, t.meta);
  EXPECT_EQ(u.comments, t.comments);
  EXPECT_EQ(u.columns, t.columns);
  EXPECT_EQ(u.rows, t.rows);
  EXPECT_DOUBLE_EQ(u.number(1, "b"), -3e-5);
  EXPECT_EQ(u.meta_value("seed"), "42");
  EXPECT_EQ(to_csv(u), to_csv(t));
  EXPECT_THROW(t.add_row({"1"}), IoError);
}

TEST(Json, ConfigHashIgnoresKeyOrder) {
  const Json a = Json::parse(R"({"x": 1, "y": {"b": 2, "a": 3}})");
  const Json b = Json::parse(R"({"y": {"a": 3, "b": 2}, "x": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(Json::parse(R"({"x": 2})")));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Json, WaveformRoundTrip) {
  const Waveform w = drag_waveform(kPi, 70.4, 0.3, hardware_grid(20, 16)).with_label("drag");
  const fs::path dir = scratch("wf");
  save_waveform(dir / "w.json", w);
  const Waveform v = load_waveform(dir / "w.json");
  EXPECT_EQ(v.label(), "drag");
  EXPECT_EQ(v.grid().segment_count, 20);
  EXPECT_EQ(v.grid().samples_per_segment, 16);
  ASSERT_EQ(v.size(), w.size());
  for (int k = 0; k < w.size(); ++k) EXPECT_LT(std::abs(v.segments()[k] - w.segments()[k]), 1e-8 * w.max_amplitude());
  EXPECT_THROW(load_waveform(dir / "missing.json"), IoError);
}

TEST(Json, DeviceAndFrontEndRoundTrip) {
  const DeviceModel d = valencia_like();
  const DeviceModel e = device_from_json(device_to_json(d));
  ASSERT_EQ(e.qubits.size(), d.qubits.size());
  for (std::size_t q = 0; q < d.qubits.size(); ++q) {
    EXPECT_NEAR(e.qubits[q].omega, d.qubits[q].omega, 1e-9);
    EXPECT_NEAR(e.qubits[q].t1, d.qubits[q].t1, 1e-6);
  }
  EXPECT_NEAR(e.omega_max, d.omega_max, 1e-12);
  EXPECT_EQ(e.levels, d.levels);
  EXPECT_NEAR(e.crosstalk[0][1].x_coupling, d.crosstalk[0][1].x_coupling, 1e-15);
  EXPECT_EQ(device_to_json(e), device_to_json(d));

  FrontEndModel fe = FrontEndModel::random(3);
  const FrontEndModel g = front_end_from_json(front_end_to_json(fe));
  EXPECT_EQ(g.true_s_amp, fe.true_s_amp);
  EXPECT_EQ(g.g3, fe.g3);
  EXPECT_THROW(device_from_json(Json::parse(R"({"qubits": []})")), Error);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"bogus"}).code, 2);
  EXPECT_EQ(invoke({"optimize", "--mode", "sideways"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, OptimizeThenScan) {
  const fs::path dir = scratch("opt");
  const CliRun o = invoke({"--output-dir", dir.string(), "--seed", "3", "optimize", "--mode", "none", "--segments", "20",
                     "--restarts", "2", "--out", (dir / "p.json").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir / "p.json"));
  EXPECT_TRUE(fs::exists(dir / "p_cost.csv"));
  const CliRun s = invoke({"--output-dir", dir.string(), "scan", "--waveform", (dir / "p.json").string(), "--points", "5"});
  ASSERT_EQ(s.code, 0) << s.err;
  const CsvTable t = read_csv(dir / "scan.csv");
  EXPECT_EQ(t.rows.size(), 25u);
  bool center = false;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.number(r, "lo_offset_mhz") == 0.0 && t.number(r, "amplitude_error") == 0.0) {
      center = true;
      EXPECT_LT(t.number(r, "infidelity"), 1e-4);
    }
  EXPECT_TRUE(center);
  EXPECT_FALSE(t.meta_value("config_hash").empty());
}

TEST(Cli, MissingInputExitsOneAndNamesPath) {
  const fs::path dir = scratch("missing");
  const std::string bad = (dir / "nope.json").string();
  const CliRun r = invoke({"--output-dir", dir.string(), "rb", "--x90", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(bad), std::string::npos);
}

TEST(Cli, ReportOnSingleCellCampaign) {
  const fs::path dir = scratch("report");
  const CliRun a = invoke({"--output-dir", dir.string(), "--seed", "5", "amplify", "--mode", "serial", "--days", "1",
                     "--qubits", "1", "--shots", "256"});
  ASSERT_EQ(a.code, 0) << a.err;
  const CsvTable c = read_csv(dir / "campaign.csv");
  ASSERT_EQ(c.rows.size(), 1u);
  const CliRun r = invoke({"--output-dir", dir.string(), "report"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report" / "t1_comparison.csv"));
  EXPECT_TRUE(fs::exists(dir / "report" / "report_summary.txt"));
}

TEST(Cli, ConfigFileSuppliesOptionsAndFlagsOverride) {
  const fs::path dir = scratch("config");
  write_text(dir / "cfg.json", R"({"seed": 9, "calibrate": {"shots": 512, "reps": "5,9", "passes": 1}})");
  const CliRun a = invoke({"--config", (dir / "cfg.json").string(), "--output-dir", (dir / "a").string(), "calibrate"});
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = invoke({"--seed", "9", "--output-dir", (dir / "b").string(), "calibrate", "--shots", "512", "--reps",
                     "5,9", "--passes", "1"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_json(dir / "a" / "calibration.json")["s_amp"], read_json(dir / "b" / "calibration.json")["s_amp"]);
  const CliRun c = invoke({"--config", (dir / "cfg.json").string(), "--seed", "10", "--output-dir", (dir / "c").string(),
                     "calibrate"});
  ASSERT_EQ(c.code, 0) << c.err;
  const Json ja = read_json(dir / "a" / "calibration.json"), jb = read_json(dir / "b" / "calibration.json");
  EXPECT_EQ(ja["config_hash"], jb["config_hash"]);
  EXPECT_NE(read_json(dir / "c" / "calibration.json")["config_hash"], ja["config_hash"]);
}

TEST(Cli, RbRunsAreDeterministic) {
  const fs::path dir = scratch("rb");
  std::vector<std::string> args = {"--seed", "4", "rb", "--lengths", "1,4,16", "--seqs-per-length", "10"};
  auto with_dir = [&](const std::string& d) {
    auto a = args;
    a.insert(a.begin(), {"--output-dir", (dir / d).string()});
    return a;
  };
  ASSERT_EQ(invoke(with_dir("a")).code, 0);
  ASSERT_EQ(invoke(with_dir("b")).code, 0);
  EXPECT_EQ(read_text(dir / "a" / "rb_raw.csv"), read_text(dir / "b" / "rb_raw.csv"));
}
