#include "robustpulse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "robustpulse/calibration.hpp"
#include "robustpulse/io.hpp"
#include "robustpulse/metrology.hpp"
#include "robustpulse/optimizer.hpp"
#include "robustpulse/rb.hpp"
#include "robustpulse/rng.hpp"

namespace robustpulse::cli {

namespace fs = std::filesystem;

namespace {

// Options that name files rather than describe the experiment; they do not
// enter the config hash so relocated runs stay byte-identical.
const std::set<std::string> kPathOptions = {"help", "config", "output-dir", "out", "campaign-dir"};

std::string option_name(const CLI::Option* opt) {
  return opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
}

Json option_values(const CLI::App& app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = option_name(opt);
    if (kPathOptions.count(name)) continue;
    std::vector<std::string> v = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (v.empty() && !opt->get_default_str().empty()) v = {opt->get_default_str()};
    if (opt->count() == 0 && v.empty()) continue;
    j[name] = v.size() == 1 ? Json(v.front()) : Json(v);
  }
  return j;
}

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    Json j = option_values(*app);
    for (const CLI::App* sub : app->get_subcommands())
      if (sub->parsed()) j[sub->get_name()] = option_values(*sub);
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      input >> j;
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> out;
    collect(j, "", {}, out);
    return out;
  }

 private:
  static std::string scalar(const Json& v, const std::string& name) {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      return buf;
    }
    if (v.is_string()) return v.get<std::string>();
    throw CLI::ConversionError("unsupported value for config key '" + name + "'");
  }

  static void collect(const Json& j, const std::string& name, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) collect(*it, it.key(), parents, out);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = parents;
    if (j.is_array())
      for (const auto& v : j) item.inputs.push_back(scalar(v, name));
    else
      item.inputs = {scalar(j, name)};
    out.push_back(std::move(item));
  }
};

struct Context {
  std::uint64_t seed = 1;
  fs::path out_dir;
  DeviceModel device;
  int qubit = 0;
  std::string hash;
  std::ostream* out = nullptr;
};

CsvTable new_table(const Context& ctx, const std::string& kind, std::vector<std::string> columns) {
  CsvTable t;
  t.set_meta("schema", "robustpulse/" + std::to_string(kCsvSchemaVersion));
  t.set_meta("kind", kind);
  t.set_meta("config_hash", ctx.hash);
  t.set_meta("seed", std::to_string(ctx.seed));
  t.columns = std::move(columns);
  return t;
}

std::string fmt(double v) { return format_double(v); }

std::string opt_fmt(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

void check_qubit(const Context& ctx, int q) {
  if (q < 0 || q >= ctx.device.qubit_count())
    throw ArgumentError("qubit " + std::to_string(q) + " is not on device '" + ctx.device.name + "'");
}

// ---- optimize ----

struct Target {
  double theta = kPi;
  double phi = 0.0;
};

Target parse_target(const std::string& s) {
  if (s == "rx:pi") return {kPi, 0.0};
  if (s == "rx:pi2") return {kPi / 2, 0.0};
  if (s.rfind("custom:", 0) == 0) {
    const std::string body = s.substr(7);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ArgumentError("custom target needs <theta>,<phi>");
    return {parse_double(body.substr(0, comma)), parse_double(body.substr(comma + 1))};
  }
  throw ArgumentError("unknown target '" + s + "' (rx:pi, rx:pi2 or custom:<theta>,<phi>)");
}

FilterKind parse_filter(const std::string& s) {
  if (s == "sinc") return FilterKind::sinc;
  if (s == "bound-slew") return FilterKind::bound_slew;
  if (s == "none") return FilterKind::none;
  throw ArgumentError("unknown filter '" + s + "'");
}

struct OptimizeArgs {
  std::string target = "rx:pi";
  std::string mode = "dephasing";
  double duration_ns = 0.0;
  int segments = 0;
  int samples_per_segment = 16;
  double cutoff_mhz = 30.0;
  std::string filter = "sinc";
  double slew_max = 0.0;
  double omega_max_mhz = 0.0;
  int restarts = 8;
  int max_iterations = 2000;
  double lambda = 1.0;
  std::string label;
};

// Default duration as a multiple of the device pi-pulse duration; robust
// rotations need the same compensating area for every angle.
double default_duration(const DeviceModel& d, RobustnessMode m, double theta) {
  if (m == RobustnessMode::none) return d.pi_duration_ns * theta / kPi;
  return (m == RobustnessMode::dephasing ? 2.0 : 2.4) * d.pi_duration_ns;
}

OptimizationResult do_optimize(const Context& ctx, const OptimizeArgs& a, const fs::path& out,
                               std::uint64_t seed) {
  check_qubit(ctx, ctx.qubit);
  const Target t = parse_target(a.target);
  OptimizationSpec spec;
  spec.mode = parse_robustness_mode(a.mode);
  spec.ensemble = make_ensemble(spec.mode);
  spec.target = target_rotation(t.theta, t.phi, 2);
  spec.constraints.omega_max = a.omega_max_mhz > 0.0 ? angular_from_mhz(a.omega_max_mhz) : ctx.device.omega_max;
  spec.constraints.cutoff_mhz = a.cutoff_mhz;
  spec.constraints.filter = parse_filter(a.filter);
  spec.constraints.slew_max = a.slew_max;
  if (a.segments > 0) {
    spec.grid = hardware_grid(a.segments, a.samples_per_segment);
  } else {
    const double dur = a.duration_ns > 0.0 ? a.duration_ns : default_duration(ctx.device, spec.mode, t.theta);
    spec.grid = grid_for_duration(dur, a.samples_per_segment);
  }
  spec.restarts = a.restarts;
  spec.max_iterations = a.max_iterations;
  spec.lambda = a.lambda;
  spec.seed = seed;
  spec.label = a.label.empty() ? a.mode : a.label;
  const OptimizationResult r = optimize(spec);
  save_waveform(out, r.waveform);

  CsvTable cost = new_table(ctx, "cost_history", {"iteration", "cost"});
  cost.set_meta("final_operational_infidelity", fmt(r.final_operational_infidelity));
  cost.set_meta("final_robust_infidelity", fmt(r.final_robust_infidelity));
  cost.set_meta("best_restart", std::to_string(r.best_restart));
  for (std::size_t k = 0; k < r.cost_history.size(); ++k)
    cost.add_row({std::to_string(k), fmt(r.cost_history[k])});
  fs::path cost_path = out;
  cost_path.replace_filename(out.stem().string() + "_cost.csv");
  write_csv(cost_path, cost);
  return r;
}

// ---- scan ----

struct ScanArgs {
  std::string target = "rx:pi";
  double detuning_max_mhz = 1.0;
  double amplitude_max = 0.2;
  int points = 21;
};

RobustnessMap do_scan(const Context& ctx, const Waveform& w, const ScanArgs& a, const fs::path& out) {
  check_qubit(ctx, ctx.qubit);
  if (a.points < 1) throw ArgumentError("scan needs at least one point per axis");
  const Target t = parse_target(a.target);
  const auto det = a.points == 1 ? std::vector<double>{0.0} : linspace(-a.detuning_max_mhz, a.detuning_max_mhz, a.points);
  const auto amp = a.points == 1 ? std::vector<double>{0.0} : linspace(-a.amplitude_max, a.amplitude_max, a.points);
  const RobustnessMap m = scan_robustness(w, target_rotation(t.theta, t.phi, ctx.device.levels), det, amp,
                                          ctx.device, ctx.qubit);
  CsvTable csv = new_table(ctx, "robustness_scan",
                           {"lo_offset_mhz", "amplitude_error", "detuning_percent", "amplitude_percent", "infidelity"});
  csv.set_meta("pulse", w.label());
  for (std::size_t i = 0; i < det.size(); ++i)
    for (std::size_t j = 0; j < amp.size(); ++j)
      csv.add_row({fmt(m.lo_offsets_mhz[i]), fmt(m.amplitude_errors[j]), fmt(m.detuning_percent[i]),
                   fmt(m.amplitude_percent[j]), fmt(m.infidelity[i][j])});
  write_csv(out, csv);
  return m;
}

// ---- amplify ----

struct AmplifyArgs {
  std::vector<std::string> modes = {"serial"};
  int days = 1;
  int qubits = 0;
  int shots = 1024;
  int max_reps = 41;
  bool fix_p1 = false;
  bool no_t1 = false;
};

Json fit_to_json(const FitResult& f) {
  return {{"model", to_string(f.model)},  {"p1", f.p1},
          {"eps_r", f.eps_r},             {"eps_r_sd", f.eps_r_sd()},
          {"beta", f.beta},               {"beta_sd", f.beta_sd()},
          {"eps", f.eps},                 {"t1_estimate_us", f.t1_estimate * 1e-3},
          {"aicc", f.aicc},               {"rss", f.rss},
          {"points", f.points},           {"converged", f.converged},
          {"warnings", f.warnings}};
}

const std::vector<std::string> kCampaignColumns = {
    "pulse", "mode", "day", "qubit", "model", "p1", "eps_r", "eps_r_sd", "beta", "beta_sd", "eps",
    "aicc_exp_cos", "aicc_gauss_cos", "gate_ns", "t1_fit_us", "device_t1_us"};

std::vector<CampaignCell> do_amplify(const Context& ctx,
                                     const std::vector<std::pair<std::string, Waveform>>& pulses,
                                     const AmplifyArgs& a, std::uint64_t seed) {
  if (a.days < 1) throw ArgumentError("--days must be at least 1");
  if (a.max_reps < 3 || a.max_reps % 2 == 0) throw ArgumentError("--max-reps must be an odd number >= 3");
  CampaignSpec spec;
  spec.pulses = pulses;
  spec.modes.clear();
  for (const auto& m : a.modes) spec.modes.push_back(parse_execution_mode(m));
  spec.days = a.days;
  const int nq = a.qubits > 0 ? a.qubits : ctx.device.qubit_count();
  if (nq > ctx.device.qubit_count()) throw ArgumentError("--qubits exceeds the device qubit count");
  for (int q = 0; q < nq; ++q) spec.qubits.push_back(q);
  spec.setup.shots = a.shots;
  spec.setup.include_t1 = !a.no_t1;
  spec.setup.repetitions.clear();
  for (int n = 1; n <= a.max_reps; n += 2) spec.setup.repetitions.push_back(n);
  spec.fit.fix_p1 = a.fix_p1;
  const auto cells = run_campaign(spec, ctx.device, seed);

  CsvTable records = new_table(ctx, "amplification_records", {"pulse", "mode", "day", "qubit", "n", "p1"});
  records.set_meta("shots", std::to_string(a.shots));
  CsvTable campaign = new_table(ctx, "campaign", kCampaignColumns);
  campaign.set_meta("device", ctx.device.name);
  campaign.set_meta("days", std::to_string(a.days));
  campaign.set_meta("qubits", std::to_string(nq));
  Json fits = Json::array();
  for (const auto& c : cells) {
    const std::string mode = to_string(c.mode);
    for (std::size_t k = 0; k < c.record.repetitions.size(); ++k)
      records.add_row({c.pulse, mode, std::to_string(c.day), std::to_string(c.qubit),
                       std::to_string(c.record.repetitions[k]), fmt(c.record.probabilities[k])});
    const FitResult& b = c.fits.best();
    campaign.add_row({c.pulse, mode, std::to_string(c.day), std::to_string(c.qubit), to_string(b.model),
                      fmt(b.p1), fmt(b.eps_r), fmt(b.eps_r_sd()), fmt(b.beta), fmt(b.beta_sd()), fmt(b.eps),
                      fmt(c.fits.exp_cos.aicc), fmt(c.fits.gauss_cos.aicc), fmt(c.record.gate_duration_ns),
                      fmt(b.t1_estimate * 1e-3), fmt(ctx.device.qubits[c.qubit].t1 * 1e-3)});
    fits.push_back({{"pulse", c.pulse},
                    {"mode", mode},
                    {"day", c.day},
                    {"qubit", c.qubit},
                    {"selected", to_string(c.fits.selected)},
                    {"exp_cos", fit_to_json(c.fits.exp_cos)},
                    {"gauss_cos", fit_to_json(c.fits.gauss_cos)}});
  }
  write_csv(ctx.out_dir / "amplify_records.csv", records);
  write_csv(ctx.out_dir / "campaign.csv", campaign);
  write_json(ctx.out_dir / "amplify_fits.json", {{"config_hash", ctx.hash}, {"cells", fits}});

  for (const auto& [label, w] : pulses) {
    for (ExecutionMode m : spec.modes) {
      const ErrorGrid g = campaign_grid(cells, label, m, a.days, nq);
      const VariabilityReport rep = variability_report(g);
      CsvTable v = new_table(ctx, "variability",
                             {"day", "qubit", "eps_r", "beta", "eps", "day_mean", "day_sd", "qubit_mean", "qubit_sd"});
      v.set_meta("pulse", label);
      v.set_meta("mode", to_string(m));
      v.set_meta("grand_mean", fmt(rep.grand_mean));
      v.set_meta("mean_sigma_t", fmt(rep.mean_sigma_t));
      v.set_meta("mean_sigma_q", fmt(rep.mean_sigma_q));
      v.set_meta("missing", std::to_string(rep.missing));
      for (const auto& c : cells) {
        if (c.pulse != label || c.mode != m) continue;
        const FitResult& b = c.fits.best();
        v.add_row({std::to_string(c.day), std::to_string(c.qubit), fmt(b.eps_r), fmt(b.beta), fmt(b.eps),
                   opt_fmt(rep.day_mean[c.day]), opt_fmt(rep.day_sd[c.day]),
                   opt_fmt(rep.qubit_mean[c.qubit]), opt_fmt(rep.qubit_sd[c.qubit])});
      }
      write_csv(ctx.out_dir / ("variability_" + label + "_" + to_string(m) + ".csv"), v);
    }
  }
  return cells;
}

// ---- rb ----

RBReport do_rb(const Context& ctx, const PulseSet& set, const RBOptions& o, const std::string& prefix,
               std::uint64_t seed) {
  check_qubit(ctx, ctx.qubit);
  const RBReport r = run_rb(set, ctx.device, ctx.qubit, o, seed);
  CsvTable raw = new_table(ctx, "rb_raw", {"J", "seq_index", "survival"});
  raw.set_meta("shots", std::to_string(o.shots));
  for (std::size_t l = 0; l < r.lengths.size(); ++l)
    for (std::size_t s = 0; s < r.survival[l].size(); ++s)
      raw.add_row({std::to_string(r.lengths[l]), std::to_string(s), fmt(r.survival[l][s])});
  write_csv(ctx.out_dir / (prefix + "_raw.csv"), raw);

  CsvTable gamma = new_table(ctx, "rb_gamma", {"J", "mean_survival", "mean_infidelity", "variance", "skewness",
                                               "shape", "scale", "valid"});
  for (std::size_t l = 0; l < r.lengths.size(); ++l) {
    const GammaFit& g = r.gamma[l];
    gamma.add_row({std::to_string(r.lengths[l]), fmt(r.mean_survival[l]), fmt(g.mean), fmt(g.variance),
                   fmt(g.skewness), g.valid ? fmt(g.shape) : "NA", g.valid ? fmt(g.scale) : "NA",
                   g.valid ? "1" : "0"});
  }
  write_csv(ctx.out_dir / (prefix + "_gamma.csv"), gamma);

  write_json(ctx.out_dir / (prefix + "_fit.json"),
             {{"config_hash", ctx.hash},
              {"model", "A p^J + B"},
              {"A", r.fit.a},
              {"p", r.fit.p},
              {"B", r.fit.b},
              {"epc", r.epc},
              {"converged", r.fit.converged},
              {"warnings", r.warnings}});
  if (!r.fit.converged)
    throw FitError("RB decay fit did not converge; raw data kept in " + (ctx.out_dir / (prefix + "_raw.csv")).string());
  return r;
}

PulseSet default_pulse_set(const DeviceModel& d) {
  const double t90 = 0.5 * d.pi_duration_ns;
  PulseSet s;
  s.x90 = drag_waveform(kPi / 2, t90, 0.0, grid_for_duration(t90, 1)).with_label("default_x90");
  s.x180 = drag_waveform(kPi, d.pi_duration_ns, 0.0, grid_for_duration(d.pi_duration_ns, 1)).with_label("default");
  s.x180_from_x90 = true;
  return s;
}

// ---- calibrate ----

struct CalibrateArgs {
  int shots = 4096;
  int coarse_shots = 4096;
  std::vector<int> reps = {5, 9};
  int passes = 2;
  bool orthogonality = false;
};

CalibrationRun do_calibrate(const Context& ctx, const FrontEndModel& fe, const CalibrateArgs& a,
                            std::uint64_t seed) {
  CalibrationOptions o;
  o.coarse.shots = a.coarse_shots;
  o.fine.shots = a.shots;
  o.fine.repetitions = a.reps;
  o.fine.passes = a.passes;
  o.fine.orthogonality = a.orthogonality;
  const CalibrationRun run = calibrate(fe, default_probe(), o, seed);

  auto map_json = [](const MonotoneMap& m) {
    Json pts = Json::array();
    for (std::size_t k = 0; k < m.amplitudes().size(); ++k)
      pts.push_back({{"amplitude", m.amplitudes()[k]}, {"rate_mhz", mhz_from_angular(m.rates()[k])}});
    return pts;
  };
  write_json(ctx.out_dir / "calibration.json",
             {{"config_hash", ctx.hash},
              {"s_amp", run.result.s_amp},
              {"s_rel", run.result.s_rel},
              {"skew", run.result.skew},
              {"residual_infidelity_estimate", run.result.residual_infidelity_estimate},
              {"amp_map", {{"I", map_json(run.result.amp_map.i)}, {"Q", map_json(run.result.amp_map.q)}}}});

  CsvTable rabi = new_table(ctx, "rabi_fits", {"channel", "amplitude", "rate_mhz", "contrast", "floor"});
  for (const auto& p : run.coarse.points)
    rabi.add_row({to_string(p.channel), fmt(p.amplitude), fmt(mhz_from_angular(p.fit.rate)), fmt(p.fit.contrast),
                  fmt(p.fit.floor)});
  write_csv(ctx.out_dir / "calibration_rabi.csv", rabi);

  CsvTable scan = new_table(ctx, "calibration_scan", {"parameter", "pass", "s", "reps", "fidelity"});
  for (const auto& p : run.fine.scan)
    scan.add_row({p.parameter, std::to_string(p.pass), fmt(p.value), std::to_string(p.repetitions), fmt(p.fidelity)});
  write_csv(ctx.out_dir / "calibration_scan.csv", scan);
  return run;
}

// ---- report ----

struct CampaignRow {
  std::string pulse, mode;
  int day = 0, qubit = 0;
  double eps = 0.0, beta = 0.0, gate_ns = 0.0, t1_fit_us = 0.0, device_t1_us = 0.0;
};

std::string do_report(const Context& ctx, const fs::path& campaign_dir, const fs::path& out_dir) {
  const CsvTable t = read_csv(campaign_dir / "campaign.csv");
  std::vector<CampaignRow> rows;
  int days = 0, qubits = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CampaignRow c;
    c.pulse = t.rows[r][t.column("pulse")];
    c.mode = t.rows[r][t.column("mode")];
    c.day = static_cast<int>(t.number(r, "day"));
    c.qubit = static_cast<int>(t.number(r, "qubit"));
    c.eps = t.number(r, "eps");
    c.beta = t.number(r, "beta");
    c.gate_ns = t.number(r, "gate_ns");
    c.t1_fit_us = t.number(r, "t1_fit_us");
    c.device_t1_us = t.number(r, "device_t1_us");
    if (c.day < 0 || c.qubit < 0) throw IoError("campaign.csv has negative indices");
    days = std::max(days, c.day + 1);
    qubits = std::max(qubits, c.qubit + 1);
    rows.push_back(c);
  }
  if (!t.meta_value("days").empty()) days = std::max(days, static_cast<int>(parse_double(t.meta_value("days"))));
  if (!t.meta_value("qubits").empty())
    qubits = std::max(qubits, static_cast<int>(parse_double(t.meta_value("qubits"))));

  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& c : rows)
    if (std::find(keys.begin(), keys.end(), std::make_pair(c.pulse, c.mode)) == keys.end())
      keys.emplace_back(c.pulse, c.mode);

  auto grid_of = [&](const std::string& pulse, const std::string& mode) {
    ErrorGrid g(days, std::vector<std::optional<double>>(qubits));
    for (const auto& c : rows)
      if (c.pulse == pulse && c.mode == mode) g[c.day][c.qubit] = c.eps;
    return g;
  };
  auto matrix = [&](const std::string& kind, const ErrorGrid& g, const std::string& pulse, const std::string& mode) {
    std::vector<std::string> cols = {"day"};
    for (int q = 0; q < qubits; ++q) cols.push_back("q" + std::to_string(q));
    CsvTable m = new_table(ctx, kind, cols);
    m.set_meta("pulse", pulse);
    m.set_meta("mode", mode);
    for (int d = 0; d < days; ++d) {
      std::vector<std::string> row = {std::to_string(d)};
      for (int q = 0; q < qubits; ++q) row.push_back(opt_fmt(g[d][q]));
      m.add_row(row);
    }
    return m;
  };

  std::ostringstream summary;
  summary << "campaign: " << rows.size() << " cells, " << days << " day(s) x " << qubits << " qubit(s)\n";
  int missing_total = 0;
  for (const auto& [pulse, mode] : keys) {
    const ErrorGrid g = grid_of(pulse, mode);
    write_csv(out_dir / ("eps_" + pulse + "_" + mode + ".csv"), matrix("eps_matrix", g, pulse, mode));
    const VariabilityReport rep = variability_report(g);
    missing_total += rep.missing;
    summary << pulse << " " << mode << ": mean eps " << fmt(rep.grand_mean) << ", <sigma_t>_q "
            << fmt(rep.mean_sigma_t) << ", <sigma_q>_t " << fmt(rep.mean_sigma_q) << ", missing " << rep.missing
            << "\n";
    if (pulse == "default") continue;
    const auto def = std::find(keys.begin(), keys.end(), std::make_pair(std::string("default"), mode));
    if (def == keys.end()) continue;
    const ErrorGrid ratio = reduction_ratios(grid_of("default", mode), g);
    write_csv(out_dir / ("ratio_" + pulse + "_" + mode + ".csv"), matrix("reduction_ratio", ratio, pulse, mode));
  }
  summary << "missing cells (NA): " << missing_total << "\n";

  CsvTable t1 = new_table(ctx, "t1_comparison",
                          {"pulse", "mode", "day", "qubit", "gate_ns", "beta", "t1_fit_us", "device_t1_us", "ratio"});
  for (const auto& c : rows)
    t1.add_row({c.pulse, c.mode, std::to_string(c.day), std::to_string(c.qubit), fmt(c.gate_ns), fmt(c.beta),
                fmt(c.t1_fit_us), fmt(c.device_t1_us), c.device_t1_us > 0 ? fmt(c.t1_fit_us / c.device_t1_us) : "NA"});
  write_csv(out_dir / "t1_comparison.csv", t1);
  write_text(out_dir / "report_summary.txt", summary.str());
  return summary.str();
}

DeviceModel load_device(const std::string& preset, const std::string& device_file) {
  if (!device_file.empty()) return device_from_json(read_json(device_file));
  return device_preset(preset);
}

std::vector<int> parse_int_list(const std::vector<std::string>& items) {
  std::vector<int> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      const double v = parse_double(tok);
      if (v != std::floor(v)) throw ArgumentError("expected an integer, got '" + tok + "'");
      out.push_back(static_cast<int>(v));
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust single-qubit pulse design, calibration and benchmarking", "robustpulse"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (top-level and per-subcommand blocks)");

  std::uint64_t seed = 1;
  std::string preset = "valencia-like", device_file, output_dir = "out";
  int qubit = 0;
  app.add_option("--seed", seed, "Root random seed");
  app.add_option("--preset", preset, "Device preset")->check(CLI::IsMember({"valencia-like", "armonk-like"}));
  app.add_option("--device", device_file, "Device model JSON (overrides --preset)");
  app.add_option("--output-dir", output_dir, "Artifact directory");
  app.add_option("--qubit", qubit, "Target qubit");

  OptimizeArgs opt;
  std::string opt_out;
  auto* c_opt = app.add_subcommand("optimize", "Optimize a robust pulse");
  c_opt->add_option("--target", opt.target, "rx:pi, rx:pi2 or custom:<theta>,<phi>");
  c_opt->add_option("--mode", opt.mode, "Robustness mode")->check(CLI::IsMember({"none", "dephasing", "amplitude", "dual"}));
  c_opt->add_option("--duration-ns", opt.duration_ns, "Pulse duration (0 = mode default)");
  c_opt->add_option("--segments", opt.segments, "Segment count n1 (overrides --duration-ns)");
  c_opt->add_option("--samples-per-segment", opt.samples_per_segment, "Samples per segment n2");
  c_opt->add_option("--cutoff-mhz", opt.cutoff_mhz, "Sinc filter cutoff");
  c_opt->add_option("--filter", opt.filter, "Filter")->check(CLI::IsMember({"sinc", "bound-slew", "none"}));
  c_opt->add_option("--slew-max", opt.slew_max, "Slew bound (rad/ns^2) for bound-slew");
  c_opt->add_option("--omega-max", opt.omega_max_mhz, "Drive ceiling in MHz (0 = device)");
  c_opt->add_option("--restarts", opt.restarts, "Random restarts");
  c_opt->add_option("--max-iterations", opt.max_iterations, "Iterations per restart");
  c_opt->add_option("--lambda", opt.lambda, "Weight of the robustness term");
  c_opt->add_option("--out", opt_out, "Waveform JSON path");

  ScanArgs scan;
  std::string scan_wf, scan_out;
  auto* c_scan = app.add_subcommand("scan", "Infidelity map over detuning and amplitude error");
  c_scan->add_option("--waveform", scan_wf, "Waveform JSON")->required();
  c_scan->add_option("--target", scan.target, "Target rotation");
  c_scan->add_option("--detuning-max-mhz", scan.detuning_max_mhz, "LO-offset half range");
  c_scan->add_option("--amplitude-max", scan.amplitude_max, "Amplitude-error half range");
  c_scan->add_option("--points", scan.points, "Points per axis");
  c_scan->add_option("--out", scan_out, "Scan CSV path");

  AmplifyArgs amp;
  std::string amp_wf;
  std::string amp_mode = "serial";
  auto* c_amp = app.add_subcommand("amplify", "Repeated-pulse error amplification campaign");
  c_amp->add_option("--waveform", amp_wf, "Waveform JSON (default: device DRAG pulse)");
  c_amp->add_option("--mode", amp_mode, "serial, parallel or both")->check(CLI::IsMember({"serial", "parallel", "both"}));
  c_amp->add_option("--days", amp.days, "Synthetic campaign days");
  c_amp->add_option("--qubits", amp.qubits, "Number of qubits (0 = all)");
  c_amp->add_option("--shots", amp.shots, "Shots per point");
  c_amp->add_option("--max-reps", amp.max_reps, "Largest odd repetition count");
  c_amp->add_flag("--fix-p1", amp.fix_p1, "Hold P(1) at the first data point");
  c_amp->add_flag("--no-t1", amp.no_t1, "Disable amplitude damping");

  RBOptions rbo;
  std::string rb_x90, rb_x180;
  std::vector<std::string> rb_lengths;
  bool rb_no_t1 = false, rb_compose = false;
  auto* c_rb = app.add_subcommand("rb", "Clifford randomized benchmarking");
  c_rb->add_option("--x90", rb_x90, "X(pi/2) waveform JSON (default: device DRAG)");
  c_rb->add_option("--x180", rb_x180, "X(pi) waveform JSON (default: two X(pi/2))");
  c_rb->add_option("--lengths", rb_lengths, "Sequence lengths (comma separated)");
  c_rb->add_option("--seqs-per-length", rbo.sequences_per_length, "Random sequences per length");
  c_rb->add_option("--shots", rbo.shots, "Shots per sequence");
  c_rb->add_option("--detuning-khz", rbo.noise.detuning_khz, "Quasi-static LO offset");
  c_rb->add_option("--amplitude-error", rbo.noise.amplitude_error, "Fixed over-rotation");
  c_rb->add_option("--depolarizing", rbo.noise.depolarizing_per_clifford, "Injected error per Clifford");
  c_rb->add_flag("--no-t1", rb_no_t1, "Disable amplitude damping");
  c_rb->add_flag("--compose-x180", rb_compose, "Play X(pi) as two X(pi/2)");

  CalibrateArgs cal;
  std::string fe_file;
  std::vector<std::string> cal_reps;
  auto* c_cal = app.add_subcommand("calibrate", "Coarse and fine front-end calibration");
  c_cal->add_option("--front-end", fe_file, "Front-end model JSON (default: random hidden scales from --seed)");
  c_cal->add_option("--shots", cal.shots, "Shots per fine-scan point");
  c_cal->add_option("--coarse-shots", cal.coarse_shots, "Shots per Rabi point");
  c_cal->add_option("--reps", cal_reps, "Odd repetition counts (comma separated)");
  c_cal->add_option("--passes", cal.passes, "Fine-scan passes");
  c_cal->add_flag("--orthogonality", cal.orthogonality, "Also scan the I/Q skew");

  std::string report_dir;
  auto* c_rep = app.add_subcommand("report", "Matrices and T1 comparison from a campaign directory");
  c_rep->add_option("--campaign-dir", report_dir, "Directory holding campaign.csv (default: --output-dir)");

  int pl_days = 2, pl_restarts = 8, pl_shots = 1024;
  double pl_rb_detuning = 100.0;
  auto* c_pipe = app.add_subcommand("pipeline", "optimize, scan, amplify, rb, calibrate and report");
  c_pipe->add_option("--days", pl_days, "Synthetic campaign days");
  c_pipe->add_option("--restarts", pl_restarts, "Optimizer restarts");
  c_pipe->add_option("--shots", pl_shots, "Shots per amplification point");
  c_pipe->add_option("--seqs-per-length", rbo.sequences_per_length, "RB sequences per length");
  c_pipe->add_option("--rb-detuning-khz", pl_rb_detuning, "RB quasi-static LO offset");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    Context ctx;
    ctx.seed = seed;
    ctx.out_dir = output_dir;
    ctx.device = load_device(preset, device_file);
    ctx.qubit = qubit;
    ctx.out = &out;
    ctx.hash = config_hash(Json::parse(app.config_to_str(true, false)));

    if (c_opt->parsed()) {
      const fs::path path = opt_out.empty() ? ctx.out_dir / "optimized.json" : fs::path(opt_out);
      const auto r = do_optimize(ctx, opt, path, derive_seed(seed, "optimize"));
      out << "optimize: mode=" << opt.mode << " duration_ns=" << fmt(r.waveform.duration())
          << " cost=" << fmt(r.final_cost) << " infidelity=" << fmt(r.final_operational_infidelity)
          << " -> " << path.string() << "\n";
    } else if (c_scan->parsed()) {
      const Waveform w = load_waveform(scan_wf);
      const fs::path path = scan_out.empty() ? ctx.out_dir / "scan.csv" : fs::path(scan_out);
      const auto m = do_scan(ctx, w, scan, path);
      double worst = 0.0;
      for (const auto& row : m.infidelity) worst = std::max(worst, *std::max_element(row.begin(), row.end()));
      out << "scan: " << m.lo_offsets_mhz.size() << "x" << m.amplitude_errors.size()
          << " max_infidelity=" << fmt(worst) << " -> " << path.string() << "\n";
    } else if (c_amp->parsed()) {
      const Waveform w = amp_wf.empty() ? default_pulse_set(ctx.device).x180 : load_waveform(amp_wf);
      amp.modes = amp_mode == "both" ? std::vector<std::string>{"serial", "parallel"} : std::vector<std::string>{amp_mode};
      const std::string label = w.label().empty() ? "pulse" : w.label();
      const auto cells = do_amplify(ctx, {{label, w}}, amp, derive_seed(seed, "amplify"));
      double mean = 0.0;
      for (const auto& c : cells) mean += c.fits.best().eps / cells.size();
      out << "amplify: " << cells.size() << " cells, mean eps=" << fmt(mean) << " -> "
          << ctx.out_dir.string() << "\n";
    } else if (c_rb->parsed()) {
      PulseSet set = default_pulse_set(ctx.device);
      if (!rb_x90.empty()) set.x90 = load_waveform(rb_x90);
      if (!rb_x180.empty()) {
        set.x180 = load_waveform(rb_x180);
        set.x180_from_x90 = false;
      }
      if (rb_compose) set.x180_from_x90 = true;
      if (!rb_lengths.empty()) rbo.lengths = parse_int_list(rb_lengths);
      rbo.noise.t1 = !rb_no_t1;
      const auto r = do_rb(ctx, set, rbo, "rb", derive_seed(seed, "rb"));
      out << "rb: p=" << fmt(r.fit.p) << " epc=" << fmt(r.epc) << " -> " << ctx.out_dir.string() << "\n";
    } else if (c_cal->parsed()) {
      const FrontEndModel fe = fe_file.empty() ? FrontEndModel::random(derive_seed(seed, "front_end"))
                                               : front_end_from_json(read_json(fe_file));
      if (!cal_reps.empty()) cal.reps = parse_int_list(cal_reps);
      const auto r = do_calibrate(ctx, fe, cal, derive_seed(seed, "calibrate"));
      out << "calibrate: s_amp=" << fmt(r.result.s_amp) << " s_rel=" << fmt(r.result.s_rel)
          << " residual=" << fmt(r.result.residual_infidelity_estimate) << " -> " << ctx.out_dir.string() << "\n";
    } else if (c_rep->parsed()) {
      const fs::path dir = report_dir.empty() ? ctx.out_dir : fs::path(report_dir);
      const std::string s = do_report(ctx, dir, ctx.out_dir / "report");
      out << "report: " << s.substr(0, s.find('\n')) << " -> " << (ctx.out_dir / "report").string() << "\n";
    } else if (c_pipe->parsed()) {
      const fs::path pulses_dir = ctx.out_dir / "pulses";
      std::vector<std::pair<std::string, Waveform>> pulses;
      const PulseSet def = default_pulse_set(ctx.device);
      pulses.emplace_back("default", def.x180);
      save_waveform(pulses_dir / "default.json", def.x180);
      save_waveform(pulses_dir / "default_x90.json", def.x90);
      std::map<std::string, Waveform> optimized;
      int k = 0;
      for (const std::string mode : {"dephasing", "amplitude", "dual"}) {
        OptimizeArgs a;
        a.mode = mode;
        a.restarts = pl_restarts;
        const auto r = do_optimize(ctx, a, pulses_dir / (mode + ".json"), derive_seed(seed, "optimize", {std::uint64_t(k++)}));
        pulses.emplace_back(mode, r.waveform.with_label(mode));
        optimized[mode] = r.waveform;
      }
      OptimizeArgs half;
      half.mode = "dephasing";
      half.target = "rx:pi2";
      half.restarts = pl_restarts;
      half.label = "dephasing_x90";
      const auto r90 = do_optimize(ctx, half, pulses_dir / "dephasing_x90.json", derive_seed(seed, "optimize", {3}));

      for (const auto& [label, w] : pulses) {
        do_scan(ctx, w, ScanArgs{}, ctx.out_dir / ("scan_" + label + ".csv"));
        write_csv(ctx.out_dir / ("spectrum_" + label + ".csv"), spectrum_table(spectrum(w, ctx.device, ctx.qubit)));
      }

      AmplifyArgs a;
      a.modes = {"serial", "parallel"};
      a.days = pl_days;
      a.shots = pl_shots;
      const auto cells = do_amplify(ctx, pulses, a, derive_seed(seed, "amplify"));

      rbo.noise.detuning_khz = pl_rb_detuning;
      const auto rb_def = do_rb(ctx, def, rbo, "rb_default", derive_seed(seed, "rb", {0}));
      PulseSet robust{r90.waveform, optimized.at("dephasing"), false};
      const auto rb_rob = do_rb(ctx, robust, rbo, "rb_dephasing", derive_seed(seed, "rb", {1}));

      const auto calr = do_calibrate(ctx, FrontEndModel::random(derive_seed(seed, "front_end")), CalibrateArgs{},
                                     derive_seed(seed, "calibrate"));
      do_report(ctx, ctx.out_dir, ctx.out_dir / "report");
      out << "pipeline: " << pulses.size() << " pulses, " << cells.size() << " campaign cells, epc default="
          << fmt(rb_def.epc) << " dephasing=" << fmt(rb_rob.epc) << ", s_amp=" << fmt(calr.result.s_amp)
          << " -> " << ctx.out_dir.string() << "\n";
    }
    return 0;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace robustpulse::cli
