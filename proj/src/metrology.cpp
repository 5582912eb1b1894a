#include "robustpulse/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "robustpulse/fitting.hpp"
#include "robustpulse/parallel.hpp"
#include "robustpulse/rng.hpp"

namespace robustpulse {

std::string to_string(ExecutionMode m) { return m == ExecutionMode::serial ? "serial" : "parallel"; }
std::string to_string(DecayModel m) { return m == DecayModel::exp_cos ? "exp_cos" : "gauss_cos"; }

ExecutionMode parse_execution_mode(const std::string& s) {
  if (s == "serial") return ExecutionMode::serial;
  if (s == "parallel") return ExecutionMode::parallel;
  throw ArgumentError("unknown execution mode '" + s + "'");
}

DecayModel parse_decay_model(const std::string& s) {
  if (s == "exp_cos") return DecayModel::exp_cos;
  if (s == "gauss_cos") return DecayModel::gauss_cos;
  throw ArgumentError("unknown decay model '" + s + "'");
}

std::vector<int> default_repetitions() {
  std::vector<int> n;
  for (int k = 1; k <= 41; k += 2) n.push_back(k);
  return n;
}

void AmplificationRecord::validate() const {
  if (repetitions.size() != probabilities.size())
    throw ArgumentError("record has mismatched repetition and probability counts");
  for (std::size_t i = 0; i < repetitions.size(); ++i) {
    if (repetitions[i] <= 0 || repetitions[i] % 2 == 0)
      throw ArgumentError("repetition counts must be positive odd integers");
    if (i > 0 && repetitions[i] <= repetitions[i - 1])
      throw ArgumentError("repetition counts must be strictly increasing");
    if (!(probabilities[i] >= 0.0 && probabilities[i] <= 1.0))
      throw ArgumentError("probabilities must lie in [0, 1]");
  }
  if (shots < 0) throw ArgumentError("shots must be non-negative");
}

NoiseRealization draw_quasi_static_noise(const DeviceModel& device, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double f = device.drift.detuning_sd_mhz * nd(rng);
  const double e = device.drift.amplitude_sd * nd(rng);
  NoiseRealization n = NoiseRealization::lo_offset_mhz(f);
  n.eps_common = e;
  return n;
}

AmplificationRecord run_amplification(const Waveform& w, const DeviceModel& device, int qubit,
                                      const AmplificationSetup& setup, std::uint64_t seed) {
  device.validate();
  if (qubit < 0 || qubit >= device.qubit_count()) throw ArgumentError("qubit out of range");
  AmplificationRecord rec;
  rec.qubit = qubit;
  rec.pulse_label = w.label();
  rec.gate_duration_ns = w.duration();
  rec.repetitions = setup.repetitions;
  rec.shots = setup.shots;
  rec.mode = setup.mode;
  rec.probabilities.assign(setup.repetitions.size(), 0.0);
  rec.validate();
  if (rec.repetitions.empty()) throw ArgumentError("no repetition counts");

  auto rng = make_stream(seed, "amplify");
  NoiseRealization noise = setup.noise ? *setup.noise : draw_quasi_static_noise(device, rng);
  noise.include_t1 = setup.include_t1;
  const int d = device.levels;

  std::vector<std::vector<double>> phase_sets{{}};
  std::vector<int> sources;
  if (setup.mode == ExecutionMode::parallel) {
    sources = device.neighbors(qubit);
    const int p = std::max(1, setup.phase_points);
    for (std::size_t s = 0; s < sources.size(); ++s) {
      std::vector<std::vector<double>> next;
      for (const auto& base : phase_sets)
        for (int j = 0; j < p; ++j) {
          auto v = base;
          v.push_back(kTwoPi * j / p);
          next.push_back(std::move(v));
        }
      phase_sets = std::move(next);
    }
  }

  const int n_max = rec.repetitions.back();
  std::vector<std::vector<double>> pops(phase_sets.size(), std::vector<double>(rec.repetitions.size()));
  parallel_for(phase_sets.size(), [&](std::size_t c) {
    std::vector<NeighborDrive> drives;
    for (std::size_t s = 0; s < sources.size(); ++s)
      drives.push_back({sources[s], w, phase_sets[c][s]});
    DriveCorrection corr;
    if (!drives.empty()) corr = crosstalk_noise(drives, device, qubit, w.size());
    const CMatrix sop = pulse_superoperator(w, noise, device, qubit, drives.empty() ? nullptr : &corr);
    CMatrix v = vec(basis_state(d, 0));
    std::size_t next = 0;
    for (int n = 1; n <= n_max && next < rec.repetitions.size(); ++n) {
      v = sop * v;
      if (n == rec.repetitions[next]) pops[c][next++] = unvec(v, d)(1, 1).real();
    }
  });
  for (std::size_t i = 0; i < rec.repetitions.size(); ++i) {
    double p = 0.0;
    for (const auto& row : pops) p += row[i];
    p = device.readout_visibility * p / pops.size();
    auto shot_rng = make_stream(seed, "amplify-shots", {static_cast<std::uint64_t>(i)});
    rec.probabilities[i] = sample_fraction(p, setup.shots, shot_rng);
  }
  return rec;
}

AmplificationRecord run_amplification(const Waveform& w, const DeviceModel& device, int qubit,
                                      const std::vector<int>& n_list, int shots,
                                      ExecutionMode mode, std::uint64_t seed) {
  AmplificationSetup setup;
  setup.repetitions = n_list;
  setup.shots = shots;
  setup.mode = mode;
  return run_amplification(w, device, qubit, setup, seed);
}

double decay_model(DecayModel model, double p1, double eps_r, double beta, int n) {
  const double x = beta * n;
  const double env = model == DecayModel::exp_cos ? std::exp(-x) : std::exp(-x * x);
  return 0.5 * p1 * (1.0 - std::cos(kPi + n * eps_r) * env);
}

namespace {

struct Prepared {
  std::vector<double> n;
  std::vector<double> y;
};

// Model value and partials w.r.t. (p1, eps_r, beta).
void model_and_partials(DecayModel model, double p1, double e, double b, double n, double& m,
                        double& dp, double& de, double& db) {
  const double c = std::cos(n * e);
  const double s = std::sin(n * e);
  double env, denv;
  if (model == DecayModel::exp_cos) {
    env = std::exp(-b * n);
    denv = -n * env;
  } else {
    env = std::exp(-(b * n) * (b * n));
    denv = -2.0 * b * n * n * env;
  }
  // cos(pi + n e) = -cos(n e)
  m = 0.5 * p1 * (1.0 + c * env);
  dp = 0.5 * (1.0 + c * env);
  de = -0.5 * p1 * n * s * env;
  db = 0.5 * p1 * c * denv;
}

double aicc(double rss, int n, int k) {
  // residuals at rounding level are treated as exactly equal
  const double r = std::max(rss, n * 1e-24);
  double a = n * std::log(r / n) + 2.0 * k;
  if (n - k - 1 > 0) a += 2.0 * k * (k + 1) / static_cast<double>(n - k - 1);
  return a;
}

}  // namespace

FitResult fit_decay(const AmplificationRecord& record, DecayModel model, const FitOptions& options) {
  record.validate();
  const int np = static_cast<int>(record.repetitions.size());
  if (np < 6)
    throw ArgumentError("decay fit needs at least 6 repetition points, got " + std::to_string(np));
  const double p1_init = std::clamp(record.probabilities.front(), 1e-3, 1.0);
  const bool weighted = record.shots > 0;
  const double shots = record.shots;
  std::vector<double> n(np), y(np);
  for (int i = 0; i < np; ++i) {
    n[i] = record.repetitions[i];
    y[i] = record.probabilities[i];
  }
  std::vector<double> sigma(np, 1.0);

  // Parameters: (p1, eps_r, beta); with fix_p1 the first stays at p1_init.
  auto make_fn = [&](const std::vector<double>& sig) {
    return [&, sig](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
      const int k = static_cast<int>(x.size());
      r.resize(np);
      j.resize(np, k);
      const double p1 = options.fix_p1 ? p1_init : x(0);
      const int off = options.fix_p1 ? 0 : 1;
      const double e = x(off), b = x(off + 1);
      for (int i = 0; i < np; ++i) {
        double m, dp, de, db;
        model_and_partials(model, p1, e, b, n[i], m, dp, de, db);
        r(i) = (m - y[i]) / sig[i];
        if (!options.fix_p1) j(i, 0) = dp / sig[i];
        j(i, off) = de / sig[i];
        j(i, off + 1) = db / sig[i];
      }
    };
  };
  const int k = options.fix_p1 ? 2 : 3;
  Eigen::VectorXd lo(k), hi(k);
  if (!options.fix_p1) {
    lo(0) = 0.0;
    hi(0) = 1.0;
  }
  lo(k - 2) = 0.0;
  hi(k - 2) = kPi;
  lo(k - 1) = 0.0;
  hi(k - 1) = std::numeric_limits<double>::infinity();

  // Starting points: coarse scan over (eps_r, beta) with the optimal linear P(1).
  struct Start {
    double rss, p1, e, b;
  };
  std::vector<Start> starts;
  const double n_max = n.back();
  std::vector<double> b_grid{0.0};
  for (double b = 1e-4; b < 3.0 / n_max; b *= 1.5) b_grid.push_back(b);
  const int e_steps = 720;
  for (int ie = 0; ie <= e_steps; ++ie) {
    const double e = 0.5 * kPi * ie / e_steps;
    for (double b : b_grid) {
      double sfy = 0.0, sff = 0.0;
      std::vector<double> f(np);
      for (int i = 0; i < np; ++i) {
        f[i] = decay_model(model, 1.0, e, b, static_cast<int>(n[i]));
        sfy += f[i] * y[i];
        sff += f[i] * f[i];
      }
      const double p1 = options.fix_p1 ? p1_init : std::clamp(sff > 0 ? sfy / sff : p1_init, 0.0, 1.0);
      double rss = 0.0;
      for (int i = 0; i < np; ++i) rss += (p1 * f[i] - y[i]) * (p1 * f[i] - y[i]);
      starts.push_back({rss, p1, e, b});
    }
  }
  std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.rss < b.rss; });
  std::vector<Start> picked;
  for (const auto& s : starts) {
    bool distinct = true;
    for (const auto& p : picked)
      if (std::abs(p.e - s.e) < 0.02 && std::abs(p.b - s.b) < 0.5 * std::max(p.b, s.b) + 1e-4)
        distinct = false;
    if (distinct) picked.push_back(s);
    if (picked.size() >= 4) break;
  }
  picked.push_back({0.0, p1_init, 0.0, 0.0});

  LeastSquaresOptions lso;
  lso.max_iterations = 1000;
  LeastSquaresResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& s : picked) {
    Eigen::VectorXd x0(k);
    if (!options.fix_p1) x0(0) = s.p1;
    x0(k - 2) = s.e;
    x0(k - 1) = s.b;
    auto r = levenberg_marquardt(make_fn(sigma), x0, lo, hi, lso);
    if (weighted) {
      // Iteratively reweight with binomial variances of the current model.
      for (int pass = 0; pass < 3; ++pass) {
        std::vector<double> sig(np);
        const double p1 = options.fix_p1 ? p1_init : r.x(0);
        for (int i = 0; i < np; ++i) {
          const double m = std::clamp(decay_model(model, p1, r.x(k - 2), r.x(k - 1), static_cast<int>(n[i])), 0.0, 1.0);
          sig[i] = std::sqrt((m * (1.0 - m) + 1.0 / shots) / shots);
        }
        r = levenberg_marquardt(make_fn(sig), r.x, lo, hi, lso);
        if (pass == 2) sigma = sig;
      }
    }
    if (r.cost < best.cost) best = r;
  }
  if (!std::isfinite(best.cost)) throw FitError("decay fit did not converge from any start");

  // Final weights consistent with the selected optimum.
  if (weighted) {
    const double p1 = options.fix_p1 ? p1_init : best.x(0);
    for (int i = 0; i < np; ++i) {
      const double m = std::clamp(decay_model(model, p1, best.x(k - 2), best.x(k - 1), static_cast<int>(n[i])), 0.0, 1.0);
      sigma[i] = std::sqrt((m * (1.0 - m) + 1.0 / shots) / shots);
    }
    best = levenberg_marquardt(make_fn(sigma), best.x, lo, hi, lso);
  }

  FitResult fr;
  fr.model = model;
  fr.points = np;
  fr.converged = best.converged;
  fr.p1 = options.fix_p1 ? p1_init : best.x(0);
  fr.eps_r = best.x(k - 2);
  fr.beta = best.x(k - 1);
  fr.rss = best.cost;
  Eigen::MatrixXd cov = normal_inverse(best.jacobian);
  if (!weighted) cov *= best.cost / std::max(1, np - k);
  fr.covariance.setZero();
  const int off = options.fix_p1 ? 1 : 0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) fr.covariance(a + off, b + off) = cov(a, b);
  fr.eps = std::hypot(fr.eps_r, fr.beta);
  fr.t1_estimate = fr.beta > 0.0 ? record.gate_duration_ns / fr.beta
                                 : std::numeric_limits<double>::infinity();
  fr.aicc = aicc(best.cost, np, k);
  if (fr.beta == 0.0) fr.warnings.push_back("beta clamped at the boundary 0");
  if (!fr.converged) fr.warnings.push_back("least squares stopped at the iteration cap");
  return fr;
}

FitResult fit_exp_cos(const AmplificationRecord& record, const FitOptions& options) {
  return fit_decay(record, DecayModel::exp_cos, options);
}

FitResult fit_gauss_cos(const AmplificationRecord& record, const FitOptions& options) {
  return fit_decay(record, DecayModel::gauss_cos, options);
}

ModelSelection select_model(const AmplificationRecord& record, const FitOptions& options) {
  ModelSelection s;
  s.exp_cos = fit_exp_cos(record, options);
  s.gauss_cos = fit_gauss_cos(record, options);
  s.selected = s.gauss_cos.aicc < s.exp_cos.aicc ? DecayModel::gauss_cos : DecayModel::exp_cos;
  return s;
}

namespace {

struct Moments {
  std::optional<double> mean, sd;
};

Moments moments(const std::vector<double>& v) {
  if (v.empty()) return {};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / v.size())};
}

}  // namespace

VariabilityReport variability_report(const ErrorGrid& eps) {
  VariabilityReport r;
  const std::size_t days = eps.size();
  std::size_t qubits = 0;
  for (const auto& row : eps) qubits = std::max(qubits, row.size());
  std::vector<double> all;
  for (std::size_t d = 0; d < days; ++d) {
    std::vector<double> v;
    for (std::size_t q = 0; q < qubits; ++q) {
      if (q < eps[d].size() && eps[d][q]) {
        v.push_back(*eps[d][q]);
        all.push_back(*eps[d][q]);
      } else {
        ++r.missing;
      }
    }
    const auto m = moments(v);
    r.day_mean.push_back(m.mean);
    r.day_sd.push_back(m.sd);
  }
  for (std::size_t q = 0; q < qubits; ++q) {
    std::vector<double> v;
    for (std::size_t d = 0; d < days; ++d)
      if (q < eps[d].size() && eps[d][q]) v.push_back(*eps[d][q]);
    const auto m = moments(v);
    r.qubit_mean.push_back(m.mean);
    r.qubit_sd.push_back(m.sd);
  }
  if (all.empty()) throw ArgumentError("variability report needs at least one cell");
  r.grand_mean = *moments(all).mean;
  auto mean_of = [](const std::vector<std::optional<double>>& v) {
    double s = 0.0;
    int c = 0;
    for (const auto& x : v)
      if (x) {
        s += *x;
        ++c;
      }
    return c ? s / c : 0.0;
  };
  r.mean_sigma_t = mean_of(r.qubit_sd);
  r.mean_sigma_q = mean_of(r.day_sd);
  return r;
}

ErrorGrid reduction_ratios(const ErrorGrid& def, const ErrorGrid& rob) {
  ErrorGrid out(def.size());
  for (std::size_t d = 0; d < def.size(); ++d) {
    out[d].resize(def[d].size());
    for (std::size_t q = 0; q < def[d].size(); ++q) {
      if (d < rob.size() && q < rob[d].size() && def[d][q] && rob[d][q] && *rob[d][q] > 0.0)
        out[d][q] = *def[d][q] / *rob[d][q];
    }
  }
  return out;
}

std::vector<CampaignCell> run_campaign(const CampaignSpec& spec, const DeviceModel& device,
                                       std::uint64_t seed) {
  device.validate();
  if (spec.days <= 0) throw ArgumentError("campaign needs at least one day");
  std::vector<int> qubits = spec.qubits;
  if (qubits.empty())
    for (int q = 0; q < device.qubit_count(); ++q) qubits.push_back(q);
  std::vector<CampaignCell> cells;
  for (std::size_t p = 0; p < spec.pulses.size(); ++p)
    for (ExecutionMode mode : spec.modes)
      for (int day = 0; day < spec.days; ++day)
        for (int q : qubits) {
          CampaignCell c;
          c.pulse = spec.pulses[p].first;
          c.mode = mode;
          c.day = day;
          c.qubit = q;
          cells.push_back(std::move(c));
        }
  parallel_for(cells.size(), [&](std::size_t i) {
    auto& c = cells[i];
    const Waveform* w = nullptr;
    std::size_t pi = 0;
    for (; pi < spec.pulses.size(); ++pi)
      if (spec.pulses[pi].first == c.pulse) {
        w = &spec.pulses[pi].second;
        break;
      }
    AmplificationSetup setup = spec.setup;
    setup.mode = c.mode;
    if (!setup.noise) {
      auto rng = make_stream(seed, "drift", {static_cast<std::uint64_t>(c.qubit),
                                             static_cast<std::uint64_t>(c.day)});
      setup.noise = draw_quasi_static_noise(device, rng);
    }
    const auto cell_seed = derive_seed(seed, "amplify", {pi, static_cast<std::uint64_t>(c.mode),
                                                         static_cast<std::uint64_t>(c.day),
                                                         static_cast<std::uint64_t>(c.qubit)});
    c.record = run_amplification(w->with_label(c.pulse), device, c.qubit, setup, cell_seed);
    c.fits = select_model(c.record, spec.fit);
  });
  return cells;
}

ErrorGrid campaign_grid(const std::vector<CampaignCell>& cells, const std::string& pulse,
                        ExecutionMode mode, int days, int qubits) {
  ErrorGrid g(days, std::vector<std::optional<double>>(qubits));
  for (const auto& c : cells)
    if (c.pulse == pulse && c.mode == mode && c.day < days && c.qubit < qubits)
      g[c.day][c.qubit] = c.fits.best().eps;
  return g;
}

}  // namespace robustpulse
