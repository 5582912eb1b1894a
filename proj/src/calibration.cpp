#include "robustpulse/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "robustpulse/fitting.hpp"
#include "robustpulse/parallel.hpp"
#include "robustpulse/rng.hpp"

namespace robustpulse {

std::string to_string(Channel c) { return c == Channel::i ? "I" : "Q"; }

Channel parse_channel(std::string_view s) {
  if (s == "I" || s == "i") return Channel::i;
  if (s == "Q" || s == "q") return Channel::q;
  throw ArgumentError("unknown channel '" + std::string(s) + "' (expected I or Q)");
}

double FrontEndModel::rate(Channel c, double a) const {
  const double x = a + (c == Channel::i ? offset_i : offset_q);
  return rate_scale * (g1 * x + g3 * x * x * x);
}

Complex FrontEndModel::play(Complex a) const {
  if (std::abs(a.real()) > 1.0 + 1e-12 || std::abs(a.imag()) > 1.0 + 1e-12)
    throw CalibrationError("front-end input outside [-1, 1]");
  const double ri = rate(Channel::i, a.real());
  const double rq = rate(Channel::q, a.imag());
  return true_s_amp * (true_s_rel * ri + Complex(0.0, 1.0) * std::polar(1.0, iq_skew) * rq);
}

Waveform FrontEndModel::play(const TimeGrid& grid, const std::vector<Complex>& controls,
                             const std::string& label) const {
  std::vector<Complex> out(controls.size());
  for (std::size_t k = 0; k < controls.size(); ++k) out[k] = play(controls[k]);
  return Waveform(grid, std::move(out), label);
}

void FrontEndModel::validate() const {
  if (!(g1 > 0.0)) throw ModelError("front-end g1 must be positive");
  if (!(rate_scale > 0.0)) throw ModelError("front-end rate_scale must be positive");
  // d/dA (g1 A + g3 A^3) > 0 on the shifted input range
  const double reach = 1.0 + std::max(std::abs(offset_i), std::abs(offset_q));
  if (!(g1 + 3.0 * std::min(g3, 0.0) * reach * reach > 0.0))
    throw ModelError("front-end nonlinearity is not monotone on [-1, 1]");
  if (!(true_s_amp > 0.0 && true_s_rel > 0.0)) throw ModelError("front-end scales must be positive");
  if (!(std::abs(iq_skew) < kPi / 4)) throw ModelError("front-end IQ skew must be below pi/4");
  if (!(visibility > 0.0 && visibility <= 1.0)) throw ModelError("visibility must lie in (0, 1]");
}

FrontEndModel FrontEndModel::random(std::uint64_t seed) {
  auto rng = make_stream(seed, "front_end");
  std::uniform_real_distribution<double> s(0.95, 1.05), off(-0.01, 0.01);
  FrontEndModel fe;
  fe.true_s_amp = s(rng);
  fe.true_s_rel = s(rng);
  fe.offset_i = off(rng);
  fe.offset_q = off(rng);
  return fe;
}

std::vector<double> default_rabi_durations() {
  std::vector<double> d;
  for (int k = 0; k <= 120; ++k) d.push_back(2.5 * k);
  return d;
}

std::vector<double> rabi_experiment(const FrontEndModel& fe, Channel c, double amplitude,
                                    const std::vector<double>& durations_ns, int shots,
                                    std::uint64_t seed) {
  fe.validate();
  if (std::abs(amplitude) > 1.0) throw ArgumentError("Rabi amplitude outside [-1, 1]");
  if (shots < 0) throw ArgumentError("shots must be non-negative");
  const double w = std::abs(fe.rate(c, amplitude));
  auto rng = make_stream(seed, "rabi",
                         {static_cast<std::uint64_t>(c == Channel::i ? 0 : 1),
                          static_cast<std::uint64_t>(std::llround(std::abs(amplitude) * 1e6))});
  std::vector<double> p(durations_ns.size());
  for (std::size_t k = 0; k < durations_ns.size(); ++k) {
    if (durations_ns[k] < 0.0) throw ArgumentError("Rabi durations must be non-negative");
    const double s = std::sin(0.5 * w * durations_ns[k]);
    p[k] = sample_fraction(fe.visibility * s * s, shots, rng);
  }
  return p;
}

RabiFit fit_rabi(const std::vector<double>& t, const std::vector<double>& p1) {
  if (t.size() != p1.size() || t.size() < 4) throw FitError("Rabi fit needs at least 4 points");
  const double t_max = *std::max_element(t.begin(), t.end());
  double min_step = std::numeric_limits<double>::infinity();
  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k] > sorted[k - 1]) min_step = std::min(min_step, sorted[k] - sorted[k - 1]);
  if (!(t_max > 0.0) || !std::isfinite(min_step)) throw FitError("Rabi durations are degenerate");

  const std::size_t n = t.size();
  auto linear = [&](double w, double& floor, double& contrast) {
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t k = 0; k < n; ++k) {
      a(k, 0) = 1.0;
      a(k, 1) = 0.5 * (1.0 - std::cos(w * t[k]));
      y(k) = p1[k];
    }
    Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
    floor = c(0);
    contrast = c(1);
    return (a * c - y).squaredNorm();
  };

  const double dw = kPi / (4.0 * t_max);
  const double w_hi = kPi / min_step;
  double best_w = dw, best_rss = std::numeric_limits<double>::infinity();
  for (double w = dw; w < w_hi; w += dw) {
    double f, c;
    const double rss = linear(w, f, c);
    if (c > 0.0 && rss < best_rss) {
      best_rss = rss;
      best_w = w;
    }
  }
  double f0, c0;
  linear(best_w, f0, c0);

  ResidualFunction res = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(n);
    jac.resize(n, 3);
    for (std::size_t k = 0; k < n; ++k) {
      const double c = std::cos(x(2) * t[k]), s = std::sin(x(2) * t[k]);
      r(k) = x(0) + x(1) * 0.5 * (1.0 - c) - p1[k];
      jac(k, 0) = 1.0;
      jac(k, 1) = 0.5 * (1.0 - c);
      jac(k, 2) = x(1) * 0.5 * s * t[k];
    }
  };
  Eigen::Vector3d x0(f0, c0, best_w);
  const double inf = std::numeric_limits<double>::infinity();
  auto fit = levenberg_marquardt(res, x0, Eigen::Vector3d(-inf, 0.0, 0.0),
                                 Eigen::Vector3d(inf, inf, inf));
  return {fit.x(2), fit.x(1), fit.x(0)};
}

MonotoneMap::MonotoneMap(std::vector<double> amplitudes, std::vector<double> rates) {
  if (amplitudes.size() != rates.size() || amplitudes.empty())
    throw CalibrationError("amplitude map needs matching, non-empty samples");
  std::vector<std::size_t> order(amplitudes.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return amplitudes[a] < amplitudes[b]; });
  x_ = {0.0};
  y_ = {0.0};
  for (std::size_t k : order) {
    if (!(amplitudes[k] > 0.0)) throw CalibrationError("map amplitudes must be positive");
    x_.push_back(amplitudes[k]);
    y_.push_back(rates[k]);
  }
  std::ostringstream bad;
  for (std::size_t k = 1; k < x_.size(); ++k) {
    if (!(x_[k] > x_[k - 1]) || !(y_[k] > y_[k - 1])) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " (A=%.9g, rate=%.9g)", x_[k], y_[k]);
      bad << buf;
    }
  }
  if (!bad.str().empty())
    throw CalibrationError("non-monotone Rabi-rate samples:" + bad.str());

  const std::size_t n = x_.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    d[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = d[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
    m_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return m;
  };
  m_[0] = end_slope(h[0], h[1], d[0], d[1]);
  m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

double MonotoneMap::rate(double a) const {
  if (x_.empty()) throw CalibrationError("amplitude map is empty");
  const double sign = a < 0.0 ? -1.0 : 1.0;
  a = std::abs(a);
  if (a > x_.back() * (1.0 + 1e-12))
    throw CalibrationError("amplitude outside the calibrated range");
  a = std::min(a, x_.back());
  std::size_t k = std::upper_bound(x_.begin(), x_.end(), a) - x_.begin();
  k = std::clamp<std::size_t>(k, 1, x_.size() - 1) - 1;
  const double h = x_[k + 1] - x_[k];
  const double s = (a - x_[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return sign * (h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1]);
}

double MonotoneMap::inverse(double r) const {
  if (x_.empty()) throw CalibrationError("amplitude map is empty");
  const double sign = r < 0.0 ? -1.0 : 1.0;
  r = std::abs(r);
  if (r > y_.back() * (1.0 + 1e-12)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "requested rate %.9g exceeds the calibrated maximum %.9g", r,
                  y_.back());
    throw CalibrationError(buf);
  }
  double lo = 0.0, hi = x_.back();
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < r ? lo : hi) = mid;
  }
  return sign * 0.5 * (lo + hi);
}

CoarseCalibration coarse_calibrate(const FrontEndModel& fe, const CoarseOptions& options,
                                   std::uint64_t seed) {
  fe.validate();
  if (options.amplitudes.empty()) throw ArgumentError("coarse calibration needs amplitudes");
  const std::size_t na = options.amplitudes.size();
  std::vector<RabiPoint> points(2 * na);
  parallel_for(2 * na, [&](std::size_t idx) {
    const Channel c = idx < na ? Channel::i : Channel::q;
    const double a = options.amplitudes[idx % na];
    if (!(a > 0.0 && a <= 1.0)) throw ArgumentError("coarse amplitudes must lie in (0, 1]");
    const auto p = rabi_experiment(fe, c, a, options.durations_ns, options.shots, seed);
    points[idx] = {c, a, fit_rabi(options.durations_ns, p)};
  });
  std::vector<double> ri, rq;
  for (std::size_t k = 0; k < na; ++k) {
    ri.push_back(points[k].fit.rate);
    rq.push_back(points[na + k].fit.rate);
  }
  CoarseCalibration out;
  out.map.i = MonotoneMap(options.amplitudes, ri);
  out.map.q = MonotoneMap(options.amplitudes, rq);
  out.points = std::move(points);
  return out;
}

std::vector<Complex> predistort(const CalibrationResult& cal, const Waveform& desired) {
  if (!(cal.s_amp > 0.0 && cal.s_rel > 0.0)) throw CalibrationError("calibration scales must be positive");
  const double c = std::cos(cal.skew), s = std::sin(cal.skew);
  std::vector<Complex> out(desired.segments().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Complex g = desired.segments()[k];
    const double rq = cal.s_amp * g.imag() / c;
    const double ri = cal.s_rel * cal.s_amp * (g.real() + s * g.imag() / c);
    out[k] = Complex(cal.amp_map.i.inverse(ri), cal.amp_map.q.inverse(rq));
  }
  return out;
}

double rms_relative_error(const Waveform& desired, const Waveform& actual) {
  if (desired.segments().size() != actual.segments().size())
    throw ArgumentError("waveforms differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < desired.segments().size(); ++k) {
    num += std::norm(desired.segments()[k] - actual.segments()[k]);
    den += std::norm(desired.segments()[k]);
  }
  if (!(den > 0.0)) throw ArgumentError("reference waveform is zero");
  return std::sqrt(num / den);
}

std::vector<double> default_s_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 40; ++k) g.push_back(0.90 + 0.005 * k);
  return g;
}

namespace {

// exp(-i tau (Re g sx + Im g sy) / 2)
CMatrix2 segment_unitary(Complex g, double tau) {
  const double r = std::abs(g);
  const double c = std::cos(0.5 * r * tau);
  const Complex sn = r > 0.0 ? std::sin(0.5 * r * tau) / r : 0.5 * tau;
  CMatrix2 u;
  u << c, Complex(0.0, -1.0) * sn * std::conj(g), Complex(0.0, -1.0) * sn * g, c;
  return u;
}

CMatrix2 qubit_unitary(const Waveform& w) {
  CMatrix2 u = CMatrix2::Identity();
  const double tau = w.grid().segment_duration();
  for (const Complex& g : w.segments()) u = segment_unitary(g, tau) * u;
  return u;
}

CMatrix2 played_unitary(const FrontEndModel& fe, const CalibrationResult& cal,
                        const Waveform& desired) {
  return qubit_unitary(fe.play(desired.grid(), predistort(cal, desired)));
}

CMatrix2 matrix_power(CMatrix2 u, int n) {
  CMatrix2 out = CMatrix2::Identity();
  while (n > 0) {
    if (n & 1) out = u * out;
    u = u * u;
    n >>= 1;
  }
  return out;
}

double measure_p1(const FrontEndModel& fe, const CMatrix2& u, int shots, std::mt19937_64& rng) {
  return sample_fraction(fe.visibility * std::norm(u(1, 0)), shots, rng);
}

// X(pi/2) [Y(pi) X(pi)]^n X(-pi/2), n odd, ends in |1> only when the I and Q axes are orthogonal.
double orthogonality_fidelity(const FrontEndModel& fe, const CalibrationResult& cal,
                              const Waveform& probe, int reps, int shots, std::mt19937_64& rng) {
  const CMatrix2 x90 = played_unitary(fe, cal, probe.scaled(0.5));
  const CMatrix2 xm90 = played_unitary(fe, cal, probe.scaled(-0.5));
  const CMatrix2 x180 = played_unitary(fe, cal, probe);
  const CMatrix2 y180 = played_unitary(fe, cal, probe.scaled(Complex(0.0, 1.0)));
  const CMatrix2 u = xm90 * matrix_power(x180 * y180, reps) * x90;
  return measure_p1(fe, u, shots, rng);
}

void check_repetitions(const std::vector<int>& reps) {
  std::vector<int> odd;
  for (int n : reps) {
    if (n < 1 || n % 2 == 0) throw ArgumentError("repetition counts must be positive odd integers");
    odd.push_back(n);
  }
  std::sort(odd.begin(), odd.end());
  odd.erase(std::unique(odd.begin(), odd.end()), odd.end());
  if (odd.size() < 2)
    throw ArgumentError("fine calibration needs at least two distinct odd repetition counts");
}

}  // namespace

double probe_fidelity(const FrontEndModel& fe, const CalibrationResult& cal,
                      const Waveform& probe, int reps, int shots, std::uint64_t seed) {
  auto rng = make_stream(seed, "probe", {static_cast<std::uint64_t>(reps)});
  return measure_p1(fe, matrix_power(played_unitary(fe, cal, probe), reps), shots, rng);
}

std::size_t common_maximum(const std::vector<std::vector<double>>& by_rep) {
  if (by_rep.empty() || by_rep[0].empty()) throw CalibrationError("empty calibration scan");
  const std::size_t n = by_rep[0].size();
  std::vector<double> avg(n, 0.0);
  for (const auto& row : by_rep) {
    if (row.size() != n) throw CalibrationError("ragged calibration scan");
    for (std::size_t k = 0; k < n; ++k) avg[k] += row[k] / by_rep.size();
  }
  const auto [lo, hi] = std::minmax_element(avg.begin(), avg.end());
  if (!(*hi - *lo > 1e-9)) throw CalibrationError("no common maximum: scan average is flat");
  const std::size_t best = hi - avg.begin();
  if (best == 0 || best + 1 == n)
    throw CalibrationError("no common maximum within the scan grid (peak on grid edge)");
  return best;
}

FineCalibration fine_calibrate(const FrontEndModel& fe, const CalibrationResult& coarse,
                               const Waveform& probe, const FineOptions& options,
                               std::uint64_t seed) {
  fe.validate();
  check_repetitions(options.repetitions);
  if (options.passes < 1) throw ArgumentError("fine calibration needs at least one pass");
  const std::vector<double> grid = options.s_grid.empty() ? default_s_grid() : options.s_grid;
  std::vector<double> skew_grid = options.skew_grid;
  if (skew_grid.empty())
    for (int k = -20; k <= 20; ++k) skew_grid.push_back(0.0025 * k);
  if (grid.size() < 3 || skew_grid.size() < 3) throw ArgumentError("scan grids need at least 3 points");

  CalibrationResult cal = coarse;
  FineCalibration out;
  const std::size_t nr = options.repetitions.size();
  auto scan = [&](const std::string& name, int pass, const std::vector<double>& values,
                  auto&& apply, auto&& fidelity) {
    std::vector<std::vector<double>> f(nr, std::vector<double>(values.size()));
    parallel_for(nr * values.size(), [&](std::size_t idx) {
      const std::size_t r = idx / values.size(), v = idx % values.size();
      CalibrationResult trial = cal;
      apply(trial, values[v]);
      auto rng = make_stream(seed, name, {static_cast<std::uint64_t>(pass), r, v});
      f[r][v] = fidelity(trial, options.repetitions[r], rng);
    });
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t v = 0; v < values.size(); ++v)
        out.scan.push_back({name, pass, values[v], options.repetitions[r], f[r][v]});
    return values[common_maximum(f)];
  };

  const Waveform probe_q = probe.scaled(Complex(0.0, 1.0));
  auto transfer = [&](const Waveform& p) {
    return [&fe, &p, &options](const CalibrationResult& c, int reps, std::mt19937_64& rng) {
      return measure_p1(fe, matrix_power(played_unitary(fe, c, p), reps), options.shots, rng);
    };
  };
  for (int pass = 0; pass < options.passes; ++pass) {
    cal.s_amp = scan("s_amp", pass, grid, [](CalibrationResult& c, double v) { c.s_amp = v; },
                     transfer(probe_q));
    cal.s_rel = scan("s_rel", pass, grid, [](CalibrationResult& c, double v) { c.s_rel = v; },
                     transfer(probe));
    if (options.orthogonality) {
      cal.skew = scan("skew", pass, skew_grid, [](CalibrationResult& c, double v) { c.skew = v; },
                      [&](const CalibrationResult& c, int reps, std::mt19937_64& rng) {
                        return orthogonality_fidelity(fe, c, probe, reps, options.shots, rng);
                      });
    }
  }
  out.s_amp = cal.s_amp;
  out.s_rel = cal.s_rel;
  out.skew = cal.skew;
  return out;
}

Waveform default_probe() {
  return drag_waveform(kPi, 70.4, 0.0, hardware_grid(320, 1)).with_label("probe");
}

CalibrationRun calibrate(const FrontEndModel& fe, const Waveform& probe,
                         const CalibrationOptions& options, std::uint64_t seed) {
  CalibrationRun run;
  run.coarse = coarse_calibrate(fe, options.coarse, derive_seed(seed, "coarse"));
  run.result.amp_map = run.coarse.map;
  run.fine = fine_calibrate(fe, run.result, probe, options.fine, derive_seed(seed, "fine"));
  run.result.s_amp = run.fine.s_amp;
  run.result.s_rel = run.fine.s_rel;
  run.result.skew = run.fine.skew;
  const CMatrix2 u = played_unitary(fe, run.result, probe);
  run.result.residual_infidelity_estimate = 1.0 - std::norm(u(1, 0));
  return run;
}

}  // namespace robustpulse
