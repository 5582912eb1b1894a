#include "robustpulse/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "robustpulse/parallel.hpp"
#include "robustpulse/rng.hpp"

namespace robustpulse {

RobustnessMode parse_robustness_mode(const std::string& s) {
  if (s == "none") return RobustnessMode::none;
  if (s == "dephasing") return RobustnessMode::dephasing;
  if (s == "amplitude") return RobustnessMode::amplitude;
  if (s == "dual") return RobustnessMode::dual;
  throw ArgumentError("unknown robustness mode '" + s + "'");
}

std::string to_string(RobustnessMode m) {
  switch (m) {
    case RobustnessMode::none: return "none";
    case RobustnessMode::dephasing: return "dephasing";
    case RobustnessMode::amplitude: return "amplitude";
    case RobustnessMode::dual: return "dual";
  }
  return "none";
}

std::vector<NoiseRealization> make_ensemble(RobustnessMode mode, const EnsembleGrid& grid) {
  std::vector<NoiseRealization> e{NoiseRealization{}};
  const bool deph = mode == RobustnessMode::dephasing || mode == RobustnessMode::dual;
  const bool amp = mode == RobustnessMode::amplitude || mode == RobustnessMode::dual;
  if (deph)
    for (double f : grid.lo_offsets_mhz)
      for (double s : {-1.0, 1.0}) e.push_back(NoiseRealization::lo_offset_mhz(s * f));
  if (amp)
    for (double a : grid.amplitude_errors)
      for (double s : {-1.0, 1.0}) e.push_back(NoiseRealization::amplitude(s * a));
  return e;
}

CMatrix target_rotation(double theta, double phi, int levels) {
  if (levels != 2 && levels != 3) throw ModelError("hilbert levels must be 2 or 3");
  CMatrix u = CMatrix::Identity(levels, levels);
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  const Complex mi(0.0, -1.0);
  u(0, 0) = c;
  u(1, 1) = c;
  u(0, 1) = mi * s * std::polar(1.0, -phi);
  u(1, 0) = mi * s * std::polar(1.0, phi);
  return u;
}

void OptimizationSpec::validate() const {
  grid.validate();
  constraints.validate();
  if (target.rows() != 2 || target.cols() != 2)
    throw ArgumentError("optimizer target must be a 2x2 unitary");
  if (ensemble.empty()) throw ArgumentError("optimizer ensemble is empty");
  for (const auto& n : ensemble) n.validate();
  if (mode == RobustnessMode::none) {
    if (ensemble.size() != 1 || !ensemble.front().is_zero())
      throw ArgumentError("mode none requires the zero-noise ensemble");
  }
  if (mode == RobustnessMode::dual) {
    const bool has_d = std::any_of(ensemble.begin(), ensemble.end(),
                                   [](const auto& n) { return n.delta != 0.0; });
    const bool has_a = std::any_of(ensemble.begin(), ensemble.end(), [](const auto& n) {
      return n.scale_i() != 1.0 || n.scale_q() != 1.0;
    });
    if (!has_d || !has_a)
      throw ArgumentError("dual mode needs detuning and amplitude ensemble members");
  }
  if (max_iterations <= 0 || restarts <= 0) throw ArgumentError("iteration counts must be positive");
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be non-negative");
}

namespace {

// z * tanh(|z|)/|z|, i.e. a radial squash onto the unit disk.
double squash_factor(double r) { return r < 1e-8 ? 1.0 - r * r / 3.0 : std::tanh(r) / r; }
// f'(r)/r for f(r) = tanh(r)/r.
double squash_slope(double r) {
  if (r < 1e-3) return -2.0 / 3.0 + 8.0 * r * r / 15.0;
  const double t = std::tanh(r);
  return ((1.0 - t * t) * r - t) / (r * r * r);
}

Complex squash_back(Complex z, Complex g) {
  const double r = std::abs(z);
  return squash_factor(r) * g + squash_slope(r) * (std::conj(g) * z).real() * z;
}

void check_finite(const std::vector<double>& p) {
  for (double v : p)
    if (!std::isfinite(v)) throw NumericError("non-finite optimizer parameters");
}

}  // namespace

ControlMap::ControlMap(const TimeGrid& grid, const PulseConstraints& constraints)
    : grid_(grid), constraints_(constraints) {
  grid_.validate();
  constraints_.validate();
  bound_ = constraints_.omega_max;
  if (constraints_.filter == FilterKind::sinc) {
    taps_ = sinc_kernel(constraints_.cutoff_mhz, grid_.segment_duration());
    double l1 = 0.0;
    for (double h : taps_) l1 += std::abs(h);
    bound_ = constraints_.omega_max / l1;
  } else if (constraints_.filter == FilterKind::bound_slew) {
    bound_ = constraints_.slew_max * grid_.segment_duration();
  }
}

std::vector<Complex> ControlMap::forward(const std::vector<double>& p) const {
  const int n = grid_.segment_count;
  if (static_cast<int>(p.size()) != 2 * n)
    throw ArgumentError("parameter vector must have length 2*segments");
  check_finite(p);
  std::vector<Complex> a(n);
  for (int k = 0; k < n; ++k) {
    const Complex z(p[k], p[n + k]);
    a[k] = bound_ * squash_factor(std::abs(z)) * z;
  }
  switch (constraints_.filter) {
    case FilterKind::none: return a;
    case FilterKind::sinc: {
      const int K = static_cast<int>(taps_.size()) / 2;
      std::vector<Complex> y(n);
      for (int i = 0; i < n; ++i) {
        Complex acc = 0.0;
        for (int j = std::max(0, i - K); j <= std::min(n - 1, i + K); ++j)
          acc += taps_[i - j + K] * a[j];
        y[i] = acc;
      }
      return y;
    }
    case FilterKind::bound_slew: {
      const double om = constraints_.omega_max;
      std::vector<Complex> y(n);
      Complex c = 0.0;
      for (int k = 0; k < n; ++k) {
        c += a[k];
        y[k] = c * squash_factor(std::abs(c) / om);
      }
      return y;
    }
  }
  return a;
}

std::vector<double> ControlMap::backward(const std::vector<double>& p,
                                         const std::vector<Complex>& g) const {
  const int n = grid_.segment_count;
  std::vector<Complex> ga(n);
  switch (constraints_.filter) {
    case FilterKind::none: ga = g; break;
    case FilterKind::sinc: {
      const int K = static_cast<int>(taps_.size()) / 2;
      for (int j = 0; j < n; ++j) {
        Complex acc = 0.0;
        for (int i = std::max(0, j - K); i <= std::min(n - 1, j + K); ++i)
          acc += taps_[i - j + K] * g[i];
        ga[j] = acc;
      }
      break;
    }
    case FilterKind::bound_slew: {
      const double om = constraints_.omega_max;
      std::vector<Complex> c(n);
      Complex acc = 0.0;
      for (int k = 0; k < n; ++k) {
        const Complex z(p[k], p[n + k]);
        acc += bound_ * squash_factor(std::abs(z)) * z;
        c[k] = acc;
      }
      Complex tail = 0.0;
      for (int k = n - 1; k >= 0; --k) {
        tail += squash_back(c[k] / om, g[k]);
        ga[k] = tail;
      }
      break;
    }
  }
  std::vector<double> out(2 * n);
  for (int k = 0; k < n; ++k) {
    const Complex gz = bound_ * squash_back(Complex(p[k], p[n + k]), ga[k]);
    out[k] = gz.real();
    out[n + k] = gz.imag();
  }
  return out;
}

namespace {

using M2 = Eigen::Matrix2cd;

struct Segment {
  M2 u;
  M2 du_dx;  // derivative w.r.t. the sigma_x coefficient
  M2 du_dy;
};

// exp(-i t (c0 + hx sx + hy sy + hz sz)) with c0 = -hz, plus derivatives in hx, hy.
Segment segment_unitary(double hx, double hy, double hz, double t, bool derivatives) {
  const double r2 = hx * hx + hy * hy + hz * hz;
  const double r = std::sqrt(r2);
  const double th = r * t;
  const double c = std::cos(th);
  const double s = r > 1e-300 ? std::sin(th) / r : t;
  const Complex ph = std::polar(1.0, hz * t);  // exp(-i c0 t)
  const Complex mi(0.0, -1.0);
  M2 sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, Complex(0, -1), Complex(0, 1), 0;
  sz << 1, 0, 0, -1;
  const M2 hs = hx * sx + hy * sy + hz * sz;
  Segment seg;
  seg.u = ph * (c * M2::Identity() + mi * s * hs);
  if (!derivatives) return seg;
  double q;  // (t cos - sin/r)/r^2
  if (th < 1e-4)
    q = t * t * t * (-1.0 / 3.0 + th * th / 30.0);
  else
    q = (t * c - s) / r2;
  seg.du_dx = ph * (-t * s * hx * M2::Identity() + mi * (s * sx + hx * q * hs));
  seg.du_dy = ph * (-t * s * hy * M2::Identity() + mi * (s * sy + hy * q * hs));
  return seg;
}

struct Member {
  double delta;
  double sx;
  double sy;
};

}  // namespace

CostBreakdown evaluate(const std::vector<double>& params, const OptimizationSpec& spec,
                       std::vector<double>* grad) {
  const ControlMap map(spec.grid, spec.constraints);
  const auto gamma = map.forward(params);
  const int n = spec.grid.segment_count;
  const double tau = spec.grid.segment_duration();
  const bool want = grad != nullptr;
  const M2 target = spec.target;

  std::vector<Member> members;
  for (const auto& e : spec.ensemble) members.push_back({e.delta, e.scale_i(), e.scale_q()});
  const int nm = static_cast<int>(members.size());

  auto build = [&](const Member& m, std::vector<Segment>& segs) {
    segs.resize(n);
    for (int k = 0; k < n; ++k)
      segs[k] = segment_unitary(0.5 * m.sx * gamma[k].real(), 0.5 * m.sy * gamma[k].imag(),
                                -0.25 * m.delta, tau, want);
  };
  // prefix[k] = T_{k-1}...T_0, suffix[k] = T_{n-1}...T_{k+1}
  auto chain = [&](const std::vector<Segment>& segs, std::vector<M2>& pre, std::vector<M2>& suf) {
    pre.assign(n + 1, M2::Identity());
    for (int k = 0; k < n; ++k) pre[k + 1] = segs[k].u * pre[k];
    suf.assign(n, M2::Identity());
    for (int k = n - 2; k >= 0; --k) suf[k] = suf[k + 1] * segs[k + 1].u;
  };

  std::vector<Segment> s0;
  std::vector<M2> pre0, suf0;
  build(Member{0.0, 1.0, 1.0}, s0);
  chain(s0, pre0, suf0);
  const M2 uc = pre0[n];
  const Complex ov = (target.adjoint() * uc).trace();
  const double f_op = std::norm(ov) / 4.0;

  std::vector<std::vector<Segment>> sm(nm);
  std::vector<std::vector<M2>> prem(nm), sufm(nm);
  std::vector<Complex> g(nm);
  double f_rob = 0.0;
  for (int m = 0; m < nm; ++m) {
    build(members[m], sm[m]);
    chain(sm[m], prem[m], sufm[m]);
    g[m] = (prem[m][n] * uc.adjoint()).trace();
    f_rob += std::norm(g[m]) / 4.0;
  }
  f_rob /= nm;

  CostBreakdown out;
  out.operational_fidelity = f_op;
  out.robust_fidelity = f_rob;
  out.cost = (1.0 - f_op) + spec.lambda * (1.0 - f_rob);
  if (!want) return out;

  const double w = spec.lambda / nm;
  std::vector<Complex> gamp(n);
  for (int k = 0; k < n; ++k) {
    // d(F_op + w sum F_m) = Re tr(dT0 Y0) + sum_m Re tr(dT_m Y_m)
    M2 y0 = std::conj(ov) / 2.0 * (pre0[k] * target.adjoint() * suf0[k]);
    double gx = 0.0, gy = 0.0;
    for (int m = 0; m < nm; ++m) {
      const M2 ut = prem[m][n];
      y0 += w * g[m] / 2.0 * (pre0[k] * ut.adjoint() * suf0[k]);
      const M2 ym = w * std::conj(g[m]) / 2.0 * (prem[m][k] * uc.adjoint() * sufm[m][k]);
      gx += 0.5 * members[m].sx * (sm[m][k].du_dx * ym).trace().real();
      gy += 0.5 * members[m].sy * (sm[m][k].du_dy * ym).trace().real();
    }
    gx += 0.5 * (s0[k].du_dx * y0).trace().real();
    gy += 0.5 * (s0[k].du_dy * y0).trace().real();
    gamp[k] = Complex(-gx, -gy);
  }
  *grad = map.backward(params, gamp);
  return out;
}

double cost(const std::vector<double>& params, const OptimizationSpec& spec) {
  return evaluate(params, spec).cost;
}

std::vector<double> gradient(const std::vector<double>& params, const OptimizationSpec& spec) {
  std::vector<double> g;
  evaluate(params, spec, &g);
  return g;
}

Waveform realize(const std::vector<double>& params, const OptimizationSpec& spec) {
  const ControlMap map(spec.grid, spec.constraints);
  Waveform seg(spec.grid, map.forward(params), spec.label);
  return resample_to_hardware_grid(seg, spec.grid.dt);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct RestartOutcome {
  std::vector<double> params;
  std::vector<double> history;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

RestartOutcome lbfgs(std::vector<double> x, const OptimizationSpec& spec) {
  const std::size_t n = x.size();
  const int memory = 10;
  RestartOutcome out;
  std::vector<double> g;
  double f = evaluate(x, spec, &g).cost;
  out.history.push_back(f);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  int it = 0;
  for (; it < spec.max_iterations; ++it) {
    const double gnorm = std::sqrt(dot(g, g));
    if (f < spec.cost_tolerance || gnorm < 1e-8) {
      out.converged = true;
      break;
    }
    // two-loop recursion
    std::vector<double> q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * dot(s_hist[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= alpha[i] * y_hist[i][j];
    }
    double scale = 1.0;
    if (!s_hist.empty()) scale = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (auto& v : q) v *= scale;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] += s_hist[i][j] * (alpha[i] - beta);
    }
    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = -q[j];
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
      slope = -gnorm * gnorm;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / gnorm);
    std::vector<double> xn(n), gn;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t j = 0; j < n; ++j) xn[j] = x[j] + step * d[j];
      fn = evaluate(xn, spec, &gn).cost;
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(fn < f)) break;
    std::vector<double> s(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = xn[j] - x[j];
      y[j] = gn[j] - g[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
    out.history.push_back(f);
  }
  if (!out.converged) {
    const double gnorm = std::sqrt(dot(g, g));
    out.converged = f < spec.cost_tolerance || gnorm < 1e-8;
  }
  out.params = std::move(x);
  out.cost = f;
  out.iterations = it;
  return out;
}

}  // namespace

OptimizationResult optimize(const OptimizationSpec& spec) {
  spec.validate();
  if (!spec.grid.is_hardware_compatible())
    throw ConstraintError("optimizer grid violates n1*n2 = 16m");
  const int np = spec.parameter_count();
  std::vector<RestartOutcome> runs(spec.restarts);
  parallel_for(runs.size(), [&](std::size_t r) {
    auto rng = make_stream(spec.seed, "optimize", {r});
    std::normal_distribution<double> nd(0.0, 0.5);
    std::vector<double> x0(np);
    for (auto& v : x0) v = nd(rng);
    runs[r] = lbfgs(std::move(x0), spec);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].cost < runs[best].cost) best = r;
  const auto& b = runs[best];
  const auto parts = evaluate(b.params, spec);
  OptimizationResult res;
  res.waveform = realize(b.params, spec);
  res.cost_history = b.history;
  res.final_cost = parts.cost;
  res.final_operational_infidelity = 1.0 - parts.operational_fidelity;
  res.final_robust_infidelity = 1.0 - parts.robust_fidelity;
  res.iterations_used = b.iterations;
  res.best_restart = static_cast<int>(best);
  res.converged = b.converged;
  res.params = b.params;
  if (res.waveform.max_amplitude() > spec.constraints.omega_max * (1.0 + 1e-12))
    throw ConstraintError("optimized waveform violates omega_max");
  return res;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n <= 0) throw ArgumentError("linspace needs a positive point count");
  if (n == 1) return {a};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

RobustnessMap scan_robustness(const Waveform& w, const CMatrix& target,
                              const std::vector<double>& lo_offsets_mhz,
                              const std::vector<double>& amplitude_errors,
                              const DeviceModel& device, int qubit) {
  if (lo_offsets_mhz.empty() || amplitude_errors.empty())
    throw ArgumentError("scan axes must be nonempty");
  if (qubit < 0 || qubit >= device.qubit_count()) throw ArgumentError("qubit out of range");
  RobustnessMap m;
  m.lo_offsets_mhz = lo_offsets_mhz;
  m.amplitude_errors = amplitude_errors;
  const double fq_mhz = mhz_from_angular(device.qubits[qubit].omega);
  for (double f : lo_offsets_mhz) m.detuning_percent.push_back(100.0 * f / fq_mhz);
  for (double e : amplitude_errors) m.amplitude_percent.push_back(100.0 * e);
  m.infidelity.assign(lo_offsets_mhz.size(), std::vector<double>(amplitude_errors.size()));
  parallel_for(lo_offsets_mhz.size() * amplitude_errors.size(), [&](std::size_t idx) {
    const std::size_t i = idx / amplitude_errors.size(), j = idx % amplitude_errors.size();
    NoiseRealization n;
    n.delta = delta_from_lo_offset_mhz(lo_offsets_mhz[i]);
    n.eps_common = amplitude_errors[j];
    const auto r = propagate(w, n, device, qubit);
    m.infidelity[i][j] = operational_infidelity(r.u_tot, target, 2);
  });
  return m;
}

}  // namespace robustpulse
