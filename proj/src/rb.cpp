#include "robustpulse/rb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "robustpulse/fitting.hpp"
#include "robustpulse/parallel.hpp"
#include "robustpulse/quantum.hpp"
#include "robustpulse/rng.hpp"

namespace robustpulse {

CMatrix2 rz(double a) {
  CMatrix2 m;
  m << std::polar(1.0, -0.5 * a), 0.0, 0.0, std::polar(1.0, 0.5 * a);
  return m;
}

CMatrix2 rx(double a) {
  const double c = std::cos(0.5 * a), s = std::sin(0.5 * a);
  CMatrix2 m;
  m << c, Complex(0.0, -s), Complex(0.0, -s), c;
  return m;
}

CMatrix2 u3(double theta, double phi, double lambda) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  CMatrix2 m;
  m << c, -std::polar(s, lambda), std::polar(s, phi), std::polar(c, phi + lambda);
  return m;
}

CMatrix2 schedule_unitary(const Schedule& s) {
  CMatrix2 u = CMatrix2::Identity();
  for (const auto& op : s) u = (op.kind == GateOp::Kind::virtual_z ? rz(op.angle) : rx(op.angle)) * u;
  return u;
}

double phase_insensitive_distance(const CMatrix2& a, const CMatrix2& b) {
  return 1.0 - std::abs((a.adjoint() * b).trace()) / 2.0;
}

Schedule u3_decompose(double theta, double phi, double lambda) {
  return {GateOp::vz(lambda), GateOp::x(kPi / 2), GateOp::vz(theta),
          GateOp::vz(kPi),    GateOp::x(kPi / 2), GateOp::vz(-kPi),
          GateOp::vz(phi)};
}

namespace {

std::string unitary_key(const CMatrix2& u) {
  Complex ref = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(u(k % 2, k / 2)) > 1e-6) {
      ref = u(k % 2, k / 2);
      break;
    }
  }
  const Complex phase = std::conj(ref) / std::abs(ref);
  std::ostringstream os;
  for (int k = 0; k < 4; ++k) {
    const Complex z = u(k % 2, k / 2) * phase;
    os << std::llround(z.real() * 1e6) << ',' << std::llround(z.imag() * 1e6) << ';';
  }
  return os.str();
}

}  // namespace

CliffordTable::CliffordTable() {
  const std::array<double, 4> zs = {0.0, kPi / 2, kPi, -kPi / 2};
  const std::array<double, 2> xs = {kPi / 2, kPi};
  struct Candidate {
    Schedule ops;
    int driven, vz;
  };
  std::vector<Candidate> cands;
  auto push = [&](Schedule ops) {
    Schedule kept;
    int driven = 0;
    for (const auto& op : ops) {
      if (op.kind == GateOp::Kind::virtual_z && op.angle == 0.0) continue;
      driven += op.kind == GateOp::Kind::driven_x;
      kept.push_back(op);
    }
    cands.push_back({kept, driven, static_cast<int>(kept.size()) - driven});
  };
  for (double a : zs) push({GateOp::vz(a)});
  for (double a : zs)
    for (double x : xs)
      for (double b : zs) push({GateOp::vz(a), GateOp::x(x), GateOp::vz(b)});
  for (double a : zs)
    for (double x1 : xs)
      for (double b : zs)
        for (double x2 : xs)
          for (double c : zs) push({GateOp::vz(a), GateOp::x(x1), GateOp::vz(b), GateOp::x(x2), GateOp::vz(c)});
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
    return std::tie(l.driven, l.vz) < std::tie(r.driven, r.vz);
  });

  std::map<std::string, int> seen;
  for (const auto& c : cands) {
    const CMatrix2 u = schedule_unitary(c.ops);
    const std::string key = unitary_key(u);
    if (seen.count(key)) continue;
    seen[key] = static_cast<int>(elements_.size());
    elements_.push_back({static_cast<int>(elements_.size()), u, c.ops});
  }
  if (elements_.size() != 24) throw NumericError("Clifford search did not find 24 elements");

  table_.resize(24);
  inverse_.assign(24, -1);
  for (int a = 0; a < 24; ++a) {
    for (int b = 0; b < 24; ++b) {
      const int k = find(elements_[b].unitary * elements_[a].unitary);
      if (k < 0) throw NumericError("Clifford group is not closed");
      table_[a][b] = k;
      if (k == 0) inverse_[a] = b;
    }
  }
}

int CliffordTable::find(const CMatrix2& u) const {
  for (const auto& e : elements_)
    if (phase_insensitive_distance(e.unitary, u) < 1e-9) return e.index;
  return -1;
}

const CliffordTable& clifford_table() {
  static const CliffordTable table;
  return table;
}

RBSequence random_sequence(int length, std::mt19937_64& rng) {
  if (length < 0) throw ArgumentError("sequence length must be non-negative");
  const auto& table = clifford_table();
  std::uniform_int_distribution<int> pick(0, 23);
  RBSequence s;
  s.length = length;
  int total = 0;
  for (int j = 0; j < length; ++j) {
    const int c = pick(rng);
    s.clifford_indices.push_back(c);
    total = table.compose(total, c);
  }
  s.recovery_index = table.inverse(total);
  for (int c : s.clifford_indices)
    for (const auto& op : table[c].decomposition) s.schedule.push_back(op);
  for (const auto& op : table[s.recovery_index].decomposition) s.schedule.push_back(op);
  return s;
}

CMatrix2 sequence_unitary(const RBSequence& s) { return schedule_unitary(s.schedule); }

std::vector<int> default_rb_lengths() { return {1, 2, 4, 8, 16, 32, 64}; }

GammaFit gamma_analysis(const std::vector<double>& x) {
  GammaFit g;
  const std::size_t n = x.size();
  if (n < 2) {
    g.note = "fewer than two samples";
    return g;
  }
  g.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    m2 += (v - g.mean) * (v - g.mean);
    m3 += std::pow(v - g.mean, 3);
  }
  m2 /= n;
  m3 /= n;
  // spread below rounding of the mean counts as constant
  const bool constant = !(m2 > 1e-24 * g.mean * g.mean);
  g.variance = constant ? 0.0 : m2;
  g.skewness = constant ? 0.0 : m3 / std::pow(m2, 1.5);
  if (constant) {
    g.note = "degenerate: constant samples";
    return g;
  }
  if (*std::min_element(x.begin(), x.end()) <= 0.0) {
    g.note = "degenerate: non-positive infidelity samples";
    return g;
  }
  double mean_log = 0.0;
  for (double v : x) mean_log += std::log(v);
  mean_log /= n;
  const double s = std::log(g.mean) - mean_log;
  double k = g.mean * g.mean / m2;
  // Newton on log k - digamma(k) = s
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(k) - boost::math::digamma(k) - s;
    const double df = 1.0 / k - boost::math::trigamma(k);
    double next = k - f / df;
    if (!(next > 0.0)) next = 0.5 * k;
    if (std::abs(next - k) < 1e-12 * k) {
      k = next;
      break;
    }
    k = next;
  }
  g.shape = k;
  g.scale = g.mean / k;
  g.valid = std::isfinite(k) && k > 0.0;
  if (!g.valid) g.note = "maximum-likelihood refinement failed";
  return g;
}

DecayFit fit_rb_decay(const std::vector<int>& lengths, const std::vector<double>& y,
                      std::optional<double> asymptote) {
  if (lengths.size() != y.size() || lengths.size() < 3)
    throw FitError("RB decay fit needs at least three lengths");
  if (asymptote && !(*asymptote >= 0.0 && *asymptote <= 1.0)) throw ArgumentError("RB asymptote must lie in [0, 1]");
  const std::size_t n = lengths.size();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi - *lo < 1e-12) {
    const double b = asymptote.value_or(0.5 * (*lo + *hi));
    return {std::clamp(0.5 * (*lo + *hi) - b, 0.0, 1.0), 1.0, b, true};
  }
  auto linear = [&](double p, double& a, double& b) {
    if (asymptote) {
      double num = 0.0, den = 0.0, r = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double pj = std::pow(p, lengths[k]);
        num += pj * (y[k] - *asymptote);
        den += pj * pj;
      }
      a = std::clamp(den > 0.0 ? num / den : 0.0, 0.0, 1.0);
      b = *asymptote;
      for (std::size_t k = 0; k < n; ++k) r += std::pow(a * std::pow(p, lengths[k]) + b - y[k], 2);
      return r;
    }
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd v(n);
    for (std::size_t k = 0; k < n; ++k) {
      m(k, 0) = std::pow(p, lengths[k]);
      m(k, 1) = 1.0;
      v(k) = y[k];
    }
    Eigen::Vector2d c = m.colPivHouseholderQr().solve(v);
    if (c(0) < 0.0 || c(0) > 1.0 || c(1) < 0.0 || c(1) > 1.0) {
      c(0) = std::clamp(c(0), 0.0, 1.0);
      c(1) = std::clamp((v - m.col(0) * c(0)).mean(), 0.0, 1.0);
      c(0) = std::clamp(m.col(0).dot(v - Eigen::VectorXd::Constant(n, c(1))) / m.col(0).squaredNorm(), 0.0, 1.0);
    }
    a = c(0);
    b = c(1);
    return (m * c - v).squaredNorm();
  };
  double best_p = 0.5, best = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 2000; ++k) {
    const double p = 1.0 - std::pow(10.0, -4.0 * k / 2000.0);
    double a, b;
    const double r = linear(p, a, b);
    if (r < best) {
      best = r;
      best_p = p;
    }
  }
  double a0, b0;
  linear(best_p, a0, b0);
  if (asymptote) {
    ResidualFunction g = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
      r.resize(n);
      jac.resize(n, 2);
      for (std::size_t k = 0; k < n; ++k) {
        const double pj = std::pow(x(1), lengths[k]);
        r(k) = x(0) * pj + b0 - y[k];
        jac(k, 0) = pj;
        jac(k, 1) = lengths[k] == 0 ? 0.0 : x(0) * lengths[k] * std::pow(x(1), lengths[k] - 1);
      }
    };
    auto res = levenberg_marquardt(g, Eigen::Vector2d(a0, best_p), Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    DecayFit out{res.x(0), res.x(1), b0, res.converged};
    if (!std::isfinite(out.p) || !std::isfinite(out.a)) out.converged = false;
    return out;
  }
  ResidualFunction f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(n);
    jac.resize(n, 3);
    for (std::size_t k = 0; k < n; ++k) {
      const double pj = std::pow(x(1), lengths[k]);
      r(k) = x(0) * pj + x(2) - y[k];
      jac(k, 0) = pj;
      jac(k, 1) = lengths[k] == 0 ? 0.0 : x(0) * lengths[k] * std::pow(x(1), lengths[k] - 1);
      jac(k, 2) = 1.0;
    }
  };
  auto res = levenberg_marquardt(f, Eigen::Vector3d(a0, best_p, b0), Eigen::Vector3d(0.0, 0.0, 0.0),
                                 Eigen::Vector3d(1.0, 1.0, 1.0));
  DecayFit out{res.x(0), res.x(1), res.x(2), res.converged};
  if (!std::isfinite(out.p) || !std::isfinite(out.a) || !std::isfinite(out.b)) out.converged = false;
  return out;
}

namespace {

class SuperopCache {
 public:
  SuperopCache(const PulseSet& pulses, const DeviceModel& device, int qubit, const RBNoise& noise)
      : pulses_(pulses), device_(device), qubit_(qubit) {
    realization_ = NoiseRealization::lo_offset_mhz(noise.detuning_khz * 1e-3);
    realization_.eps_common = noise.amplitude_error;
    realization_.include_t1 = noise.t1;
    for (int which = 0; which < 2; ++which)
      for (int q = 0; q < 4; ++q) quarter_[which][q] = compute(which, q * kPi / 2);
  }

  // which: 0 = x90, 1 = x180
  CMatrix get(int which, double frame) const {
    const double q = frame / (kPi / 2);
    const long r = std::lround(q);
    if (std::abs(q - r) < 1e-9) return quarter_[which][((r % 4) + 4) % 4];
    return compute(which, frame);
  }

 private:
  CMatrix compute(int which, double frame) const {
    const Waveform& w = which == 0 ? pulses_.x90 : pulses_.x180;
    return pulse_superoperator(w.scaled(std::polar(1.0, -frame)), realization_, device_, qubit_);
  }

  const PulseSet& pulses_;
  const DeviceModel& device_;
  int qubit_;
  NoiseRealization realization_;
  std::array<std::array<CMatrix, 4>, 2> quarter_;
};

CMatrix depolarizing_superoperator(double p, int d) {
  // rho -> (1 - p) rho + p tr(rho) I_2 / 2 on the qubit block
  CMatrix s = (1.0 - p) * CMatrix::Identity(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < 2; ++k) s(k * d + k, i * d + i) += p / 2.0;
  return s;
}

double survival_with(const SuperopCache& cache, const CMatrix& depol, const RBSequence& s,
                     const PulseSet& pulses, const DeviceModel& device, double visibility) {
  const int d = device.levels;
  CMatrix v = vec(basis_state(d, 0));
  const auto& table = clifford_table();
  double frame = 0.0;
  auto play = [&](const Schedule& ops) {
    for (const auto& op : ops) {
      if (op.kind == GateOp::Kind::virtual_z) {
        frame += op.angle;
        continue;
      }
      const double a = op.angle;
      if (std::abs(a - kPi / 2) < 1e-12) {
        v = cache.get(0, frame) * v;
      } else if (std::abs(a - kPi) < 1e-12) {
        if (pulses.x180_from_x90) {
          v = cache.get(0, frame) * v;
          v = cache.get(0, frame) * v;
        } else {
          v = cache.get(1, frame) * v;
        }
      } else if (std::abs(a + kPi / 2) < 1e-12) {
        v = cache.get(0, frame + kPi) * v;
      } else {
        throw ArgumentError("pulse set only provides X(pi/2) and X(pi)");
      }
    }
  };
  if (depol.size() > 0) {
    // the channel acts at Clifford boundaries, so the Clifford list drives playback
    for (int c : s.clifford_indices) {
      play(table[c].decomposition);
      v = depol * v;
    }
    play(table[s.recovery_index].decomposition);
    v = depol * v;
  } else {
    play(s.schedule);
  }
  const CMatrix rho = unvec(v, d);
  return 1.0 - visibility * (1.0 - rho(0, 0).real());
}

}  // namespace

double sequence_survival(const RBSequence& s, const PulseSet& pulses, const DeviceModel& device,
                         int qubit, const RBNoise& noise) {
  device.validate();
  const SuperopCache cache(pulses, device, qubit, noise);
  const CMatrix depol = noise.depolarizing_per_clifford > 0.0
                            ? depolarizing_superoperator(2.0 * noise.depolarizing_per_clifford, device.levels)
                            : CMatrix();
  return survival_with(cache, depol, s, pulses, device, device.readout_visibility);
}

RBReport run_rb(const PulseSet& pulses, const DeviceModel& device, int qubit,
                const RBOptions& options, std::uint64_t seed) {
  device.validate();
  if (options.lengths.size() < 3) throw ArgumentError("RB needs at least three lengths");
  for (int j : options.lengths)
    if (j < 1) throw ArgumentError("RB lengths must be positive");
  if (options.sequences_per_length < 1) throw ArgumentError("RB needs at least one sequence per length");
  if (options.shots < 0) throw ArgumentError("shots must be non-negative");
  const double r = options.noise.depolarizing_per_clifford;
  if (!(r >= 0.0 && r <= 0.5)) throw ArgumentError("depolarizing rate must lie in [0, 0.5]");

  RBReport rep;
  rep.lengths = options.lengths;
  rep.shots = options.shots;
  if (options.sequences_per_length < 10)
    rep.warnings.push_back("fewer than 10 sequences per length: distribution statistics are unreliable");

  const SuperopCache cache(pulses, device, qubit, options.noise);
  const CMatrix depol = r > 0.0 ? depolarizing_superoperator(2.0 * r, device.levels) : CMatrix();
  const std::size_t nl = options.lengths.size();
  const std::size_t k = options.sequences_per_length;
  rep.survival.assign(nl, std::vector<double>(k));
  parallel_for(nl * k, [&](std::size_t idx) {
    const std::size_t li = idx / k, si = idx % k;
    const int length = options.lengths[li];
    auto rng = make_stream(seed, "rb", {static_cast<std::uint64_t>(length), si});
    const RBSequence s = random_sequence(length, rng);
    const double p = survival_with(cache, depol, s, pulses, device, device.readout_visibility);
    rep.survival[li][si] = sample_fraction(p, options.shots, rng);
  });

  for (std::size_t li = 0; li < nl; ++li) {
    const auto& v = rep.survival[li];
    rep.mean_survival.push_back(std::accumulate(v.begin(), v.end(), 0.0) / v.size());
    std::vector<double> inf(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) inf[s] = 1.0 - v[s];
    rep.gamma.push_back(gamma_analysis(inf));
  }
  rep.fit = fit_rb_decay(rep.lengths, rep.mean_survival, 1.0 - 0.5 * device.readout_visibility);
  rep.epc = (1.0 - rep.fit.p) / 2.0;
  if (!rep.fit.converged) rep.warnings.push_back("RB decay fit did not converge");
  return rep;
}

}  // namespace robustpulse
