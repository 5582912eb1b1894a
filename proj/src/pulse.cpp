#include "robustpulse/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robustpulse {
namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

std::vector<double> truncated_sinc(double bandwidth_ghz, double period_ns, int half_width) {
  std::vector<double> h(2 * half_width + 1);
  for (int k = -half_width; k <= half_width; ++k)
    h[k + half_width] = sinc(2.0 * bandwidth_ghz * period_ns * k);
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("time grid dt must be positive");
  if (segment_count <= 0 || samples_per_segment <= 0)
    throw ArgumentError("time grid needs positive segment and sample counts");
}

TimeGrid hardware_grid(int segment_count, int samples_per_segment, double dt) {
  TimeGrid g{dt, segment_count, samples_per_segment};
  g.validate();
  if (!g.is_hardware_compatible())
    throw ConstraintError("n1*n2 = " + std::to_string(g.total_samples()) +
                          " is not a multiple of 16");
  return g;
}

TimeGrid grid_for_duration(double duration_ns, int samples_per_segment, double dt) {
  if (!(duration_ns > 0.0)) throw ArgumentError("duration must be positive");
  if (samples_per_segment <= 0) throw ArgumentError("samples per segment must be positive");
  const int step = kSampleQuantum / std::gcd(kSampleQuantum, samples_per_segment);
  const double seg = dt * samples_per_segment;
  int n1 = static_cast<int>(std::lround(duration_ns / seg / step)) * step;
  n1 = std::max(n1, step);
  return hardware_grid(n1, samples_per_segment, dt);
}

Waveform::Waveform(TimeGrid grid, std::vector<Complex> segments, std::string label)
    : grid_(grid), segments_(std::move(segments)), label_(std::move(label)) {
  grid_.validate();
  if (static_cast<int>(segments_.size()) != grid_.segment_count)
    throw ArgumentError("waveform has " + std::to_string(segments_.size()) +
                        " segments but grid declares " + std::to_string(grid_.segment_count));
}

double Waveform::max_amplitude() const {
  double m = 0.0;
  for (const auto& g : segments_) m = std::max(m, std::abs(g));
  return m;
}

Complex Waveform::area() const {
  Complex a = 0.0;
  for (const auto& g : segments_) a += g;
  return a * grid_.segment_duration();
}

std::vector<Complex> Waveform::samples() const {
  std::vector<Complex> out;
  out.reserve(grid_.total_samples());
  for (const auto& g : segments_)
    for (int j = 0; j < grid_.samples_per_segment; ++j) out.push_back(g);
  return out;
}

Waveform Waveform::with_label(std::string label) const {
  return Waveform(grid_, segments_, std::move(label));
}

Waveform Waveform::scaled(Complex factor) const {
  auto s = segments_;
  for (auto& g : s) g *= factor;
  return Waveform(grid_, std::move(s), label_);
}

void PulseConstraints::validate() const {
  if (!(omega_max > 0.0)) throw ConstraintError("omega_max must be positive");
  if (filter == FilterKind::sinc && !(cutoff_mhz > 0.0))
    throw ConstraintError("sinc cutoff must be positive");
  if (filter == FilterKind::bound_slew && !(slew_max > 0.0))
    throw ConstraintError("slew_max must be positive for the bound-slew filter");
}

double kernel_response(const std::vector<double>& taps, double freq_mhz, double period_ns) {
  const int K = static_cast<int>(taps.size()) / 2;
  const double f = freq_mhz * 1e-3;
  double h = 0.0;
  for (int k = -K; k <= K; ++k) h += taps[k + K] * std::cos(kTwoPi * f * k * period_ns);
  return h;
}

std::vector<double> sinc_kernel(double cutoff_mhz, double period_ns) {
  if (!(cutoff_mhz > 0.0)) throw ConstraintError("sinc cutoff must be positive");
  if (!(period_ns > 0.0)) throw ArgumentError("sample period must be positive");
  const double fc = cutoff_mhz * 1e-3;
  const double nyquist = 0.5 / period_ns;
  if (fc >= nyquist)
    throw ConstraintError("sinc cutoff " + std::to_string(cutoff_mhz) +
                          " MHz is not below the segment Nyquist frequency " +
                          std::to_string(nyquist * 1e3) + " MHz");
  // Six zero crossings each side at the nominal bandwidth.
  const int K = static_cast<int>(std::ceil(6.0 / (2.0 * fc * period_ns)));
  const double target = 1.0 / std::sqrt(2.0);
  auto gain = [&](double fb) {
    return kernel_response(truncated_sinc(fb, period_ns, K), cutoff_mhz, period_ns);
  };
  double lo = 0.25 * fc, hi = nyquist;
  if (!(gain(lo) < target && gain(hi) > target))
    throw ConstraintError("cannot place the -3 dB point of the sinc kernel at " +
                          std::to_string(cutoff_mhz) + " MHz");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gain(mid) < target ? lo : hi) = mid;
  }
  return truncated_sinc(0.5 * (lo + hi), period_ns, K);
}

Waveform apply_sinc_filter(const Waveform& raw, const PulseConstraints& constraints) {
  if (constraints.filter != FilterKind::sinc)
    throw ConstraintError("apply_sinc_filter requires filter_kind sinc");
  const auto h = sinc_kernel(constraints.cutoff_mhz, raw.grid().segment_duration());
  const int K = static_cast<int>(h.size()) / 2;
  const auto& x = raw.segments();
  const int n = raw.size();
  std::vector<Complex> y(n);
  for (int i = 0; i < n; ++i) {
    Complex acc = 0.0;
    const int j0 = std::max(0, i - K), j1 = std::min(n - 1, i + K);
    for (int j = j0; j <= j1; ++j) acc += h[i - j + K] * x[j];
    y[i] = acc;
  }
  return Waveform(raw.grid(), std::move(y), raw.label());
}

Waveform apply_slew_bound(const Waveform& raw, const PulseConstraints& constraints) {
  if (!(constraints.slew_max > 0.0)) throw ConstraintError("slew_max must be positive");
  const double step = constraints.slew_max * raw.grid().segment_duration();
  std::vector<Complex> y(raw.size());
  Complex prev = 0.0;
  for (int i = 0; i < raw.size(); ++i) {
    Complex d = raw.segments()[i] - prev;
    if (std::abs(d) > step) d *= step / std::abs(d);
    prev += d;
    y[i] = prev;
  }
  return Waveform(raw.grid(), std::move(y), raw.label());
}

Waveform apply_constraints(const Waveform& raw, const PulseConstraints& constraints) {
  constraints.validate();
  Waveform out = raw;
  switch (constraints.filter) {
    case FilterKind::sinc: out = apply_sinc_filter(raw, constraints); break;
    case FilterKind::bound_slew: out = apply_slew_bound(raw, constraints); break;
    case FilterKind::none: break;
  }
  if (out.max_amplitude() > constraints.omega_max * (1.0 + 1e-12))
    throw ConstraintError("waveform amplitude " + std::to_string(out.max_amplitude()) +
                          " exceeds omega_max " + std::to_string(constraints.omega_max));
  return out;
}

Waveform resample_to_hardware_grid(const Waveform& w, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
  const double T = w.duration();
  if (!(T > 0.0)) throw ArgumentError("cannot resample a zero-duration waveform");
  const double seg = w.grid().segment_duration();
  const double ratio = seg / dt;
  const long per = std::lround(ratio);
  std::vector<Complex> out;
  if (per >= 1 && std::abs(ratio - per) < 1e-9 * ratio) {
    for (const auto& g : w.segments())
      for (long j = 0; j < per; ++j) out.push_back(g);
  } else {
    const long n = std::max(1L, std::lround(T / dt));
    out.reserve(n);
    for (long j = 0; j < n; ++j) {
      const long k = std::min<long>(w.size() - 1, static_cast<long>(((j + 0.5) * dt) / seg));
      out.push_back(w.segments()[k]);
    }
  }
  std::string label = w.label();
  const long n = static_cast<long>(out.size());
  const long padded = (n + kSampleQuantum - 1) / kSampleQuantum * kSampleQuantum;
  if (padded != n) {
    out.resize(padded, Complex(0.0));
    label += " [padded " + std::to_string(n) + "->" + std::to_string(padded) + "]";
  }
  return Waveform(TimeGrid{dt, static_cast<int>(padded), 1}, std::move(out), std::move(label));
}

Waveform drag_waveform(double theta, double tau_g, double beta_drag, const TimeGrid& grid) {
  if (!(theta > 0.0 && theta <= kTwoPi + 1e-12))
    throw ArgumentError("DRAG rotation angle must lie in (0, 2pi]");
  if (!(tau_g > 0.0)) throw ArgumentError("gate duration must be positive");
  grid.validate();
  if (std::abs(grid.duration() - tau_g) > 0.5 * grid.segment_duration())
    throw ArgumentError("DRAG duration does not match the grid duration");
  const double T = grid.duration();
  const double sigma = T / 4.0;
  const double tau = grid.segment_duration();
  const double floor = std::exp(-2.0);
  std::vector<double> g(grid.segment_count), dg(grid.segment_count);
  double area = 0.0;
  for (int k = 0; k < grid.segment_count; ++k) {
    const double t = (k + 0.5) * tau - 0.5 * T;
    const double e = std::exp(-t * t / (2.0 * sigma * sigma));
    g[k] = e - floor;
    dg[k] = -t / (sigma * sigma) * e;
    area += g[k] * tau;
  }
  std::vector<Complex> seg(grid.segment_count);
  for (int k = 0; k < grid.segment_count; ++k)
    seg[k] = Complex(theta * g[k] / area, beta_drag * sigma * theta * dg[k] / area);
  return Waveform(grid, std::move(seg), "drag");
}

Waveform square_waveform(double theta, double tau_g, const TimeGrid& grid) {
  if (!(tau_g > 0.0)) throw ArgumentError("gate duration must be positive");
  grid.validate();
  return Waveform(grid, std::vector<Complex>(grid.segment_count, Complex(theta / tau_g, 0.0)),
                  "square");
}

Spectrum spectrum(const Waveform& w, const DeviceModel& device, int reference_qubit,
                  int padding_factor) {
  const auto x = w.samples();
  if (x.empty()) throw ArgumentError("spectrum of an empty waveform");
  if (reference_qubit < 0 || reference_qubit >= device.qubit_count())
    throw ArgumentError("reference qubit out of range");
  const double dt = w.grid().dt;
  std::size_t m = 1;
  while (m < x.size() * static_cast<std::size_t>(std::max(1, padding_factor))) m <<= 1;
  Spectrum s;
  const std::size_t bins = m / 2 + 1;
  s.frequencies.resize(bins);
  s.magnitudes_i.resize(bins);
  s.magnitudes_q.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double f = static_cast<double>(b) / (m * dt);  // GHz
    Complex si = 0.0, sq = 0.0;
    const Complex step = std::polar(1.0, -kTwoPi * f * dt);
    Complex ph = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      si += x[k].real() * ph;
      sq += x[k].imag() * ph;
      if ((k & 63) == 63)
        ph = std::polar(1.0, -kTwoPi * f * dt * (k + 1));
      else
        ph *= step;
    }
    s.frequencies[b] = f * 1e3;
    s.magnitudes_i[b] = std::abs(si) * dt;
    s.magnitudes_q[b] = std::abs(sq) * dt;
  }
  const double w1 = device.qubits[reference_qubit].omega;
  for (int i = 0; i < device.qubit_count(); ++i) {
    const auto& q = device.qubits[i];
    s.leakage_markers.emplace_back("delta1_q" + std::to_string(i), mhz_from_angular(q.omega - w1));
    s.leakage_markers.emplace_back("delta2_q" + std::to_string(i),
                                   mhz_from_angular(2.0 * (q.omega - w1) - q.anharmonicity));
  }
  return s;
}

}  // namespace robustpulse
