#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "robustpulse/pulse.hpp"

using namespace robustpulse;

namespace {

PulseConstraints sinc_constraints(double cutoff_mhz) {
  PulseConstraints c;
  c.omega_max = 10.0;
  c.cutoff_mhz = cutoff_mhz;
  c.filter = FilterKind::sinc;
  return c;
}

Waveform from_values(const TimeGrid& g, std::vector<Complex> v) { return Waveform(g, std::move(v)); }

}  // namespace

TEST(TimeGrid, HardwareGridEnforcesSixteenSampleQuantum) {
  EXPECT_NO_THROW(hardware_grid(10, 16));
  EXPECT_NO_THROW(hardware_grid(320, 1));
  EXPECT_THROW(hardware_grid(7, 1), ConstraintError);
  EXPECT_THROW(hardware_grid(0, 16), ArgumentError);
}

TEST(TimeGrid, TenSegmentsOfSixteenSamples) {
  const TimeGrid g = hardware_grid(10, 16);
  EXPECT_EQ(g.total_samples(), 160);
  EXPECT_NEAR(g.duration(), 35.2, 1e-12);
  EXPECT_NEAR(g.segment_duration(), 3.52, 1e-12);
}

TEST(TimeGrid, GridForDurationRoundsToQuantum) {
  const TimeGrid g = grid_for_duration(140.8, 16);
  EXPECT_EQ(g.segment_count, 40);
  EXPECT_TRUE(g.is_hardware_compatible());
  const TimeGrid s = grid_for_duration(70.4, 1);
  EXPECT_EQ(s.segment_count, 320);
}

TEST(SincFilter, KernelHasUnitDcGainAndMinus3dbAtCutoff) {
  const double period = 3.52;
  const auto h = sinc_kernel(30.0, period);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-14);
  // direct evaluation of the symmetric kernel's frequency response
  double resp = 0.0;
  const int K = static_cast<int>(h.size()) / 2;
  for (int k = -K; k <= K; ++k) resp += h[k + K] * std::cos(2.0 * M_PI * 30e-3 * k * period);
  EXPECT_NEAR(resp, 1.0 / std::sqrt(2.0), 1e-9);
  for (int k = 0; k < K; ++k) EXPECT_DOUBLE_EQ(h[k], h[h.size() - 1 - k]);
}

TEST(SincFilter, ConstantWaveformUnchangedAwayFromEdges) {
  const TimeGrid g = hardware_grid(100, 16);
  const Waveform w = from_values(g, std::vector<Complex>(100, Complex(0.3, -0.1)));
  const Waveform y = apply_sinc_filter(w, sinc_constraints(30.0));
  const int K = static_cast<int>(sinc_kernel(30.0, g.segment_duration()).size()) / 2;
  for (int i = K; i < 100 - K; ++i) EXPECT_NEAR(std::abs(y.segments()[i] - Complex(0.3, -0.1)), 0.0, 1e-14);
}

TEST(SincFilter, ImpulseReturnsKernelSamples) {
  const TimeGrid g = hardware_grid(100, 16);
  std::vector<Complex> v(100, 0.0);
  v[50] = 1.0;
  const Waveform y = apply_sinc_filter(from_values(g, v), sinc_constraints(30.0));
  const auto h = sinc_kernel(30.0, g.segment_duration());
  const int K = static_cast<int>(h.size()) / 2;
  double sum = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double expected = std::abs(i - 50) <= K ? h[i - 50 + K] : 0.0;
    EXPECT_NEAR(y.segments()[i].real(), expected, 1e-15);
    sum += y.segments()[i].real();
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(SincFilter, SuppressesNyquistTone) {
  const TimeGrid g = hardware_grid(100, 16);
  std::vector<Complex> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i % 2 == 0 ? 1.0 : -1.0;
  const Waveform y = apply_sinc_filter(from_values(g, v), sinc_constraints(10.0));
  EXPECT_LT(y.max_amplitude(), 0.05);
  // the filtered sequence keeps essentially no energy at the segment Nyquist rate
  EXPECT_LT(oracle::dft_magnitude(y.segments(), 0.5), 0.05 * oracle::dft_magnitude(v, 0.5));
}

TEST(SincFilter, IsLinear) {
  const TimeGrid g = hardware_grid(40, 16);
  std::vector<Complex> a(40), b(40), c(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = Complex(std::sin(0.3 * i), std::cos(0.11 * i));
    b[i] = Complex(0.1 * i - 2.0, std::sin(0.7 * i));
    c[i] = 1.7 * a[i] - 0.4 * b[i];
  }
  const auto pc = sinc_constraints(30.0);
  const auto fa = apply_sinc_filter(from_values(g, a), pc).segments();
  const auto fb = apply_sinc_filter(from_values(g, b), pc).segments();
  const auto fc = apply_sinc_filter(from_values(g, c), pc).segments();
  for (int i = 0; i < 40; ++i) EXPECT_LE(std::abs(fc[i] - (1.7 * fa[i] - 0.4 * fb[i])), 1e-12 * (1.0 + std::abs(fc[i])));
}

TEST(SincFilter, RejectsBadCutoff) {
  const TimeGrid g = hardware_grid(40, 16);
  const Waveform w = from_values(g, std::vector<Complex>(40, 0.1));
  EXPECT_THROW(apply_sinc_filter(w, sinc_constraints(0.0)), ConstraintError);
  EXPECT_THROW(apply_sinc_filter(w, sinc_constraints(-5.0)), ConstraintError);
  EXPECT_THROW(apply_sinc_filter(w, sinc_constraints(500.0)), ConstraintError);
}

TEST(Resample, IdentityOnDtGrid) {
  const TimeGrid g = hardware_grid(160, 1);
  std::vector<Complex> v(160);
  for (int i = 0; i < 160; ++i) v[i] = Complex(0.01 * i, -0.002 * i);
  const Waveform w = from_values(g, v);
  const Waveform r = resample_to_hardware_grid(w);
  EXPECT_EQ(r.grid(), g);
  EXPECT_EQ(r.segments(), v);
}

TEST(Resample, SegmentsExpandToSixteenSampleBlocks) {
  const TimeGrid g = hardware_grid(10, 16);
  std::vector<Complex> v(10);
  for (int i = 0; i < 10; ++i) v[i] = Complex(i, 0);
  const Waveform r = resample_to_hardware_grid(from_values(g, v));
  EXPECT_EQ(r.grid().total_samples(), 160);
  EXPECT_NEAR(r.duration(), 35.2, 1e-12);
  for (int j = 0; j < 160; ++j) EXPECT_EQ(r.segments()[j], v[j / 16]);
}

TEST(Resample, PadsShortWaveformWithZeros) {
  const Waveform w(TimeGrid{kHardwareDt, 7, 1}, std::vector<Complex>(7, 0.5), "short");
  const Waveform r = resample_to_hardware_grid(w);
  ASSERT_EQ(r.size(), 16);
  for (int j = 0; j < 7; ++j) EXPECT_EQ(r.segments()[j], Complex(0.5));
  for (int j = 7; j < 16; ++j) EXPECT_EQ(r.segments()[j], Complex(0.0));
  EXPECT_NE(r.label().find("padded"), std::string::npos);
}

TEST(Resample, FilteredWaveformSurvivesResampling) {
  const TimeGrid g = hardware_grid(40, 16);
  std::vector<Complex> v(40);
  for (int i = 0; i < 40; ++i) v[i] = Complex(std::sin(0.2 * i), 0.3 * std::cos(0.1 * i));
  const Waveform f = apply_sinc_filter(from_values(g, v), sinc_constraints(30.0));
  const Waveform r = resample_to_hardware_grid(f);
  for (int j = 0; j < r.size(); ++j) {
    const Complex ref = f.segments()[j / 16];
    EXPECT_LE(std::abs(r.segments()[j] - ref), 1e-6 * std::abs(ref) + 1e-15);
  }
}

TEST(Drag, GaussianAreaEqualsRotationAngle) {
  const TimeGrid g = hardware_grid(320, 1);
  const Waveform w = drag_waveform(kPi, 70.4, 0.0, g);
  EXPECT_NEAR(w.area().real(), kPi, 1e-9);
  EXPECT_NEAR(w.area().imag(), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.segments().front()), std::abs(w.segments().back()), 1e-15);
  // lifted Gaussian, sigma = T/4, sampled at segment midpoints
  const double sigma = 70.4 / 4, tau = 70.4 / 320, lift = std::exp(-2.0);
  auto lifted = [&](double t) { return std::exp(-t * t / (2 * sigma * sigma)) - lift; };
  EXPECT_NEAR(std::abs(w.segments().front()) / w.max_amplitude(), lifted(35.2 - tau / 2) / lifted(tau / 2), 1e-12);
}

TEST(Drag, HalfAngleHalvesAmplitude) {
  const TimeGrid g = hardware_grid(320, 1);
  const Waveform a = drag_waveform(kPi, 70.4, 0.0, g), b = drag_waveform(kPi / 2, 70.4, 0.0, g);
  for (int k = 0; k < 320; ++k) EXPECT_NEAR(b.segments()[k].real(), 0.5 * a.segments()[k].real(), 1e-15);
}

TEST(Drag, QuadratureIsAntisymmetric) {
  const TimeGrid g = hardware_grid(320, 1);
  const Waveform w = drag_waveform(kPi, 70.4, 0.5, g);
  for (int k = 0; k < 160; ++k) {
    EXPECT_NEAR(w.segments()[k].imag(), -w.segments()[319 - k].imag(), 1e-14);
    EXPECT_NEAR(w.segments()[k].real(), w.segments()[319 - k].real(), 1e-14);
  }
  EXPECT_GT(std::abs(w.segments()[100].imag()), 0.0);
}

TEST(Drag, RejectsBadAngle) {
  EXPECT_THROW(drag_waveform(0.0, 70.4, 0.0, hardware_grid(320, 1)), ArgumentError);
  EXPECT_THROW(drag_waveform(7.0, 70.4, 0.0, hardware_grid(320, 1)), ArgumentError);
}

TEST(Square, ConstantAmplitude) {
  const TimeGrid g = hardware_grid(320, 1);
  const Waveform w = square_waveform(kPi, 71.0, g);
  for (const auto& s : w.segments()) EXPECT_DOUBLE_EQ(s.real(), kPi / 71.0);
  const Waveform z = square_waveform(0.0, 71.0, g);
  EXPECT_EQ(z.max_amplitude(), 0.0);
  const Waveform d = square_waveform(2 * kPi, 71.0, g);
  EXPECT_DOUBLE_EQ(d.segments()[0].real(), 2.0 * w.segments()[0].real());
}

TEST(Spectrum, ConstantPeaksAtDc) {
  const DeviceModel d = valencia_like();
  const Waveform w = square_waveform(kPi, 70.4, hardware_grid(320, 1));
  const Spectrum s = spectrum(w, d);
  const auto it = std::max_element(s.magnitudes_i.begin(), s.magnitudes_i.end());
  EXPECT_EQ(it - s.magnitudes_i.begin(), 0);
  EXPECT_DOUBLE_EQ(s.frequencies[0], 0.0);
  for (double q : s.magnitudes_q) EXPECT_EQ(q, 0.0);
  for (std::size_t k = 1; k < s.frequencies.size(); ++k) EXPECT_GT(s.frequencies[k], s.frequencies[k - 1]);
}

TEST(Spectrum, PureTonePeaksWithinOneBin) {
  const DeviceModel d = valencia_like();
  const double f_mhz = 100.0;
  std::vector<Complex> v(640);
  for (int k = 0; k < 640; ++k) v[k] = std::polar(0.1, 2.0 * M_PI * f_mhz * 1e-3 * k * kHardwareDt);
  const Spectrum s = spectrum(Waveform(hardware_grid(640, 1), v), d);
  const auto it = std::max_element(s.magnitudes_i.begin(), s.magnitudes_i.end());
  const double bin = s.frequencies[1] - s.frequencies[0];
  EXPECT_LE(std::abs(s.frequencies[it - s.magnitudes_i.begin()] - f_mhz), bin);
}

TEST(Spectrum, LeakageMarkersFollowTransitionFormulas) {
  DeviceModel d;
  d.name = "pair";
  d.qubits = {{kTwoPi * 5.0, kTwoPi * -0.3, 70e3}, {kTwoPi * 5.1, kTwoPi * -0.330, 70e3}};
  d.omega_max = 0.15;
  d.pi_duration_ns = 70.4;
  const Spectrum s = spectrum(square_waveform(kPi, 70.4, hardware_grid(320, 1)), d);
  ASSERT_EQ(s.leakage_markers.size(), 4u);
  EXPECT_NEAR(s.leakage_markers[2].second, 100.0, 1e-6);
  EXPECT_NEAR(s.leakage_markers[3].second, 530.0, 1e-6);
}
