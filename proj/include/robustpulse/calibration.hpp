#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "robustpulse/common.hpp"
#include "robustpulse/pulse.hpp"

namespace robustpulse {

enum class Channel { i, q };

std::string to_string(Channel c);
Channel parse_channel(std::string_view s);

// Hardware front-end: dimensionless inputs A in [-1, 1] per channel map to
// Rabi rate_scale * (g1 (A + offset) + g3 (A + offset)^3). The hidden scales
// and IQ skew act on arbitrary-waveform playback:
//   gamma = s_amp (s_rel r_I + i e^{i skew} r_Q).
struct FrontEndModel {
  double g1 = 1.0;
  double g3 = -0.2;
  double rate_scale = kTwoPi * 0.040;  // rad/ns
  double true_s_amp = 1.0;
  double true_s_rel = 1.0;
  double offset_i = 0.0;
  double offset_q = 0.0;
  double iq_skew = 0.0;  // rad
  double visibility = 0.95;

  double rate(Channel c, double a) const;
  Complex play(Complex a) const;
  Waveform play(const TimeGrid& grid, const std::vector<Complex>& controls,
                const std::string& label = {}) const;
  void validate() const;

  // Hidden scales drawn from [0.95, 1.05], offsets from [-0.01, 0.01].
  static FrontEndModel random(std::uint64_t seed);
};

// Excited population after a square single-quadrature pulse of each duration.
std::vector<double> rabi_experiment(const FrontEndModel& fe, Channel c, double amplitude,
                                    const std::vector<double>& durations_ns, int shots,
                                    std::uint64_t seed);
std::vector<double> default_rabi_durations();

struct RabiFit {
  double rate = 0.0;  // rad/ns
  double contrast = 0.0;
  double floor = 0.0;
};

// P = floor + contrast (1 - cos(rate t)) / 2
RabiFit fit_rabi(const std::vector<double>& durations_ns, const std::vector<double>& p1);

// Monotone cubic (Fritsch-Carlson) interpolant through (0, 0) and the measured
// (A, rate) points, extended as an odd function.
class MonotoneMap {
 public:
  MonotoneMap() = default;
  MonotoneMap(std::vector<double> amplitudes, std::vector<double> rates);

  double rate(double a) const;
  double inverse(double rate) const;
  double max_rate() const { return y_.empty() ? 0.0 : y_.back(); }
  double max_amplitude() const { return x_.empty() ? 0.0 : x_.back(); }
  const std::vector<double>& amplitudes() const { return x_; }
  const std::vector<double>& rates() const { return y_; }

 private:
  std::vector<double> x_, y_, m_;
};

struct AmplitudeMap {
  MonotoneMap i;
  MonotoneMap q;

  const MonotoneMap& channel(Channel c) const { return c == Channel::i ? i : q; }
};

struct CoarseOptions {
  std::vector<double> amplitudes = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> durations_ns = default_rabi_durations();
  int shots = 4096;
};

struct RabiPoint {
  Channel channel = Channel::i;
  double amplitude = 0.0;
  RabiFit fit;
};

struct CoarseCalibration {
  AmplitudeMap map;
  std::vector<RabiPoint> points;
};

CoarseCalibration coarse_calibrate(const FrontEndModel& fe, const CoarseOptions& options,
                                   std::uint64_t seed);

struct CalibrationResult {
  AmplitudeMap amp_map;
  double s_amp = 1.0;
  double s_rel = 1.0;
  double skew = 0.0;
  double residual_infidelity_estimate = 0.0;
};

// Control inputs that reproduce `desired` on a front-end matching `cal`:
//   r_Q = s_amp Q / cos(skew), r_I = s_rel s_amp (I + sin(skew) Q / cos(skew)).
std::vector<Complex> predistort(const CalibrationResult& cal, const Waveform& desired);

// sqrt(sum |a - b|^2 / sum |a|^2) over segments.
double rms_relative_error(const Waveform& desired, const Waveform& actual);

struct FineOptions {
  std::vector<int> repetitions = {5, 9};
  std::vector<double> s_grid;  // empty: 0.90 .. 1.10 in steps of 0.005
  int shots = 4096;
  int passes = 2;
  bool orthogonality = false;
  std::vector<double> skew_grid;  // empty: -0.05 .. 0.05 rad in steps of 0.0025
};

struct ScanPoint {
  std::string parameter;  // s_amp, s_rel or skew
  int pass = 0;
  double value = 0.0;
  int repetitions = 0;
  double fidelity = 0.0;
};

struct FineCalibration {
  double s_amp = 1.0;
  double s_rel = 1.0;
  double skew = 0.0;
  std::vector<ScanPoint> scan;
};

std::vector<double> default_s_grid();

// State-transfer fidelity of `reps` repetitions of the probe played through the
// front-end with calibration `cal`.
double probe_fidelity(const FrontEndModel& fe, const CalibrationResult& cal,
                      const Waveform& probe, int reps, int shots, std::uint64_t seed);

// Index of the maximum of the average over repetition counts; throws when the
// average is flat or peaks on the grid edge.
std::size_t common_maximum(const std::vector<std::vector<double>>& fidelity_by_rep);

FineCalibration fine_calibrate(const FrontEndModel& fe, const CalibrationResult& coarse,
                               const Waveform& probe, const FineOptions& options,
                               std::uint64_t seed);

struct CalibrationOptions {
  CoarseOptions coarse;
  FineOptions fine;
};

struct CalibrationRun {
  CalibrationResult result;
  CoarseCalibration coarse;
  FineCalibration fine;
};

// Default probe: Gaussian pi pulse, 70.4 ns on the sample grid.
Waveform default_probe();

CalibrationRun calibrate(const FrontEndModel& fe, const Waveform& probe,
                         const CalibrationOptions& options, std::uint64_t seed);

}  // namespace robustpulse
