#pragma once

#include <string>
#include <utility>
#include <vector>

#include "robustpulse/common.hpp"
#include "robustpulse/device.hpp"

namespace robustpulse {

inline constexpr double kHardwareDt = 0.22;  // ns
inline constexpr int kSampleQuantum = 16;

struct TimeGrid {
  double dt = kHardwareDt;
  int segment_count = 1;
  int samples_per_segment = 1;

  double segment_duration() const { return dt * samples_per_segment; }
  double duration() const { return segment_duration() * segment_count; }
  long total_samples() const { return static_cast<long>(segment_count) * samples_per_segment; }
  bool is_hardware_compatible() const { return total_samples() % kSampleQuantum == 0; }
  void validate() const;

  bool operator==(const TimeGrid&) const = default;
};

// Throws unless n1*n2 is a multiple of 16.
TimeGrid hardware_grid(int segment_count, int samples_per_segment = 1, double dt = kHardwareDt);
// Segment count whose 16m-compatible duration is closest to `duration_ns`.
TimeGrid grid_for_duration(double duration_ns, int samples_per_segment = 1,
                           double dt = kHardwareDt);

class Waveform {
 public:
  Waveform() = default;
  Waveform(TimeGrid grid, std::vector<Complex> segments, std::string label = {});

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Complex>& segments() const { return segments_; }
  const std::string& label() const { return label_; }
  int size() const { return static_cast<int>(segments_.size()); }
  double duration() const { return grid_.duration(); }
  double max_amplitude() const;
  // Area of the I and Q quadratures, sum_k gamma_k * tau_s.
  Complex area() const;
  // Segments expanded onto the dt grid.
  std::vector<Complex> samples() const;

  Waveform with_label(std::string label) const;
  Waveform scaled(Complex factor) const;

 private:
  TimeGrid grid_;
  std::vector<Complex> segments_;
  std::string label_;
};

enum class FilterKind { sinc, bound_slew, none };

struct PulseConstraints {
  double omega_max = 0.0;  // rad/ns
  double cutoff_mhz = 30.0;
  FilterKind filter = FilterKind::sinc;
  double slew_max = 0.0;  // rad/ns^2, bound-slew only

  void validate() const;
};

// Truncated, DC-normalized sinc taps h[-K..K] (returned as 2K+1 values) whose
// response at `cutoff_mhz` is exactly -3 dB for samples spaced `period_ns`.
std::vector<double> sinc_kernel(double cutoff_mhz, double period_ns);
// Response sum_k h_k cos(2 pi f k T) of a symmetric kernel.
double kernel_response(const std::vector<double>& taps, double freq_mhz, double period_ns);

Waveform apply_sinc_filter(const Waveform& raw, const PulseConstraints& constraints);
Waveform apply_slew_bound(const Waveform& raw, const PulseConstraints& constraints);
// Filter per constraints.filter, then verify the amplitude bound.
Waveform apply_constraints(const Waveform& raw, const PulseConstraints& constraints);

// Sample-and-hold onto the dt grid, zero-padding the tail to a multiple of 16 samples.
Waveform resample_to_hardware_grid(const Waveform& w, double dt = kHardwareDt);

Waveform drag_waveform(double theta, double tau_g, double beta_drag, const TimeGrid& grid);
Waveform square_waveform(double theta, double tau_g, const TimeGrid& grid);

struct Spectrum {
  std::vector<double> frequencies;  // MHz
  std::vector<double> magnitudes_i;
  std::vector<double> magnitudes_q;
  std::vector<std::pair<std::string, double>> leakage_markers;  // MHz
};

// One-sided zero-padded DFT of the dt-grid samples. Markers are taken relative
// to `reference_qubit`.
Spectrum spectrum(const Waveform& w, const DeviceModel& device, int reference_qubit = 0,
                  int padding_factor = 8);

}  // namespace robustpulse
