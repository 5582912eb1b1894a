#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robustpulse/common.hpp"
#include "robustpulse/device.hpp"
#include "robustpulse/pulse.hpp"

namespace robustpulse {

struct GateOp {
  enum class Kind { virtual_z, driven_x };
  Kind kind = Kind::virtual_z;
  double angle = 0.0;

  static GateOp vz(double a) { return {Kind::virtual_z, a}; }
  static GateOp x(double a) { return {Kind::driven_x, a}; }
};

// Ops in time order.
using Schedule = std::vector<GateOp>;

CMatrix2 rz(double a);
CMatrix2 rx(double a);
CMatrix2 u3(double theta, double phi, double lambda);
CMatrix2 schedule_unitary(const Schedule& s);
// 1 - |tr(a^dag b)| / 2
double phase_insensitive_distance(const CMatrix2& a, const CMatrix2& b);

// Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(lambda), with Rx(-pi/2) played as
// VZ(pi) X(pi/2) VZ(-pi) so only +pi/2 pulses are driven.
Schedule u3_decompose(double theta, double phi, double lambda);

struct CliffordElement {
  int index = 0;
  CMatrix2 unitary;
  Schedule decomposition;
};

class CliffordTable {
 public:
  CliffordTable();

  int size() const { return static_cast<int>(elements_.size()); }
  const CliffordElement& operator[](int i) const { return elements_.at(i); }
  const std::vector<CliffordElement>& elements() const { return elements_; }
  // Element equal to `a` followed by `b`.
  int compose(int a, int b) const { return table_[a][b]; }
  int inverse(int a) const { return inverse_[a]; }
  // Index of a unitary, up to global phase; -1 when not a Clifford.
  int find(const CMatrix2& u) const;

 private:
  std::vector<CliffordElement> elements_;
  std::vector<std::array<int, 24>> table_;
  std::vector<int> inverse_;
};

const CliffordTable& clifford_table();

struct RBSequence {
  int length = 0;
  std::vector<int> clifford_indices;
  int recovery_index = 0;
  Schedule schedule;
};

RBSequence random_sequence(int length, std::mt19937_64& rng);
CMatrix2 sequence_unitary(const RBSequence& s);

struct PulseSet {
  Waveform x90;
  Waveform x180;
  // Play X(pi) as two X(pi/2) pulses.
  bool x180_from_x90 = false;
};

struct RBNoise {
  bool t1 = true;
  double detuning_khz = 0.0;  // quasi-static LO offset
  double amplitude_error = 0.0;
  double depolarizing_per_clifford = 0.0;  // r; channel parameter p = 2r
};

struct RBOptions {
  std::vector<int> lengths = {1, 2, 4, 8, 16, 32, 64};
  int sequences_per_length = 30;
  int shots = 1024;
  RBNoise noise;
};

std::vector<int> default_rb_lengths();

struct GammaFit {
  bool valid = false;
  double shape = 0.0;
  double scale = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population
  double skewness = 0.0;  // population (g1)
  std::string note;
};

// Method of moments refined by maximum likelihood on infidelity samples.
GammaFit gamma_analysis(const std::vector<double>& infidelities);

struct DecayFit {
  double a = 0.0;
  double p = 1.0;
  double b = 0.0;
  bool converged = false;
};

// mean survival = a p^J + b with a, b in [0, 1]; b is held at `asymptote` when given.
DecayFit fit_rb_decay(const std::vector<int>& lengths, const std::vector<double>& mean_survival,
                      std::optional<double> asymptote = std::nullopt);

struct RBReport {
  std::vector<int> lengths;
  std::vector<std::vector<double>> survival;  // [length][sequence]
  std::vector<double> mean_survival;
  DecayFit fit;
  double epc = 0.0;  // (1 - p) / 2
  std::vector<GammaFit> gamma;
  int shots = 0;
  std::vector<std::string> warnings;
};

// Exact survival probability of one sequence; virtual Z is a frame advance.
double sequence_survival(const RBSequence& s, const PulseSet& pulses, const DeviceModel& device,
                         int qubit, const RBNoise& noise);

RBReport run_rb(const PulseSet& pulses, const DeviceModel& device, int qubit,
                const RBOptions& options, std::uint64_t seed);

}  // namespace robustpulse
