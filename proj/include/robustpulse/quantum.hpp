#pragma once

#include <cstdint>
#include <vector>

#include "robustpulse/common.hpp"
#include "robustpulse/device.hpp"
#include "robustpulse/pulse.hpp"

namespace robustpulse {

enum class AmplitudeNoiseMode { common, differential };

// Quasi-static noise. `delta` is the coefficient of the dephasing term
// H_deph = delta/2 * a^dag a, so a physical LO offset f corresponds to
// delta = 2 * (2 pi f); see delta_from_lo_offset_mhz.
struct NoiseRealization {
  double delta = 0.0;
  AmplitudeNoiseMode amp_mode = AmplitudeNoiseMode::common;
  double eps_common = 0.0;
  double eps_i = 0.0;
  double eps_q = 0.0;
  bool include_t1 = false;

  static NoiseRealization lo_offset_mhz(double mhz);
  static NoiseRealization amplitude(double eps);
  static NoiseRealization differential(double eps_i, double eps_q);

  double scale_i() const { return 1.0 + (amp_mode == AmplitudeNoiseMode::common ? eps_common : eps_i); }
  double scale_q() const { return 1.0 + (amp_mode == AmplitudeNoiseMode::common ? eps_common : eps_q); }
  bool is_zero() const;
  void validate() const;
};

double delta_from_lo_offset_mhz(double mhz);
double lo_offset_mhz_from_delta(double delta);

// Per-segment additive drive and detuning terms (e.g. crosstalk).
struct DriveCorrection {
  std::vector<Complex> drive;
  std::vector<double> detuning;
};

struct UnitaryResult {
  CMatrix u_ctrl;
  CMatrix u_tot;
  CMatrix u_noise;
};

CMatrix lowering_operator(int levels);
CMatrix build_hamiltonian(const Waveform& w, const NoiseRealization& noise,
                          const DeviceModel& device, int qubit, int segment,
                          const DriveCorrection* extra = nullptr);
// exp(-i H t) for Hermitian H.
CMatrix expm_hermitian(const CMatrix& h, double t);

UnitaryResult propagate(const Waveform& w, const NoiseRealization& noise,
                        const DeviceModel& device, int qubit,
                        const DriveCorrection* extra = nullptr);

// 1 - |tr(target^dag u)/D|^2 on the leading D x D block.
double operational_infidelity(const CMatrix& u, const CMatrix& target, int dim);
double robustness_fidelity(const Waveform& w, const std::vector<NoiseRealization>& ensemble,
                           const DeviceModel& device, int qubit);

// Open-system propagator (column-stacked vec(rho)) of one pulse. Amplitude
// damping at 1/T1 is included when noise.include_t1 is set.
CMatrix pulse_superoperator(const Waveform& w, const NoiseRealization& noise,
                            const DeviceModel& device, int qubit,
                            const DriveCorrection* extra = nullptr);
CMatrix damping_superoperator(double duration, double t1, int levels);
CMatrix unitary_superoperator(const CMatrix& u);
CMatrix vec(const CMatrix& rho);
CMatrix unvec(const CMatrix& v, int dim);
CMatrix basis_state(int levels, int k);

// P(|1>) after the pulse with amplitude damping on; shots == 0 returns the exact
// probability. `initial` defaults to |0><0|.
double simulate_with_t1(const Waveform& w, const NoiseRealization& noise,
                        const DeviceModel& device, int qubit, int shots,
                        std::uint64_t seed, const CMatrix* initial = nullptr);

struct NeighborDrive {
  int source = 0;
  Waveform waveform;
  double phase = 0.0;  // relative LO phase of the source drive
};

// x * e^{i phase} * gamma_source added to the victim drive and
// stark * |gamma_source|^2 added to its detuning, per segment.
DriveCorrection crosstalk_noise(const std::vector<NeighborDrive>& drives,
                                const DeviceModel& device, int victim, int segment_count);

}  // namespace robustpulse
