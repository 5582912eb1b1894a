#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace robustpulse {

struct QubitParams {
  double omega = 0.0;          // rad/ns
  double anharmonicity = 0.0;  // rad/ns, chi
  double t1 = 0.0;             // ns
};

struct CrosstalkCoupling {
  double x_coupling = 0.0;         // fraction of the source drive leaking onto the victim
  double stark_coefficient = 0.0;  // detuning per unit drive power, (rad/ns)^-1
};

// Spread of the per-run quasi-static noise draws (physical LO offset in MHz,
// relative amplitude error).
struct DriftModel {
  double detuning_sd_mhz = 0.0;
  double amplitude_sd = 0.0;
};

struct DeviceModel {
  std::string name;
  std::vector<QubitParams> qubits;
  int levels = 2;
  // crosstalk[victim][source]; empty means no crosstalk.
  std::vector<std::vector<CrosstalkCoupling>> crosstalk;
  DriftModel drift;
  double readout_visibility = 1.0;
  double omega_max = 0.0;       // drive ceiling, rad/ns
  double pi_duration_ns = 0.0;  // default pi-pulse duration

  int qubit_count() const { return static_cast<int>(qubits.size()); }
  CrosstalkCoupling coupling(int victim, int source) const;
  // Sources with a nonzero coupling onto `victim`, ascending.
  std::vector<int> neighbors(int victim) const;
  void validate() const;
};

// Nearest-neighbour (by index) crosstalk for an n-qubit chain.
std::vector<std::vector<CrosstalkCoupling>> chain_crosstalk(int n, CrosstalkCoupling c);

DeviceModel valencia_like();
DeviceModel armonk_like();
DeviceModel device_preset(std::string_view name);

}  // namespace robustpulse
