#include "robustpulse/device.hpp"

#include <cmath>

#include "robustpulse/common.hpp"

namespace robustpulse {

CrosstalkCoupling DeviceModel::coupling(int victim, int source) const {
  if (crosstalk.empty()) return {};
  return crosstalk.at(victim).at(source);
}

std::vector<int> DeviceModel::neighbors(int victim) const {
  std::vector<int> out;
  if (crosstalk.empty()) return out;
  for (int s = 0; s < qubit_count(); ++s) {
    if (s == victim) continue;
    auto c = coupling(victim, s);
    if (c.x_coupling != 0.0 || c.stark_coefficient != 0.0) out.push_back(s);
  }
  return out;
}

void DeviceModel::validate() const {
  if (qubits.empty()) throw ModelError("device has no qubits");
  if (levels != 2 && levels != 3)
    throw ModelError("hilbert levels must be 2 or 3, got " + std::to_string(levels));
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    const auto& q = qubits[i];
    if (!(q.t1 > 0.0)) throw ModelError("qubit " + std::to_string(i) + ": T1 must be positive");
    if (!std::isfinite(q.omega) || !std::isfinite(q.anharmonicity))
      throw ModelError("qubit " + std::to_string(i) + ": non-finite frequency");
    for (std::size_t j = 0; j < i; ++j)
      if (qubits[j].omega == q.omega)
        throw ModelError("qubit frequencies must be distinct (qubits " + std::to_string(j) +
                         ", " + std::to_string(i) + ")");
  }
  if (!crosstalk.empty()) {
    if (crosstalk.size() != qubits.size()) throw ModelError("crosstalk matrix has wrong size");
    for (const auto& row : crosstalk) {
      if (row.size() != qubits.size()) throw ModelError("crosstalk matrix has wrong size");
      for (const auto& c : row)
        if (c.x_coupling < 0.0 || c.x_coupling >= 1.0)
          throw ModelError("x_coupling must lie in [0, 1)");
    }
  }
  if (!(readout_visibility > 0.0 && readout_visibility <= 1.0))
    throw ModelError("readout visibility must lie in (0, 1]");
  if (drift.detuning_sd_mhz < 0.0 || drift.amplitude_sd < 0.0)
    throw ModelError("drift spreads must be non-negative");
}

std::vector<std::vector<CrosstalkCoupling>> chain_crosstalk(int n, CrosstalkCoupling c) {
  std::vector<std::vector<CrosstalkCoupling>> m(n, std::vector<CrosstalkCoupling>(n));
  for (int i = 0; i + 1 < n; ++i) {
    m[i][i + 1] = c;
    m[i + 1][i] = c;
  }
  return m;
}

DeviceModel valencia_like() {
  DeviceModel d;
  d.name = "valencia-like";
  const double f_ghz[] = {4.745, 4.664, 4.832, 4.616, 4.968};
  for (double f : f_ghz) d.qubits.push_back({kTwoPi * f, kTwoPi * -0.340, 70.0e3});
  d.levels = 2;
  d.omega_max = angular_from_mhz(25.0);
  d.pi_duration_ns = 320 * 0.22;
  // Stark coefficient sized so a full-scale drive shifts the qubit by 50 kHz.
  const double stark = 2.0 * angular_from_mhz(0.050) / (d.omega_max * d.omega_max);
  d.crosstalk = chain_crosstalk(5, {0.02, stark});
  d.drift = {0.05, 0.003};
  d.readout_visibility = 0.95;
  return d;
}

DeviceModel armonk_like() {
  DeviceModel d;
  d.name = "armonk-like";
  d.qubits.push_back({kTwoPi * 4.972, kTwoPi * -0.347, 70.0e3});
  d.levels = 2;
  d.omega_max = angular_from_mhz(6.25);
  d.pi_duration_ns = 1296 * 0.22;
  d.drift = {0.05, 0.003};
  d.readout_visibility = 0.95;
  return d;
}

DeviceModel device_preset(std::string_view name) {
  if (name == "valencia-like") return valencia_like();
  if (name == "armonk-like") return armonk_like();
  throw ArgumentError("unknown device preset '" + std::string(name) + "'");
}

}  // namespace robustpulse
