#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustpulse/common.hpp"
#include "robustpulse/device.hpp"
#include "robustpulse/pulse.hpp"
#include "robustpulse/quantum.hpp"

namespace robustpulse {

enum class RobustnessMode { none, dephasing, amplitude, dual };

RobustnessMode parse_robustness_mode(const std::string& s);
std::string to_string(RobustnessMode m);

struct EnsembleGrid {
  std::vector<double> lo_offsets_mhz = {0.5, 1.0};    // used as +-values
  std::vector<double> amplitude_errors = {0.1, 0.2};  // used as +-values
};

// Zero-noise member first, then the symmetric grid for the requested mode.
std::vector<NoiseRealization> make_ensemble(RobustnessMode mode, const EnsembleGrid& grid = {});

// exp(-i theta (cos(phi) sx + sin(phi) sy) / 2), identity on |2> when levels == 3.
CMatrix target_rotation(double theta, double phi, int levels = 2);

struct OptimizationSpec {
  CMatrix target = CMatrix::Identity(2, 2);
  RobustnessMode mode = RobustnessMode::none;
  std::vector<NoiseRealization> ensemble = make_ensemble(RobustnessMode::none);
  PulseConstraints constraints;
  TimeGrid grid;
  int max_iterations = 2000;
  double cost_tolerance = 1e-10;
  std::uint64_t seed = 0;
  int restarts = 8;
  double lambda = 1.0;
  std::string label = "optimized";

  int parameter_count() const { return 2 * grid.segment_count; }
  void validate() const;
};

struct OptimizationResult {
  Waveform waveform;
  std::vector<double> cost_history;
  double final_cost = 0.0;
  double final_operational_infidelity = 0.0;
  double final_robust_infidelity = 0.0;
  int iterations_used = 0;
  int best_restart = 0;
  bool converged = false;
  std::vector<double> params;
};

// params (I block then Q block, pre-filter) -> bounded, filtered segment amplitudes.
class ControlMap {
 public:
  ControlMap(const TimeGrid& grid, const PulseConstraints& constraints);

  std::vector<Complex> forward(const std::vector<double>& params) const;
  // Pulls dC/dI + i dC/dQ per segment back to dC/dparams.
  std::vector<double> backward(const std::vector<double>& params,
                               const std::vector<Complex>& grad_amplitudes) const;
  double raw_bound() const { return bound_; }

 private:
  TimeGrid grid_;
  PulseConstraints constraints_;
  std::vector<double> taps_;
  double bound_ = 0.0;
};

struct CostBreakdown {
  double cost = 0.0;
  double operational_fidelity = 0.0;
  double robust_fidelity = 0.0;
};

CostBreakdown evaluate(const std::vector<double>& params, const OptimizationSpec& spec,
                       std::vector<double>* grad = nullptr);
double cost(const std::vector<double>& params, const OptimizationSpec& spec);
std::vector<double> gradient(const std::vector<double>& params, const OptimizationSpec& spec);
// The waveform the parameters realize, resampled onto the dt grid.
Waveform realize(const std::vector<double>& params, const OptimizationSpec& spec);

OptimizationResult optimize(const OptimizationSpec& spec);

struct RobustnessMap {
  std::vector<double> lo_offsets_mhz;
  std::vector<double> amplitude_errors;
  std::vector<double> detuning_percent;   // of the qubit frequency
  std::vector<double> amplitude_percent;
  std::vector<std::vector<double>> infidelity;  // [detuning][amplitude]
};

RobustnessMap scan_robustness(const Waveform& w, const CMatrix& target,
                              const std::vector<double>& lo_offsets_mhz,
                              const std::vector<double>& amplitude_errors,
                              const DeviceModel& device, int qubit);

std::vector<double> linspace(double a, double b, int n);

}  // namespace robustpulse
