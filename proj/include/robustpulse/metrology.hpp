#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robustpulse/device.hpp"
#include "robustpulse/pulse.hpp"
#include "robustpulse/quantum.hpp"

namespace robustpulse {

enum class ExecutionMode { serial, parallel };
enum class DecayModel { exp_cos, gauss_cos };

std::string to_string(ExecutionMode m);
std::string to_string(DecayModel m);
ExecutionMode parse_execution_mode(const std::string& s);
DecayModel parse_decay_model(const std::string& s);

// n = 1, 3, ..., 41
std::vector<int> default_repetitions();

struct AmplificationRecord {
  int qubit = 0;
  std::string pulse_label;
  double gate_duration_ns = 0.0;
  std::vector<int> repetitions;
  std::vector<double> probabilities;
  int shots = 0;  // 0 = exact probabilities
  ExecutionMode mode = ExecutionMode::serial;

  void validate() const;
};

struct AmplificationSetup {
  std::vector<int> repetitions = default_repetitions();
  int shots = 1024;
  ExecutionMode mode = ExecutionMode::serial;
  bool include_t1 = true;
  // Fixed quasi-static realization; drawn from device.drift when empty.
  std::optional<NoiseRealization> noise;
  // Quadrature points per neighbour for the random relative drive phase.
  int phase_points = 8;
};

NoiseRealization draw_quasi_static_noise(const DeviceModel& device, std::mt19937_64& rng);

AmplificationRecord run_amplification(const Waveform& w, const DeviceModel& device, int qubit,
                                      const AmplificationSetup& setup, std::uint64_t seed);
AmplificationRecord run_amplification(const Waveform& w, const DeviceModel& device, int qubit,
                                      const std::vector<int>& n_list, int shots,
                                      ExecutionMode mode, std::uint64_t seed);

// p1/2 (1 - cos(pi + n eps_r) D(n)), D = exp(-beta n) or exp(-(beta n)^2)
double decay_model(DecayModel model, double p1, double eps_r, double beta, int n);

struct FitOptions {
  bool fix_p1 = false;  // hold P(1) at the first data point
};

struct FitResult {
  DecayModel model = DecayModel::exp_cos;
  double p1 = 0.0;
  double eps_r = 0.0;
  double beta = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (p1, eps_r, beta)
  double eps = 0.0;
  double t1_estimate = 0.0;  // ns
  double rss = 0.0;          // weighted when shots > 0
  double aicc = 0.0;
  int points = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  double eps_r_sd() const { return std::sqrt(std::max(0.0, covariance(1, 1))); }
  double beta_sd() const { return std::sqrt(std::max(0.0, covariance(2, 2))); }
};

FitResult fit_decay(const AmplificationRecord& record, DecayModel model,
                    const FitOptions& options = {});
FitResult fit_exp_cos(const AmplificationRecord& record, const FitOptions& options = {});
FitResult fit_gauss_cos(const AmplificationRecord& record, const FitOptions& options = {});

struct ModelSelection {
  DecayModel selected = DecayModel::exp_cos;
  FitResult exp_cos;
  FitResult gauss_cos;

  const FitResult& best() const { return selected == DecayModel::exp_cos ? exp_cos : gauss_cos; }
};

// Lower AICc wins; ties go to exp_cos.
ModelSelection select_model(const AmplificationRecord& record, const FitOptions& options = {});

// Cells indexed [day][qubit]; empty cells are missing data.
using ErrorGrid = std::vector<std::vector<std::optional<double>>>;

struct VariabilityReport {
  std::vector<std::optional<double>> qubit_mean;  // <eps>_t per qubit
  std::vector<std::optional<double>> qubit_sd;    // sigma_t per qubit
  std::vector<std::optional<double>> day_mean;    // <eps>_q per day
  std::vector<std::optional<double>> day_sd;      // sigma_q per day
  double grand_mean = 0.0;
  double mean_sigma_t = 0.0;  // <sigma_t>_q
  double mean_sigma_q = 0.0;  // <sigma_q>_t
  int missing = 0;
};

// Standard deviations are population (divide by N).
VariabilityReport variability_report(const ErrorGrid& eps);
ErrorGrid reduction_ratios(const ErrorGrid& default_eps, const ErrorGrid& robust_eps);

struct CampaignCell {
  std::string pulse;
  ExecutionMode mode = ExecutionMode::serial;
  int day = 0;
  int qubit = 0;
  AmplificationRecord record;
  ModelSelection fits;
};

struct CampaignSpec {
  std::vector<std::pair<std::string, Waveform>> pulses;
  std::vector<ExecutionMode> modes = {ExecutionMode::serial, ExecutionMode::parallel};
  int days = 1;
  std::vector<int> qubits;  // empty = all device qubits
  AmplificationSetup setup;
  FitOptions fit;
};

// One quasi-static realization per (qubit, day), shared by every pulse and mode.
std::vector<CampaignCell> run_campaign(const CampaignSpec& spec, const DeviceModel& device,
                                       std::uint64_t seed);
ErrorGrid campaign_grid(const std::vector<CampaignCell>& cells, const std::string& pulse,
                        ExecutionMode mode, int days, int qubits);

}  // namespace robustpulse
