#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "robustpulse/metrology.hpp"
#include "robustpulse/rng.hpp"
#include "reference_grid.hpp"

using namespace robustpulse;

namespace {

DeviceModel ideal_device(double t1 = 70e3) {
  DeviceModel d;
  d.name = "ideal";
  d.qubits = {{kTwoPi * 5.0, kTwoPi * -0.34, t1}};
  d.levels = 2;
  d.omega_max = angular_from_mhz(25.0);
  d.pi_duration_ns = 70.4;
  d.readout_visibility = 1.0;
  return d;
}

AmplificationRecord synthetic(DecayModel m, double p1, double eps_r, double beta, int shots = 0,
                              std::uint64_t seed = 0) {
  AmplificationRecord r;
  r.gate_duration_ns = 70.4;
  r.repetitions = default_repetitions();
  r.shots = shots;
  auto rng = make_stream(seed, "synthetic");
  for (int n : r.repetitions) r.probabilities.push_back(sample_fraction(decay_model(m, p1, eps_r, beta, n), shots, rng));
  return r;
}

AmplificationSetup exact_setup(NoiseRealization noise, bool t1) {
  AmplificationSetup s;
  s.shots = 0;
  s.noise = noise;
  s.include_t1 = t1;
  return s;
}

}  // namespace

TEST(Amplification, IdealPulseAlwaysFlips) {
  const DeviceModel d = ideal_device();
  const auto w = square_waveform(kPi, 70.4, hardware_grid(320, 1));
  const auto r = run_amplification(w, d, 0, exact_setup({}, false), 1);
  for (double p : r.probabilities) EXPECT_NEAR(p, 1.0, 1e-12);
  EXPECT_EQ(r.repetitions.front(), 1);
  EXPECT_EQ(r.repetitions.back(), 41);
}

TEST(Amplification, OverRotationFollowsConcatenatedRotation) {
  const DeviceModel d = ideal_device();
  const auto w = square_waveform(kPi, 70.4, hardware_grid(320, 1));
  const double e = 0.004;
  const auto r = run_amplification(w, d, 0, exact_setup(NoiseRealization::amplitude(e), false), 1);
  const double eps_r = kPi * e;
  for (std::size_t k = 0; k < r.repetitions.size(); ++k)
    EXPECT_NEAR(r.probabilities[k], 0.5 * (1.0 - std::cos(kPi + r.repetitions[k] * eps_r)), 1e-12);
}

TEST(Amplification, PureT1MatchesMasterEquation) {
  const DeviceModel d = ideal_device(70e3);
  const auto w = square_waveform(kPi, 70.4, hardware_grid(320, 1));
  const auto r = run_amplification(w, d, 0, exact_setup({}, true), 1);
  // Lindblad propagation of n square pi pulses, T1 = 70 us
  EXPECT_NEAR(r.probabilities[0], 0.9996229481207256, 1e-10);
  EXPECT_NEAR(r.probabilities[10], 0.9921423456484333, 1e-10);
  EXPECT_NEAR(r.probabilities[20], 0.9847737464591756, 1e-10);
  const auto f = fit_exp_cos(r);
  EXPECT_NEAR(f.beta / (70.4 / 70e3), 0.75, 0.05);
}

TEST(Amplification, ShotsAreSeeded) {
  const DeviceModel d = valencia_like();
  const auto w = drag_waveform(kPi, 70.4, 0.0, hardware_grid(320, 1));
  AmplificationSetup s;
  const auto a = run_amplification(w, d, 0, s, 4), b = run_amplification(w, d, 0, s, 4);
  EXPECT_EQ(a.probabilities, b.probabilities);
  EXPECT_NO_THROW(a.validate());
}

TEST(Fit, RecoversReferenceCellAtInfiniteShots) {
  const auto r = synthetic(DecayModel::exp_cos, 0.95, 5.47e-3, 1.05e-3);
  const auto f = fit_exp_cos(r);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.eps_r, 5.47e-3, 1e-6);
  EXPECT_NEAR(f.beta, 1.05e-3, 1e-6);
  EXPECT_NEAR(f.p1, 0.95, 1e-6);
  EXPECT_NEAR(f.eps, 5.57e-3, 1e-5);
  EXPECT_DOUBLE_EQ(f.eps, std::hypot(f.eps_r, f.beta));
  EXPECT_DOUBLE_EQ(f.t1_estimate, r.gate_duration_ns / f.beta);
}

TEST(Fit, GaussianModelRecovery) {
  const auto r = synthetic(DecayModel::gauss_cos, 0.93, 8.0e-3, 4.0e-3);
  const auto f = fit_gauss_cos(r);
  EXPECT_NEAR(f.eps_r, 8.0e-3, 1e-6);
  EXPECT_NEAR(f.beta, 4.0e-3, 1e-6);
  EXPECT_NEAR(f.p1, 0.93, 1e-6);
}

TEST(Fit, ZeroDecayGivesIntervalContainingZero) {
  const auto exact = fit_exp_cos(synthetic(DecayModel::exp_cos, 0.95, 2.0e-2, 0.0));
  EXPECT_LE(exact.beta - exact.beta_sd(), 1e-9);
  EXPECT_NEAR(exact.eps / exact.eps_r, 1.0, 1e-6);
  const auto f = fit_exp_cos(synthetic(DecayModel::exp_cos, 0.95, 2.0e-2, 0.0, 1024, 3));
  EXPECT_LE(f.beta - 2.0 * f.beta_sd(), 0.0);
  EXPECT_NEAR(f.eps / f.eps_r, 1.0, 0.05);
}

TEST(Fit, RefitOfFittedModelIsIdempotent) {
  const auto r = synthetic(DecayModel::exp_cos, 0.95, 1.2e-2, 3.0e-3, 1024, 8);
  const auto f = fit_exp_cos(r);
  AmplificationRecord clean = r;
  clean.shots = 0;
  for (std::size_t k = 0; k < clean.repetitions.size(); ++k)
    clean.probabilities[k] = decay_model(DecayModel::exp_cos, f.p1, f.eps_r, f.beta, clean.repetitions[k]);
  const auto g = fit_exp_cos(clean);
  EXPECT_NEAR(g.eps_r, f.eps_r, 1e-9);
  EXPECT_NEAR(g.beta, f.beta, 1e-9);
  EXPECT_NEAR(g.p1, f.p1, 1e-9);
}

TEST(Fit, NeedsSixPoints) {
  AmplificationRecord r;
  r.repetitions = {1};
  r.probabilities = {0.9};
  EXPECT_THROW(fit_exp_cos(r), ArgumentError);
  EXPECT_THROW(fit_gauss_cos(r), ArgumentError);
}

TEST(Fit, MonteCarloMedianErrorAt1024Shots) {
  const double er = 1.83e-2, b = 7.47e-3, truth = std::hypot(er, b);
  std::vector<double> err;
  for (int t = 0; t < 20; ++t) {
    const auto f = fit_exp_cos(synthetic(DecayModel::exp_cos, 0.95, er, b, 1024, 100 + t));
    err.push_back(std::abs(f.eps - truth) / truth);
  }
  std::nth_element(err.begin(), err.begin() + 10, err.end());
  EXPECT_LT(err[10], 0.10);
}

TEST(ModelSelection, PicksGeneratingModel) {
  const auto e = synthetic(DecayModel::exp_cos, 0.95, 1.0e-2, 6.0e-3);
  const auto se = select_model(e);
  EXPECT_EQ(se.selected, DecayModel::exp_cos);
  EXPECT_LT(se.exp_cos.rss, se.gauss_cos.rss);
  const auto g = synthetic(DecayModel::gauss_cos, 0.95, 1.0e-2, 1.5e-2);
  EXPECT_EQ(select_model(g).selected, DecayModel::gauss_cos);
}

TEST(ModelSelection, TieGoesToExponential) {
  const auto r = synthetic(DecayModel::exp_cos, 0.95, 1.0e-2, 0.0);
  const auto s = select_model(r);
  EXPECT_NEAR(s.exp_cos.aicc, s.gauss_cos.aicc, 1e-6 * std::abs(s.exp_cos.aicc) + 1e-6);
  EXPECT_EQ(s.selected, DecayModel::exp_cos);
}

TEST(Variability, ReferenceDayStatistics) {
  const auto rep = variability_report(reference_grid::grid(1));
  ASSERT_TRUE(rep.day_mean[0] && rep.day_sd[0]);
  EXPECT_NEAR(*rep.day_mean[0], 7.21e-3, 1.9e-5);
  EXPECT_NEAR(*rep.day_sd[0], 2.69e-3, 5e-6);
  EXPECT_EQ(rep.missing, 0);
}

TEST(Variability, ReferenceGrandMean) {
  const auto rep = variability_report(reference_grid::grid());
  EXPECT_NEAR(rep.grand_mean, 8.07e-3, 5e-6);
  ASSERT_EQ(rep.qubit_mean.size(), 5u);
  EXPECT_NEAR(*rep.qubit_mean[4], 1.33e-2, 5e-5);
  EXPECT_NEAR(*rep.qubit_mean[3], 4.77e-3, 5e-6);
}

TEST(Variability, EqualValuesHaveZeroSpread) {
  const ErrorGrid g(3, std::vector<std::optional<double>>(4, 2e-3));
  const auto rep = variability_report(g);
  for (const auto& s : rep.day_sd) EXPECT_EQ(*s, 0.0);
  for (const auto& s : rep.qubit_sd) EXPECT_EQ(*s, 0.0);
}

TEST(Variability, MissingCellsAreCounted) {
  ErrorGrid g = reference_grid::grid(2);
  g[1][3].reset();
  const auto rep = variability_report(g);
  EXPECT_EQ(rep.missing, 1);
  const auto ratio = reduction_ratios(reference_grid::grid(2), g);
  EXPECT_FALSE(ratio[1][3].has_value());
  EXPECT_DOUBLE_EQ(*ratio[0][0], 1.0);
}

TEST(Campaign, RealizationSharedAcrossPulsesAndDeterministic) {
  const DeviceModel d = valencia_like();
  const auto drag = drag_waveform(kPi, 70.4, 0.0, hardware_grid(320, 1));
  CampaignSpec spec;
  spec.pulses = {{"a", drag}, {"b", drag}};
  spec.modes = {ExecutionMode::serial};
  spec.qubits = {0, 1};
  spec.setup.shots = 0;
  const auto cells = run_campaign(spec, d, 5);
  ASSERT_EQ(cells.size(), 4u);
  // identical pulses see the same drift realization, so exact records agree
  EXPECT_EQ(cells[0].record.probabilities, cells[2].record.probabilities);
  const auto again = run_campaign(spec, d, 5);
  EXPECT_EQ(cells[1].fits.best().eps, again[1].fits.best().eps);
  const auto g = campaign_grid(cells, "a", ExecutionMode::serial, 1, 2);
  EXPECT_TRUE(g[0][0] && g[0][1]);
}
