#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "robustpulse/optimizer.hpp"

using namespace robustpulse;

namespace {

OptimizationSpec base_spec(int segments, RobustnessMode mode) {
  OptimizationSpec s;
  s.grid = hardware_grid(segments, 16);
  s.constraints.omega_max = angular_from_mhz(25.0);
  s.target = target_rotation(kPi, 0.0);
  s.mode = mode;
  s.ensemble = make_ensemble(mode);
  s.seed = 3;
  return s;
}

std::vector<double> random_params(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> p(n);
  for (auto& v : p) v = nd(rng);
  return p;
}

double worst_fd_error(const std::vector<double>& p, const OptimizationSpec& spec) {
  const auto g = gradient(p, spec);
  double scale = 0.0;
  for (double v : g) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(p[i]));
    auto a = p, b = p;
    a[i] += h;
    b[i] -= h;
    const double fd = (cost(a, spec) - cost(b, spec)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(std::abs(fd), 1e-3 * scale));
  }
  return worst;
}

}  // namespace

TEST(TargetRotation, Examples) {
  const CMatrix x = target_rotation(kPi, 0.0);
  EXPECT_NEAR(operational_infidelity(x, -Complex(0, 1) * oracle::sigma_x(), 2), 0.0, 1e-15);
  EXPECT_LT((target_rotation(0.0, 1.3) - CMatrix::Identity(2, 2)).norm(), 1e-15);
  const CMatrix y = target_rotation(kPi / 2, kPi / 2);
  const double c = 1.0 / std::sqrt(2.0);
  CMatrix expect(2, 2);
  expect << c, -c, c, c;
  EXPECT_LT((y - expect).norm(), 1e-15);
  const CMatrix x3 = target_rotation(kPi, 0.0, 3);
  EXPECT_EQ(x3.rows(), 3);
  EXPECT_EQ(x3(2, 2), Complex(1.0));
}

TEST(Ensemble, ModesContainExpectedMembers) {
  const auto none = make_ensemble(RobustnessMode::none);
  ASSERT_EQ(none.size(), 1u);
  EXPECT_TRUE(none[0].is_zero());
  const auto dual = make_ensemble(RobustnessMode::dual);
  bool has_delta = false, has_amp = false;
  for (const auto& n : dual) {
    has_delta |= n.delta != 0.0;
    has_amp |= n.eps_common != 0.0;
  }
  EXPECT_TRUE(has_delta);
  EXPECT_TRUE(has_amp);
  for (const auto& n : make_ensemble(RobustnessMode::dephasing)) EXPECT_EQ(n.eps_common, 0.0);
  for (const auto& n : make_ensemble(RobustnessMode::amplitude)) EXPECT_EQ(n.delta, 0.0);
}

TEST(Cost, ZeroParamsAgainstPiRotation) {
  const auto spec = base_spec(8, RobustnessMode::none);
  const auto b = evaluate(std::vector<double>(16, 0.0), spec);
  EXPECT_NEAR(b.operational_fidelity, 0.0, 1e-15);
  EXPECT_GE(b.cost, 1.0 - 1e-15);
}

TEST(Cost, NoneModeBoundedByDualPlusLambda) {
  const auto none = base_spec(8, RobustnessMode::none), dual = base_spec(8, RobustnessMode::dual);
  for (int t = 0; t < 5; ++t) {
    const auto p = random_params(16, 100 + t);
    EXPECT_LE(cost(p, none), cost(p, dual) + dual.lambda);
  }
}

TEST(Cost, RejectsNonFiniteParams) {
  const auto spec = base_spec(8, RobustnessMode::none);
  auto p = random_params(16, 1);
  p[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(cost(p, spec), NumericError);
}

TEST(Gradient, MatchesFiniteDifferencesForEachFilter) {
  for (auto filter : {FilterKind::sinc, FilterKind::none, FilterKind::bound_slew}) {
    auto spec = base_spec(8, RobustnessMode::dual);
    spec.constraints.filter = filter;
    spec.constraints.slew_max = 0.01;
    EXPECT_LT(worst_fd_error(random_params(16, 7), spec), 1e-4) << static_cast<int>(filter);
  }
}

TEST(Gradient, OrthogonalToGlobalPhaseDirection) {
  // A common drive phase conjugates every propagator by a Z rotation, which
  // leaves the cost unchanged for a frame-symmetric target.
  auto spec = base_spec(8, RobustnessMode::dual);
  spec.target = CMatrix::Identity(2, 2);
  const int n = spec.grid.segment_count;
  for (int t = 0; t < 5; ++t) {
    const auto p = random_params(2 * n, 20 + t);
    const auto g = gradient(p, spec);
    double proj = 0.0, norm = 0.0;
    for (int k = 0; k < n; ++k) {
      proj += g[k] * -p[n + k] + g[n + k] * p[k];
      norm += g[k] * g[k] + g[n + k] * g[n + k];
    }
    EXPECT_LT(std::abs(proj), 1e-8);
    EXPECT_GT(norm, 1e-8);
  }
}

TEST(Optimize, UnconstrainedPiRotationConverges) {
  auto spec = base_spec(32, RobustnessMode::none);
  spec.grid = hardware_grid(32, 16);
  spec.constraints.omega_max = angular_from_mhz(50.0);
  spec.restarts = 2;
  const auto r = optimize(spec);
  EXPECT_LT(r.final_operational_infidelity, 1e-6);
  EXPECT_LE(r.waveform.max_amplitude(), spec.constraints.omega_max * (1.0 + 1e-12));
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) EXPECT_LE(r.cost_history[k], r.cost_history[k - 1]);
  EXPECT_TRUE(r.waveform.grid().is_hardware_compatible());
}

TEST(Optimize, AtExactMinimumGradientVanishes) {
  auto spec = base_spec(32, RobustnessMode::none);
  spec.constraints.omega_max = angular_from_mhz(50.0);
  spec.restarts = 1;
  const auto r = optimize(spec);
  ASSERT_LT(r.final_cost, 1e-9);
  double norm = 0.0;
  for (double v : gradient(r.params, spec)) norm += v * v;
  EXPECT_LT(std::sqrt(norm), 1e-4);
}

TEST(Optimize, DeterministicForFixedSeed) {
  auto spec = base_spec(16, RobustnessMode::dephasing);
  spec.restarts = 2;
  spec.max_iterations = 200;
  const auto a = optimize(spec), b = optimize(spec);
  EXPECT_EQ(a.final_cost, b.final_cost);
  EXPECT_EQ(a.waveform.segments(), b.waveform.segments());
}

TEST(Optimize, DephasingRobustBeatsSquarePulse) {
  const DeviceModel d = valencia_like();
  auto spec = base_spec(40, RobustnessMode::dephasing);
  spec.restarts = 4;
  const auto r = optimize(spec);
  const auto sq = square_waveform(kPi, spec.grid.duration(), hardware_grid(spec.grid.segment_count * 16, 1));
  const auto mr = scan_robustness(r.waveform, spec.target, {0.5}, {0.0}, d, 0);
  const auto ms = scan_robustness(sq, spec.target, {0.5}, {0.0}, d, 0);
  EXPECT_LT(10.0 * mr.infidelity[0][0], ms.infidelity[0][0]);
}

TEST(Optimize, DephasingSucceedsAtOnePointFourPrimitiveDuration) {
  const DeviceModel d = valencia_like();
  auto spec = base_spec(28, RobustnessMode::dephasing);
  spec.grid = grid_for_duration(1.4 * d.pi_duration_ns, 16);
  spec.restarts = 4;
  const auto r = optimize(spec);
  EXPECT_LT(r.final_operational_infidelity, 1e-4);
  const auto m = scan_robustness(r.waveform, spec.target, {0.5}, {0.0}, d, 0);
  EXPECT_LT(m.infidelity[0][0], 1e-3);
}

TEST(Scan, CenterIsNoiselessAndValuesBounded) {
  const DeviceModel d = valencia_like();
  const auto sq = square_waveform(kPi, 70.4, hardware_grid(320, 1));
  const auto m = scan_robustness(sq, target_rotation(kPi, 0.0), linspace(-1, 1, 5), {-0.2, 0.0, 0.2}, d, 0);
  EXPECT_NEAR(m.infidelity[2][1], 0.0, 1e-12);
  for (const auto& row : m.infidelity)
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  EXPECT_NEAR(m.infidelity[2][2], 0.09549150281252627, 1e-12);
  EXPECT_NEAR(m.amplitude_percent[2], 20.0, 1e-12);
  EXPECT_NEAR(m.detuning_percent[4], 100.0 * 1.0 / 4745.0, 1e-12);
}
