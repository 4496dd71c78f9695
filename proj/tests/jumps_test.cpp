#include <gtest/gtest.h>

#include <cmath>

#include "rapsim/jumps.hpp"

namespace rapsim {
namespace {

SampledField sech_pulse(double area_pi, double gdd = 0.0) {
  return synthesize(PulseSpec{PulseShape::sech, 3.0, area_pi, gdd, 0.0});
}

SystemParams all_channels() {
  SystemParams p;
  p.radiative_rate = units::ghz_to_radps(0.39);
  p.pure_dephasing = 0.01;
  p.phonon = PhononParams{0.022, 2.0, 4.2};
  return p;
}

TEST(JumpTrajectory, MeanPhotonNumberMatchesMasterEquation) {
  const auto p = all_channels();
  for (double gdd : {32.0, -32.0}) {
    const auto f = sech_pulse(2.0, gdd);
    const double yield = photon_yield(evolve(f, p), p.radiative_rate);
    const auto s = jump_trajectory(f, p, 4000, 11);
    EXPECT_NEAR(s.mean_photons(), yield, 3.0 * s.mean_photons_se()) << gdd;
  }
}

TEST(JumpTrajectory, ResonantPiPulseYieldsOnePhoton) {
  SystemParams p;
  p.radiative_rate = units::ghz_to_radps(0.39);
  const auto s = jump_trajectory(sech_pulse(1.0), p, 2000, 3);
  const double yield = photon_yield(evolve(sech_pulse(1.0), p), p.radiative_rate);
  // Excess over one photon is rare; binomial SE from the expected excess.
  EXPECT_NEAR(s.mean_photons(), yield, 3.0 * std::sqrt((yield - 1.0 + 1e-3) / 2000.0));
  EXPECT_GT(s.number_distribution()[1], 0.98);
}

TEST(JumpTrajectory, DeterministicPerSeedAndThreadCount) {
  const auto p = all_channels();
  const auto f = sech_pulse(2.0, 32.0);
  JumpOptions one;
  one.threads = 1;
  JumpOptions three;
  three.threads = 3;
  const auto a = jump_trajectory(f, p, 300, 99, one);
  const auto b = jump_trajectory(f, p, 300, 99, three);
  EXPECT_EQ(a.emissions_ps, b.emissions_ps);
  const auto c = jump_trajectory(f, p, 300, 100, one);
  EXPECT_NE(a.emissions_ps, c.emissions_ps);
  // Pulse k depends only on (seed, k).
  const auto d = jump_trajectory(f, p, 50, 99, one);
  for (std::size_t k = 0; k < 50; ++k) EXPECT_EQ(d.emissions_ps[k], a.emissions_ps[k]);
}

TEST(JumpTrajectory, NoRadiativeRateNoPhotons) {
  SystemParams p;
  p.pure_dephasing = 0.05;
  p.phonon = PhononParams{0.022, 2.0, 4.2};
  const auto s = jump_trajectory(sech_pulse(2.0, 32.0), p, 200, 5);
  EXPECT_EQ(s.mean_photons(), 0.0);
}

TEST(JumpTrajectory, MixedInitialStateSampledByWeight) {
  SystemParams p;
  p.radiative_rate = 0.01;
  p.initial << 0.7, 0.0, 0.0, 0.3;
  const auto f = sech_pulse(0.0);
  const auto s = jump_trajectory(f, p, 4000, 8);
  EXPECT_NEAR(s.mean_photons(), 0.3, 3.0 * s.mean_photons_se());
  // Emission delays from the start of the grid follow the lifetime.
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : s.emissions_ps)
    for (double t : e) {
      sum += t - f.t0;
      ++n;
    }
  EXPECT_NEAR(sum / static_cast<double>(n), 100.0, 10.0);
}

// Lossless resonant pi sech: emitting at t and being re-excited by the area
// left after t gives p2 ~ Gamma int sin^2(A/2) cos^2(A/2) dt = Gamma tau / 2,
// since sin A(t) = sech(t / tau).
TEST(JumpTrajectory, TwoPhotonFractionScalesWithGammaTau) {
  const double tau = 3.0 / units::sech_fwhm_factor;
  double previous = 1.0;
  for (double gamma : {0.1, 0.01, 0.001}) {
    SystemParams p;
    p.radiative_rate = gamma;
    const auto s = jump_trajectory(sech_pulse(1.0), p, 20000, 21);
    const double p2 = s.number_distribution()[2];
    const double se = std::sqrt(p2 * (1.0 - p2) / 20000.0) + 1.0 / 20000.0;
    EXPECT_GT(previous, p2);
    EXPECT_LE(p2, gamma * tau / 2.0 + 3.0 * se) << gamma;
    if (gamma <= 0.01) {
      EXPECT_NEAR(p2, gamma * tau / 2.0, 3.0 * se) << gamma;
    }
    previous = p2;
  }
  SystemParams p;
  p.radiative_rate = 0.1;
  EXPECT_GT(jump_trajectory(sech_pulse(1.0), p, 2000, 1).number_distribution()[2], 0.0);
}

TEST(PhotonStream, AbsoluteTimesAndStatistics) {
  PhotonStream s;
  s.rep_period_ns = 10.0;
  s.emissions_ps = {{500.0}, {}, {100.0, 2000.0}};
  EXPECT_DOUBLE_EQ(s.mean_photons(), 1.0);
  EXPECT_NEAR(s.mean_photons_se(), 1.0 / std::sqrt(3.0), 1e-12);
  const auto d = s.number_distribution();
  EXPECT_DOUBLE_EQ(d[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(d[2], 1.0 / 3.0);
  const auto t = s.absolute_times_ns();
  ASSERT_EQ(t.size(), 3u);
  EXPECT_DOUBLE_EQ(t[0], 0.5);
  EXPECT_DOUBLE_EQ(t[1], 20.1);
  EXPECT_DOUBLE_EQ(t[2], 22.0);
}

TEST(JumpTrajectory, RejectsBadInput) {
  EXPECT_THROW(jump_trajectory(sech_pulse(1.0), SystemParams{}, 0, 1), ValidationError);
  JumpOptions o;
  o.rep_period_ns = 0.0;
  EXPECT_THROW(jump_trajectory(sech_pulse(1.0), SystemParams{}, 1, 1, o), ValidationError);
}

}  // namespace
}  // namespace rapsim
