#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rapsim/dynamics.hpp"

namespace rapsim {
namespace {

constexpr double kPi = units::pi;

PhononParams paper_phonons() { return PhononParams{0.022, 2.0, 4.2}; }

SampledField sech_pulse(double area_pi, double gdd = 0.0) {
  return synthesize(PulseSpec{PulseShape::sech, 3.0, area_pi, gdd, 0.0});
}

TEST(Hamiltonian, ZeroDriveZeroDetuning) { EXPECT_EQ(hamiltonian(0.0, 0.0), Hamiltonian::Zero()); }

TEST(Hamiltonian, DiagonalCase) {
  Eigen::SelfAdjointEigenSolver<Hamiltonian> es(hamiltonian(0.0, -5.0));
  EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), 5.0, 1e-14);
}

TEST(Hamiltonian, ResonantGapEqualsRabiFrequency) {
  // 100 GHz ordinary frequency is 0.628 rad/ps.
  const double omega = units::ghz_to_radps(100.0);
  EXPECT_NEAR(omega, 0.6283, 1e-4);
  Eigen::SelfAdjointEigenSolver<Hamiltonian> es(hamiltonian(omega, 0.0));
  EXPECT_NEAR(es.eigenvalues()(1) - es.eigenvalues()(0), omega, 1e-14);
}

TEST(DressedFrame, SymmetricAvoidedCrossing) {
  const auto d = dressed_frame(1.0, 0.0);
  EXPECT_NEAR(d.e_plus, 0.5, 1e-15);
  EXPECT_NEAR(d.e_minus, -0.5, 1e-15);
  EXPECT_NEAR(d.plus(0) * d.plus(0), 0.5, 1e-15);
  EXPECT_NEAR(d.minus(1) * d.minus(1), 0.5, 1e-15);
}

TEST(DressedFrame, FarDetunedLimits) {
  const auto red = dressed_frame(0.0, -10.0);
  EXPECT_DOUBLE_EQ(red.e_plus, 10.0);
  EXPECT_DOUBLE_EQ(red.e_minus, 0.0);
  EXPECT_NEAR(std::abs(red.plus(1)), 1.0, 1e-15);   // |+> = |e>
  EXPECT_NEAR(std::abs(red.minus(0)), 1.0, 1e-15);  // |-> = |g>
  const auto blue = dressed_frame(1e-6, 1e3);
  EXPECT_NEAR(std::abs(blue.plus(0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(blue.minus(1)), 1.0, 1e-12);
}

TEST(DressedFrame, EigenpairsAndInvariants) {
  for (double om : {0.0, 0.3, 1.0, 2.5}) {
    for (double de : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
      const auto d = dressed_frame(om, de);
      const Eigen::Matrix2d h = hamiltonian(om, de).real();
      EXPECT_GE(d.e_plus, d.e_minus);
      EXPECT_NEAR(d.e_plus - d.e_minus, d.lambda, 1e-14);
      EXPECT_NEAR((h * d.plus - d.e_plus * d.plus).norm(), 0.0, 1e-14);
      EXPECT_NEAR((h * d.minus - d.e_minus * d.minus).norm(), 0.0, 1e-14);
    }
  }
}

TEST(DressedFrame, EigenvectorsContinuousAlongSweep) {
  auto prev = dressed_frame(0.5, -5.0);
  for (int i = 1; i <= 1000; ++i) {
    const auto d = dressed_frame(0.5, -5.0 + 0.01 * i);
    EXPECT_GT(d.minus.dot(prev.minus), 0.99);
    prev = d;
  }
}

TEST(DressedFrame, GapMinimumAtResonance) {
  for (double om : {0.1, 0.628, 2.0}) {
    for (double de : {-1.0, -0.1, 0.05, 2.0}) EXPECT_GT(dressed_frame(om, de).lambda, om);
    EXPECT_EQ(dressed_frame(om, 0.0).lambda, om);
  }
  // A positive-chirp sweep crosses resonance at the pulse centre, where the
  // gap equals the peak Rabi frequency.
  const auto f = sech_pulse(2.0, 32.0);
  const Drive drive(f);
  const auto& de = drive.delta_samples();
  std::size_t cross = 0;
  for (std::size_t i = 1; i < de.size(); ++i)
    if (de[i - 1] < 0.0 && de[i] >= 0.0) cross = i;
  EXPECT_NEAR(drive.time(cross), 0.0, 2.0 * f.dt);
  const double om = drive.omega_samples()[cross];
  EXPECT_NEAR(std::hypot(om, de[cross]), om, 1e-4);
  EXPECT_NEAR(om, f.peak(), 1e-4 * f.peak());
}

TEST(Phonons, SpectralDensity) {
  const auto p = paper_phonons();
  EXPECT_EQ(phonon_spectral_density(0.0, p), 0.0);
  // Golden: 0.022 * exp(-1/4)
  EXPECT_NEAR(phonon_spectral_density(1.0, p), 0.017133617227570907, 1e-15);
  const double wmax = 2.0 * std::sqrt(1.5);
  EXPECT_NEAR(wmax, 2.449489742783178, 1e-14);
  EXPECT_GT(phonon_spectral_density(wmax, p), phonon_spectral_density(wmax - 1e-3, p));
  EXPECT_GT(phonon_spectral_density(wmax, p), phonon_spectral_density(wmax + 1e-3, p));
  EXPECT_THROW(phonon_spectral_density(-0.1, p), ValidationError);
}

TEST(Phonons, ThermalFrequencyAt4K) {
  EXPECT_NEAR(units::thermal_frequency(4.2), 0.549865424670267, 1e-12);
}

TEST(Phonons, RelaxationRatesGolden) {
  const auto p = paper_phonons();
  const auto r = dressed_relaxation_rates(0.628, 0.0, p);
  EXPECT_NEAR(r.down, 0.011390679247072268, 1e-14);
  EXPECT_NEAR(r.up, 0.0036353223190359676, 1e-14);
  const auto q = dressed_relaxation_rates(0.3, 0.4, p);
  EXPECT_NEAR(q.down, 0.002446202299730674, 1e-14);
  EXPECT_NEAR(q.up, 0.0009853319772042282, 1e-14);
}

TEST(Phonons, RateLimits) {
  auto p = paper_phonons();
  const auto z = dressed_relaxation_rates(0.0, 1.0, p);
  EXPECT_EQ(z.down, 0.0);
  EXPECT_EQ(z.up, 0.0);
  const auto zz = dressed_relaxation_rates(0.0, 0.0, p);
  EXPECT_EQ(zz.down, 0.0);
  p.temperature_k = 0.0;
  const auto cold = dressed_relaxation_rates(0.5, 0.5, p);
  EXPECT_EQ(cold.up, 0.0);
  const double lam = std::hypot(0.5, 0.5);
  EXPECT_NEAR(cold.down, 0.5 * kPi * 0.5 * phonon_spectral_density(lam, p), 1e-15);
}

TEST(Evolve, PulseAreaTheoremLossless) {
  for (double a : {0.5, 1.0, 2.0, 3.0}) {
    const auto tr = evolve(sech_pulse(a), SystemParams{});
    const double expect = std::pow(std::sin(0.5 * a * kPi), 2);
    EXPECT_NEAR(tr.final_excited(), expect, 1e-4) << a;
  }
}

TEST(Evolve, GaussianEnvelopeObeysAreaTheoremToo) {
  const auto f = synthesize(PulseSpec{PulseShape::gaussian, 3.0, 1.5, 0.0, 0.0});
  EXPECT_NEAR(evolve(f, SystemParams{}).final_excited(), 0.5, 1e-4);
}

TEST(Evolve, UnitaryWithoutDissipation) {
  const auto tr = evolve(sech_pulse(2.3, 32.0), SystemParams{});
  for (const auto& r : tr.rho) {
    EXPECT_NEAR((r * r).trace().real(), 1.0, 1e-8);
    EXPECT_NEAR(r.trace().real(), 1.0, 1e-9);
  }
}

TEST(Evolve, DetuningSignSymmetryLossless) {
  for (double a : {1.0, 2.0, 3.0}) {
    const double up = evolve(sech_pulse(a, 32.0), SystemParams{}).final_excited();
    const double down = evolve(sech_pulse(a, -32.0), SystemParams{}).final_excited();
    EXPECT_NEAR(up, down, 1e-6) << a;
  }
}

TEST(Evolve, DensityMatrixStaysPhysicalWithAllChannels) {
  SystemParams sys;
  sys.radiative_rate = units::ghz_to_radps(0.39);
  sys.pure_dephasing = 0.01;
  sys.phonon = paper_phonons();
  for (double gdd : {-32.0, 0.0, 32.0}) {
    const auto tr = evolve(sech_pulse(2.5, gdd), sys);
    for (const auto& r : tr.rho) {
      EXPECT_LE(std::abs(r.trace() - 1.0), 1e-9);
      EXPECT_LE((r - r.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_GE(detail::min_eigenvalue(r), -1e-9);
    }
  }
}

TEST(Evolve, PositiveChirpBeatsNegativeWithPhonons) {
  SystemParams sys;
  sys.phonon = paper_phonons();
  const double pos = evolve(sech_pulse(2.0, 32.0), sys).final_excited();
  const double neg = evolve(sech_pulse(2.0, -32.0), sys).final_excited();
  EXPECT_GE(pos, 0.9);
  EXPECT_GT(pos, neg);
}

TEST(Evolve, ConvergesUnderTighterTolerance) {
  SystemParams sys;
  sys.phonon = paper_phonons();
  const auto f = sech_pulse(2.2, -32.0);
  const double a = evolve(f, sys, {1e-8}).final_excited();
  const double b = evolve(f, sys, {5e-9}).final_excited();
  EXPECT_LT(std::abs(a - b), 1e-6);
}

TEST(Evolve, RadiativeDecayAfterPulse) {
  SystemParams sys;
  sys.radiative_rate = 0.01;
  const auto tr = evolve(sech_pulse(1.0), sys);
  // Late-time populations decay as exp(-Gamma t) once the pulse has passed.
  const std::size_t n = tr.t.size();
  const std::size_t a = n - 1 - n / 10;
  EXPECT_NEAR(tr.p_e[n - 1] / tr.p_e[a], std::exp(-0.01 * (tr.t[n - 1] - tr.t[a])), 1e-6);
  // Yield counts every photon: close to the pi-pulse inversion.
  EXPECT_NEAR(photon_yield(tr, 0.01), 1.0, 0.02);
}

TEST(Evolve, DenseOutputMatchesFineStepping) {
  // h_max below the grid spacing forces steps to land between samples;
  // the interpolated samples must agree with the coarse-stepped ones.
  const auto f = sech_pulse(1.7, 16.0);
  SystemParams sys;
  sys.phonon = paper_phonons();
  const auto coarse = evolve(f, sys, {1e-10, 1.0});
  const auto fine = evolve(f, sys, {1e-10, 0.3 * f.dt});
  for (std::size_t i = 0; i < coarse.t.size(); i += 97)
    EXPECT_NEAR(coarse.p_e[i], fine.p_e[i], 1e-7);
}

TEST(Evolve, RejectsInvalidParameters) {
  SystemParams sys;
  sys.radiative_rate = -1.0;
  EXPECT_THROW(evolve(sech_pulse(1.0), sys), ValidationError);
  sys.radiative_rate = 0.0;
  sys.phonon.cutoff_radps = 0.0;
  EXPECT_THROW(evolve(sech_pulse(1.0), sys), ValidationError);
}

TEST(Adiabaticity, StrongChirpLargeArea) {
  const double v = adiabaticity_parameter(sech_pulse(2.0, 32.0));
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(Adiabaticity, DecreasesWithDriveStrength) {
  const double a = adiabaticity_parameter(sech_pulse(1.5, 32.0));
  const double b = adiabaticity_parameter(sech_pulse(2.0, 32.0));
  const double c = adiabaticity_parameter(sech_pulse(3.0, 32.0));
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
}

TEST(Adiabaticity, ResonantUnchirpedHasFixedMixingAngle) {
  // Delta = 0 everywhere: the mixing angle never moves, so the figure is zero.
  EXPECT_EQ(adiabaticity_parameter(sech_pulse(1.0)), 0.0);
  // Detuned but unchirped: |Omega' Delta| / Lambda^3, largest on the wings.
  auto spec = PulseSpec{PulseShape::sech, 3.0, 1.0, 0.0, 0.2};
  const auto f = synthesize(spec);
  const Drive drive(f);
  const auto series = adiabaticity_series(drive);
  const double tau = 3.0 / units::sech_fwhm_factor;
  const std::size_t i = drive.size() / 2 + static_cast<std::size_t>(2.0 * tau / f.dt);
  const double om = drive.omega_samples()[i];
  const double dom = -om * std::tanh(drive.time(i) / tau) / tau;
  EXPECT_NEAR(series[i], std::abs(dom * 0.2) / std::pow(std::hypot(om, 0.2), 3), 1e-3 * series[i]);
}

TEST(TrajectoryCsv, RoundTrips) {
  SystemParams sys;
  sys.phonon = paper_phonons();
  const auto tr = evolve(sech_pulse(1.5, 8.0), sys);
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  const auto back = read_trajectory_csv(ss, "mem");
  ASSERT_EQ(back.t.size(), tr.t.size());
  for (std::size_t i = 0; i < tr.t.size(); i += 13) {
    EXPECT_EQ(back.t[i], tr.t[i]);
    EXPECT_EQ(back.rho[i](0, 1), tr.rho[i](0, 1));
    EXPECT_EQ(back.p_e[i], tr.p_e[i]);
    EXPECT_EQ(back.adiabaticity[i], tr.adiabaticity[i]);
  }
}

TEST(DressedCurves, EnergiesBracketTheBareLevelsAndRoundTrip) {
  const auto c = dressed_curves(sech_pulse(2.0, 32.0), SystemParams{});
  ASSERT_EQ(c.t_ps.size(), c.p_minus.size());
  for (std::size_t i = 0; i < c.t_ps.size(); i += 7) {
    EXPECT_NEAR(c.e_plus[i] - c.e_minus[i], std::hypot(c.omega[i], c.delta[i]), 1e-12);
    EXPECT_GE(c.e_plus[i], std::max(0.0, -c.delta[i]) - 1e-12);
    EXPECT_LE(c.e_minus[i], std::min(0.0, -c.delta[i]) + 1e-12);
    EXPECT_NEAR(c.p_plus[i] + c.p_minus[i], 1.0, 1e-8);
  }
  std::stringstream ss;
  write_dressed_csv(ss, c);
  const auto back = read_dressed_csv(ss, "dressed");
  EXPECT_EQ(back.e_minus, c.e_minus);
  EXPECT_EQ(back.p_plus, c.p_plus);
}

}  // namespace
}  // namespace rapsim
