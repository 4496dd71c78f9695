#pragma once

// Quantum-jump unraveling of the master equation in `dynamics.hpp`.
//
// Waiting-time algorithm: the unnormalized state follows
// H_eff = H - (i/2) sum_k g_k L_k^dag L_k until its squared norm falls to a
// uniform draw r, then one channel k jumps with weight g_k |L_k psi|^2.
// Channels: radiative sigma_-, pure dephasing sigma_z at gamma*/2, and the
// dressed-state phonon jumps |-><+| and |+><-|. After the field grid ends the
// drive is off and the emitter is either still excited (one more photon after
// an exponential delay) or not.
//
// psi is carried in the frame U = diag(1, exp(i phi)), phi(t) = int (Delta_0 - Delta) dt,
// where H' = [[0, Omega e^{-i phi}/2], [Omega e^{i phi}/2, -Delta_0]]. Populations and
// jump statistics are frame independent; the fast detuning rotation on the
// pulse wings then only multiplies a vanishing drive, so steps stay long.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dynamics.hpp"
#include "integrator.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace rapsim {

using StateVector = Eigen::Vector2cd;

struct JumpOptions {
  double rep_period_ns = 1e3 / 82.0;  // pulse spacing in the emitted stream
  double tol = 1e-7;                  // integrator step tolerance on psi
  double h_max = 2.0;                 // ps
  unsigned threads = 0;               // 0 = hardware concurrency
};

/// Photon emission times from a train of identical pulses.
struct PhotonStream {
  double rep_period_ns = 1e3 / 82.0;
  /// Per pulse, emission times in ps relative to the field's t = 0.
  std::vector<std::vector<double>> emissions_ps;

  std::size_t n_pulses() const { return emissions_ps.size(); }

  double mean_photons() const {
    double s = 0.0;
    for (const auto& e : emissions_ps) s += static_cast<double>(e.size());
    return n_pulses() ? s / static_cast<double>(n_pulses()) : 0.0;
  }

  /// Standard error of mean_photons.
  double mean_photons_se() const {
    const std::size_t n = n_pulses();
    if (n < 2) return 0.0;
    const double m = mean_photons();
    double v = 0.0;
    for (const auto& e : emissions_ps) v += std::pow(static_cast<double>(e.size()) - m, 2);
    return std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
  }

  /// Fractions of pulses with 0, 1 and >= 2 photons.
  std::array<double, 3> number_distribution() const {
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (const auto& e : emissions_ps) p[std::min<std::size_t>(e.size(), 2)] += 1.0;
    for (auto& x : p) x /= static_cast<double>(std::max<std::size_t>(n_pulses(), 1));
    return p;
  }

  /// All emissions on one time axis: pulse k is centred at k * rep_period.
  std::vector<double> absolute_times_ns() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < n_pulses(); ++k)
      for (double t : emissions_ps[k]) out.push_back(static_cast<double>(k) * rep_period_ns + 1e-3 * t);
    return out;
  }
};

namespace detail {

// Drive plus the frame phase phi on the same grid.
class FrameDrive {
 public:
  FrameDrive(const SampledField& field) : drive_(field), delta0_(field.carrier_detuning) {
    const auto& de = drive_.delta_samples();
    phi_.assign(de.size(), 0.0);
    for (std::size_t i = 1; i < de.size(); ++i)
      phi_[i] = phi_[i - 1] + 0.5 * drive_.dt() * (2.0 * delta0_ - de[i] - de[i - 1]);
  }

  const Drive& drive() const { return drive_; }
  double delta0() const { return delta0_; }

  double phase(double t) const {
    const double x = std::clamp((t - drive_.t0()) / drive_.dt(), 0.0,
                                static_cast<double>(phi_.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(x), phi_.size() - 2);
    const double f = x - static_cast<double>(i);
    return phi_[i] + f * (phi_[i + 1] - phi_[i]);
  }

 private:
  Drive drive_;
  double delta0_;
  std::vector<double> phi_;
};

// Jump channels at one instant in the rotated frame: rates, operators, and
// the rate-weighted sum of L^dag L.
struct JumpChannels {
  std::array<double, 4> rate{};
  std::array<Eigen::Matrix2cd, 4> op;
  Eigen::Matrix2cd decay = Eigen::Matrix2cd::Zero();
};

enum JumpChannel : int { radiative = 0, dephasing = 1, phonon_down = 2, phonon_up = 3 };

inline JumpChannels jump_channels(double omega, double delta, double phi, const SystemParams& p) {
  JumpChannels c;
  c.op[radiative] << 0.0, 1.0, 0.0, 0.0;
  c.op[dephasing] << 1.0, 0.0, 0.0, -1.0;
  c.rate[radiative] = p.radiative_rate;
  c.rate[dephasing] = 0.5 * p.pure_dephasing;
  const auto rates = dressed_relaxation_rates(omega, delta, p.phonon);
  c.rate[phonon_down] = rates.down;
  c.rate[phonon_up] = rates.up;
  if (rates.down > 0.0 || rates.up > 0.0) {
    const auto d = dressed_frame(omega, delta);
    const std::complex<double> u = std::polar(1.0, phi);
    const Eigen::Vector2cd plus(d.plus(0), u * d.plus(1));
    const Eigen::Vector2cd minus(d.minus(0), u * d.minus(1));
    c.op[phonon_down] = minus * plus.adjoint();
    c.op[phonon_up] = c.op[phonon_down].adjoint();
  } else {
    c.op[phonon_down].setZero();
    c.op[phonon_up].setZero();
  }
  for (int k = 0; k < 4; ++k)
    if (c.rate[k] > 0.0) c.decay += c.rate[k] * c.op[k].adjoint() * c.op[k];
  return c;
}

// Pure initial state drawn from the eigen-decomposition of rho.
inline StateVector sample_initial(const DensityMatrix& rho, std::mt19937_64& g) {
  const double a = rho(0, 0).real(), d = rho(1, 1).real();
  const std::complex<double> b = rho(0, 1);
  const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
  const double hi = 0.5 * (a + d) + r;
  const bool take_hi = uniform01(g) < std::clamp(hi, 0.0, 1.0);
  if (std::abs(b) == 0.0) return (a >= d) == take_hi ? StateVector(1.0, 0.0) : StateVector(0.0, 1.0);
  const double lambda = take_hi ? hi : 0.5 * (a + d) - r;
  StateVector v(b, lambda - a);  // (rho - lambda) v = 0 from the first row
  return v / v.norm();
}

}  // namespace detail

/// Emission times (ps) of one pulse, drawn from generator `g`.
inline std::vector<double> jump_single_pulse(const detail::FrameDrive& frame,
                                             const SystemParams& params, std::mt19937_64& g,
                                             double tol = 1e-7, double h_max = 2.0) {
  const Drive& drive = frame.drive();
  std::vector<double> photons;
  const std::complex<double> mi(0.0, -1.0);
  auto channels = [&](double t) {
    const auto [omega, delta] = drive.at(t);
    return std::pair{omega, detail::jump_channels(omega, delta, frame.phase(t), params)};
  };
  auto rhs = [&](double t, const StateVector& psi) -> StateVector {
    const auto [omega, c] = channels(t);
    const std::complex<double> coupling = 0.5 * omega * std::polar(1.0, frame.phase(t));
    Eigen::Matrix2cd h;
    h << 0.0, std::conj(coupling), coupling, -frame.delta0();
    return mi * ((h + 0.5 * mi * c.decay) * psi);
  };
  auto err_norm = [](const StateVector& e, const StateVector&, const StateVector&, double tl) {
    return e.cwiseAbs().maxCoeff() / tl;
  };

  StateVector psi = detail::sample_initial(params.initial, g);
  double t = drive.t0();
  const double t_end = drive.t_end();
  StepControl ctl;
  ctl.tol = tol;
  ctl.h_max = h_max;
  ctl.h_init = std::min(drive.dt(), 1e-2);

  while (t < t_end) {
    const double r = uniform01_open_low(g);
    bool jumped = false;
    double t_jump = t_end;
    StateVector psi_jump;
    auto on_step = [&](const DenseStep<StateVector>& d) {
      if ((d.r1 + d.r2).squaredNorm() > r) return true;
      double lo = d.t, hi = d.t + d.h;
      for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (d(mid).squaredNorm() > r ? lo : hi) = mid;
      }
      t_jump = hi;
      psi_jump = d(hi);
      jumped = true;
      return false;
    };
    const StateVector end = integrate_dopri5(rhs, psi, t, t_end, ctl, err_norm, on_step);
    if (!jumped) {
      psi = end / end.norm();
      break;
    }
    const auto c = channels(t_jump).second;
    std::array<double, 4> w{};
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
      w[k] = c.rate[k] > 0.0 ? c.rate[k] * (c.op[k] * psi_jump).squaredNorm() : 0.0;
      total += w[k];
    }
    if (!(total > 0.0)) throw NumericalError("jump_trajectory: jump with zero total rate");
    const double u = uniform01(g) * total;
    int k = -1;
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (w[j] <= 0.0) continue;
      k = j;
      acc += w[j];
      if (u < acc) break;
    }
    psi = c.op[k] * psi_jump;
    psi /= psi.norm();
    if (k == detail::radiative) photons.push_back(t_jump);
    t = t_jump;
  }
  // Drive off after the grid: an excited emitter still radiates once.
  if (params.radiative_rate > 0.0 && uniform01(g) < std::norm(psi(1)))
    photons.push_back(t_end + exponential(g, 1.0 / params.radiative_rate));
  return photons;
}

/// Photon stream from `n_pulses` independent trajectories. Pulse k uses RNG
/// stream (seed, k), so results do not depend on thread count.
inline PhotonStream jump_trajectory(const SampledField& field, const SystemParams& params,
                                    std::size_t n_pulses, std::uint64_t seed,
                                    const JumpOptions& opt = {}) {
  params.validate();
  detail::require(n_pulses >= 1, "jump_trajectory: n_pulses must be >= 1");
  detail::require(opt.rep_period_ns > 0.0, "source.rep_period_ns must be positive");
  detail::require(opt.tol > 0.0, "jump_trajectory: tolerance must be positive");
  detail::require(field.size() >= 2, "jump_trajectory: field needs at least two samples");
  const detail::FrameDrive frame(field);
  PhotonStream out;
  out.rep_period_ns = opt.rep_period_ns;
  out.emissions_ps.resize(n_pulses);
  parallel_for(n_pulses, opt.threads, [&](std::size_t k) {
    auto g = make_stream(seed, k);
    out.emissions_ps[k] = jump_single_pulse(frame, params, g, opt.tol, opt.h_max);
  });
  return out;
}

}  // namespace rapsim
