#pragma once

// Driven, dissipative two-level system in the laser rotating frame.
// Basis order (|g>, |e>); hbar = 1; rates in 1/ps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "pulseshaper.hpp"
#include "units.hpp"

namespace rapsim {

using DensityMatrix = Eigen::Matrix2cd;
using Hamiltonian = Eigen::Matrix2cd;

inline DensityMatrix ground_state() {
  DensityMatrix r = DensityMatrix::Zero();
  r(0, 0) = 1.0;
  return r;
}

struct PhononParams {
  double alpha_ps2 = 0.0;        // coupling strength, ps^2
  double cutoff_radps = 2.0;     // omega_c
  double temperature_k = 0.0;

  void validate() const {
    detail::require(alpha_ps2 >= 0.0, "system.phonon.alpha_ps2 must be >= 0");
    detail::require(cutoff_radps > 0.0, "system.phonon.cutoff_radps must be positive");
    detail::require(temperature_k >= 0.0, "system.phonon.temperature_k must be >= 0");
  }
};

struct SystemParams {
  double radiative_rate = 0.0;   // Gamma
  double pure_dephasing = 0.0;   // gamma*
  PhononParams phonon;
  DensityMatrix initial = ground_state();

  void validate() const {
    detail::require(radiative_rate >= 0.0, "system.radiative_rate_per_ps must be >= 0");
    detail::require(pure_dephasing >= 0.0, "system.pure_dephasing_per_ps must be >= 0");
    phonon.validate();
    detail::require((initial - initial.adjoint()).norm() < 1e-12, "system.initial must be Hermitian");
    detail::require(std::abs(initial.trace() - 1.0) < 1e-9, "system.initial must have unit trace");
  }
};

/// H = -Delta |e><e| + (Omega/2)(|e><g| + |g><e|).
inline Hamiltonian hamiltonian(double omega, double delta) {
  Hamiltonian h;
  h << 0.0, 0.5 * omega, 0.5 * omega, -delta;
  return h;
}

// -- Dressed frame -----------------------------------------------------------

/// Instantaneous eigenbasis of `hamiltonian(omega, delta)`.
struct DressedPoint {
  double lambda = 0.0;      // sqrt(Delta^2 + Omega^2)
  double e_plus = 0.0;
  double e_minus = 0.0;
  double mixing_angle = 0.0;  // atan2(Omega, Delta), in [0, pi] for Omega >= 0
  Eigen::Vector2d plus;       // components on (|g>, |e>)
  Eigen::Vector2d minus;
};

/// E+- = (-Delta +- Lambda)/2. Far red detuning takes |+> -> |e>, |-> -> |g>;
/// far blue detuning takes |+> -> |g>, |-> -> |e>. The eigenvectors are real
/// and continuous in (Omega, Delta) for Omega > 0.
inline DressedPoint dressed_frame(double omega, double delta) {
  DressedPoint p;
  p.lambda = std::hypot(omega, delta);
  p.e_plus = 0.5 * (-delta + p.lambda);
  p.e_minus = 0.5 * (-delta - p.lambda);
  p.mixing_angle = std::atan2(omega, delta);
  const double c = std::cos(0.5 * p.mixing_angle), s = std::sin(0.5 * p.mixing_angle);
  p.plus << c, s;
  p.minus << -s, c;
  return p;
}

// -- Phonon bath ---------------------------------------------------------------

/// J(w) = alpha w^3 exp(-(w/w_c)^2).
inline double phonon_spectral_density(double omega, const PhononParams& p) {
  detail::require(omega >= 0.0, "phonon_spectral_density: negative frequency");
  const double x = omega / p.cutoff_radps;
  return p.alpha_ps2 * omega * omega * omega * std::exp(-x * x);
}

/// Bose occupation 1/(exp(w/kT) - 1); exactly 0 at T = 0.
inline double bose_occupation(double omega, double temperature_k) {
  if (temperature_k <= 0.0) return 0.0;
  return 1.0 / std::expm1(omega / units::thermal_frequency(temperature_k));
}

struct RelaxationRates {
  double down = 0.0;  // |+> -> |-> with phonon emission
  double up = 0.0;    // |-> -> |+> with phonon absorption
};

/// Weak-coupling rates between dressed states:
/// (pi/2)(Omega/Lambda)^2 J(Lambda) (n + 1) and (pi/2)(Omega/Lambda)^2 J(Lambda) n.
inline RelaxationRates dressed_relaxation_rates(double omega, double delta, const PhononParams& p) {
  const double lambda = std::hypot(omega, delta);
  if (lambda == 0.0 || omega == 0.0 || p.alpha_ps2 == 0.0) return {};
  const double proj = omega / lambda;
  const double pref = 0.5 * units::pi * proj * proj * phonon_spectral_density(lambda, p);
  const double n = bose_occupation(lambda, p.temperature_k);
  return {pref * (n + 1.0), pref * n};
}

// -- Drive -------------------------------------------------------------------

/// |Omega(t)| and Delta(t) sampled from a field, linearly interpolated between
/// samples and held constant beyond the grid.
class Drive {
 public:
  explicit Drive(const SampledField& field)
      : t0_(field.t0), dt_(field.dt), omega_(field.magnitude()),
        delta_(instantaneous_detuning(field)) {}

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return omega_.size(); }
  double time(std::size_t i) const { return t0_ + dt_ * static_cast<double>(i); }
  double t_end() const { return time(size() - 1); }
  const std::vector<double>& omega_samples() const { return omega_; }
  const std::vector<double>& delta_samples() const { return delta_; }

  std::pair<double, double> at(double t) const {
    const double x = (t - t0_) / dt_;
    if (x <= 0.0) return {omega_.front(), delta_.front()};
    const auto last = static_cast<double>(omega_.size() - 1);
    if (x >= last) return {omega_.back(), delta_.back()};
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    return {omega_[i] + f * (omega_[i + 1] - omega_[i]), delta_[i] + f * (delta_[i + 1] - delta_[i])};
  }

 private:
  double t0_, dt_;
  std::vector<double> omega_;
  std::vector<double> delta_;
};

// -- Master equation ------------------------------------------------------------

namespace detail {

inline DensityMatrix dissipator(const Eigen::Matrix2cd& l, const DensityMatrix& rho) {
  const Eigen::Matrix2cd ld = l.adjoint();
  const Eigen::Matrix2cd ldl = ld * l;
  return l * rho * ld - 0.5 * (ldl * rho + rho * ldl);
}

inline double min_eigenvalue(const DensityMatrix& rho) {
  const double a = rho(0, 0).real(), d = rho(1, 1).real();
  const double b = std::abs(rho(0, 1));
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
}

inline double max_abs(const Eigen::Matrix2cd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Right-hand side of the Lindblad equation with radiative decay, pure
/// dephasing and phonon-mediated jumps between the instantaneous dressed states.
class MasterEquation {
 public:
  MasterEquation(const Drive& drive, const SystemParams& params) : drive_(drive), params_(params) {
    sigma_minus_ << 0.0, 1.0, 0.0, 0.0;
    sigma_z_ << 1.0, 0.0, 0.0, -1.0;
  }

  DensityMatrix operator()(double t, const DensityMatrix& rho) const {
    const auto [omega, delta] = drive_.at(t);
    const Hamiltonian h = hamiltonian(omega, delta);
    const std::complex<double> mi(0.0, -1.0);
    DensityMatrix out = mi * (h * rho - rho * h);
    if (params_.radiative_rate > 0.0)
      out += params_.radiative_rate * detail::dissipator(sigma_minus_, rho);
    if (params_.pure_dephasing > 0.0)
      out += 0.5 * params_.pure_dephasing * detail::dissipator(sigma_z_, rho);
    const auto rates = dressed_relaxation_rates(omega, delta, params_.phonon);
    if (rates.down > 0.0 || rates.up > 0.0) {
      const auto d = dressed_frame(omega, delta);
      const Eigen::Matrix2cd down = (d.minus * d.plus.transpose()).cast<std::complex<double>>();
      if (rates.down > 0.0) out += rates.down * detail::dissipator(down, rho);
      if (rates.up > 0.0) out += rates.up * detail::dissipator(down.adjoint(), rho);
    }
    return out;
  }

 private:
  const Drive& drive_;
  const SystemParams& params_;
  Eigen::Matrix2cd sigma_minus_;
  Eigen::Matrix2cd sigma_z_;
};

struct StateTrajectory {
  std::vector<double> t;
  std::vector<DensityMatrix> rho;
  std::vector<double> p_e;
  std::vector<double> p_plus;
  std::vector<double> p_minus;
  std::vector<double> adiabaticity;

  double final_excited() const { return p_e.back(); }
};

/// Local |Omega' Delta - Omega Delta'| / Lambda^3 on the drive grid (0 where Lambda = 0).
inline std::vector<double> adiabaticity_series(const Drive& drive) {
  const auto& om = drive.omega_samples();
  const auto& de = drive.delta_samples();
  const std::size_t n = om.size();
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == n ? i : i + 1;
    const double span = drive.dt() * static_cast<double>(hi - lo);
    const double dom = (om[hi] - om[lo]) / span, dde = (de[hi] - de[lo]) / span;
    const double lambda = std::hypot(om[i], de[i]);
    if (lambda > 0.0) a[i] = std::abs(dom * de[i] - om[i] * dde) / (lambda * lambda * lambda);
  }
  return a;
}

/// Maximum adiabaticity figure over the samples where |Omega| >= floor * peak.
inline double adiabaticity_parameter(const SampledField& field, double floor = 1e-3) {
  const Drive drive(field);
  const auto a = adiabaticity_series(drive);
  const auto& om = drive.omega_samples();
  const double peak = *std::max_element(om.begin(), om.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (om[i] >= floor * peak && om[i] > 0.0) worst = std::max(worst, a[i]);
  return worst;
}

struct EvolveOptions {
  double tol = 1e-11;
  double h_max = 1.0;
};

/// Integrates the master equation over the field grid and samples rho on it.
inline StateTrajectory evolve(const SampledField& field, const SystemParams& params,
                              const EvolveOptions& opt = {}) {
  params.validate();
  detail::require(field.size() >= 2, "evolve: field needs at least two samples");
  detail::require(opt.tol > 0.0, "evolve: tolerance must be positive");
  const Drive drive(field);
  const MasterEquation rhs(drive, params);

  StateTrajectory tr;
  const std::size_t n = drive.size();
  tr.t.resize(n);
  tr.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) tr.t[i] = drive.time(i);
  tr.rho[0] = params.initial;
  std::size_t next = 1;

  // Entries of rho are bounded by 1, so a pure absolute scale is the tighter choice.
  auto err_norm = [](const DensityMatrix& e, const DensityMatrix&, const DensityMatrix&,
                     double tol) { return detail::max_abs(e) / tol; };

  const double guard = 10.0 * opt.tol;
  auto on_step = [&](const DenseStep<DensityMatrix>& d) {
    const double t_hi = d.t + d.h;
    while (next < n && tr.t[next] <= t_hi + 1e-12 * std::abs(t_hi)) {
      tr.rho[next] = d(std::min(tr.t[next], t_hi));
      ++next;
    }
    const DensityMatrix r = d.r1 + d.r2;  // state at the end of the step
    const double herm = detail::max_abs(r - r.adjoint());
    const double trace_err = std::abs(r.trace() - 1.0);
    const double min_eig = detail::min_eigenvalue(r);
    if (herm > guard || trace_err > guard || min_eig < -guard)
      throw NumericalError("evolve: density matrix left the physical set at t = " +
                           csv::format(d.t) + " ps (trace error " + csv::format(trace_err) +
                           ", min eigenvalue " + csv::format(min_eig) + ")");
    return true;
  };

  StepControl ctl;
  ctl.tol = opt.tol;
  ctl.h_max = opt.h_max;
  ctl.h_init = std::min(drive.dt(), 1e-2);
  integrate_dopri5(rhs, params.initial, drive.t0(), drive.t_end(), ctl, err_norm, on_step);
  for (; next < n; ++next) tr.rho[next] = tr.rho[next - 1];

  tr.p_e.resize(n);
  tr.p_plus.resize(n);
  tr.p_minus.resize(n);
  tr.adiabaticity = adiabaticity_series(drive);
  const auto& om = drive.omega_samples();
  const auto& de = drive.delta_samples();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = tr.rho[i];
    tr.p_e[i] = r(1, 1).real();
    const auto dp = dressed_frame(om[i], de[i]);
    const Eigen::Vector2cd vp = dp.plus.cast<std::complex<double>>();
    const Eigen::Vector2cd vm = dp.minus.cast<std::complex<double>>();
    tr.p_plus[i] = (vp.adjoint() * r * vp)(0, 0).real();
    tr.p_minus[i] = (vm.adjoint() * r * vm)(0, 0).real();
  }
  return tr;
}

/// Total emission probability per pulse: photons emitted on the grid
/// (trapezoid of Gamma P_e) plus the population left at the end.
inline double photon_yield(const StateTrajectory& tr, double radiative_rate) {
  double s = 0.0;
  for (std::size_t i = 1; i < tr.t.size(); ++i)
    s += 0.5 * (tr.p_e[i] + tr.p_e[i - 1]) * (tr.t[i] - tr.t[i - 1]);
  return radiative_rate * s + tr.p_e.back();
}

/// CSV: t_ps, p_e, p_g, re_coh, im_coh, p_plus, p_minus, adiabaticity.
/// The coherence column is rho_ge = <g|rho|e>.
inline void write_trajectory_csv(std::ostream& os, const StateTrajectory& tr) {
  os << "t_ps,p_e,p_g,re_coh,im_coh,p_plus,p_minus,adiabaticity\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const auto& r = tr.rho[i];
    os << csv::format(tr.t[i]) << ',' << csv::format(r(1, 1).real()) << ','
       << csv::format(r(0, 0).real()) << ',' << csv::format(r(0, 1).real()) << ','
       << csv::format(r(0, 1).imag()) << ',' << csv::format(tr.p_plus[i]) << ','
       << csv::format(tr.p_minus[i]) << ',' << csv::format(tr.adiabaticity[i]) << '\n';
  }
}

inline StateTrajectory read_trajectory_csv(std::istream& in, const std::string& source) {
  auto t = csv::read_table(in, source);
  detail::require(t.header == std::vector<std::string>{"t_ps", "p_e", "p_g", "re_coh", "im_coh",
                                                       "p_plus", "p_minus", "adiabaticity"},
                  source + ": unexpected trajectory CSV header");
  StateTrajectory tr;
  for (const auto& row : t.rows) {
    tr.t.push_back(row[0]);
    DensityMatrix r;
    const std::complex<double> coh(row[3], row[4]);
    r << row[2], coh, std::conj(coh), row[1];
    tr.rho.push_back(r);
    tr.p_e.push_back(row[1]);
    tr.p_plus.push_back(row[5]);
    tr.p_minus.push_back(row[6]);
    tr.adiabaticity.push_back(row[7]);
  }
  return tr;
}

// -- Dressed-frame curves --------------------------------------------------------

/// Drive, dressed energies and populations on the field grid.
struct DressedCurves {
  std::vector<double> t_ps, omega, delta, e_plus, e_minus, p_e, p_plus, p_minus;
};

inline DressedCurves dressed_curves(const SampledField& field, const SystemParams& params,
                                    const EvolveOptions& opt = {}) {
  const auto tr = evolve(field, params, opt);
  const Drive drive(field);
  DressedCurves c;
  c.t_ps = tr.t;
  c.omega = drive.omega_samples();
  c.delta = drive.delta_samples();
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const auto d = dressed_frame(c.omega[i], c.delta[i]);
    c.e_plus.push_back(d.e_plus);
    c.e_minus.push_back(d.e_minus);
  }
  c.p_e = tr.p_e;
  c.p_plus = tr.p_plus;
  c.p_minus = tr.p_minus;
  return c;
}

/// CSV: t_ps, omega_radps, delta_radps, e_plus, e_minus, p_e, p_plus, p_minus.
inline void write_dressed_csv(std::ostream& os, const DressedCurves& c) {
  os << "t_ps,omega_radps,delta_radps,e_plus,e_minus,p_e,p_plus,p_minus\n";
  for (std::size_t i = 0; i < c.t_ps.size(); ++i) {
    for (const auto* col : {&c.t_ps, &c.omega, &c.delta, &c.e_plus, &c.e_minus, &c.p_e, &c.p_plus})
      os << csv::format((*col)[i]) << ',';
    os << csv::format(c.p_minus[i]) << '\n';
  }
}

inline DressedCurves read_dressed_csv(std::istream& in, const std::string& source) {
  const auto t = csv::read_table(in, source);
  detail::require(t.header == std::vector<std::string>{"t_ps", "omega_radps", "delta_radps", "e_plus",
                                                       "e_minus", "p_e", "p_plus", "p_minus"},
                  source + ": unexpected dressed CSV header");
  DressedCurves c;
  for (const auto& r : t.rows) {
    c.t_ps.push_back(r[0]);
    c.omega.push_back(r[1]);
    c.delta.push_back(r[2]);
    c.e_plus.push_back(r[3]);
    c.e_minus.push_back(r[4]);
    c.p_e.push_back(r[5]);
    c.p_plus.push_back(r[6]);
    c.p_minus.push_back(r[7]);
  }
  return c;
}

}  // namespace rapsim
