#pragma once

// Pulse synthesis and spectral chirp.
//
// Envelope convention: the optical field is E(t) exp(-i w_L t), so a sample
// phase phi(t) shifts the instantaneous laser frequency by -dphi/dt and
// Delta(t) = Delta_0 - dphi/dt. The spectral phase applied by apply_gdd is
// exp(+i gdd w^2 / 2) in the optical frequency offset w; positive gdd then
// sweeps the laser from low to high frequency (up-chirp).

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "units.hpp"

namespace rapsim {

enum class PulseShape { sech, gaussian };

inline std::string to_string(PulseShape s) { return s == PulseShape::sech ? "sech" : "gaussian"; }

struct PulseSpec {
  PulseShape shape = PulseShape::sech;
  double fwhm_ps = 3.0;          // intensity FWHM of the transform-limited pulse
  double area_pi = 1.0;          // transform-limited pulse area in units of pi
  double gdd_ps2 = 0.0;          // group-delay dispersion applied after synthesis
  double detuning_radps = 0.0;   // carrier detuning Delta_0 = w_L - w_X

  void validate() const {
    detail::require(fwhm_ps > 0.0 && std::isfinite(fwhm_ps),
                    "pulse.fwhm_ps must be positive, got " + csv::format(fwhm_ps));
    detail::require(area_pi >= 0.0 && std::isfinite(area_pi),
                    "pulse.area_pi must be >= 0, got " + csv::format(area_pi));
    detail::require(std::isfinite(gdd_ps2), "pulse.gdd_ps2 must be finite");
    detail::require(std::isfinite(detuning_radps), "pulse.detuning_radps must be finite");
  }

  /// sech: tau in sech(t/tau). gaussian: T0 in exp(-t^2/(2 T0^2)).
  double width_parameter() const {
    return shape == PulseShape::sech ? fwhm_ps / units::sech_fwhm_factor
                                     : fwhm_ps / units::gauss_fwhm_factor;
  }

  /// Estimate of the intensity FWHM after the chirp: sqrt(fwhm^2 + (gdd dw)^2)
  /// with dw the intensity-spectrum FWHM. Exact for the Gaussian.
  double stretched_fwhm_estimate() const {
    const double w = width_parameter();
    // sech^2(pi tau w / 2) has FWHM 4 acosh(sqrt 2) / (pi tau); exp(-w^2 T0^2) has 2 sqrt(ln 2) / T0
    const double dw = shape == PulseShape::sech ? 2.0 * units::sech_fwhm_factor / (units::pi * w)
                                                : units::gauss_fwhm_factor / w;
    return std::hypot(fwhm_ps, gdd_ps2 * dw);
  }

  /// Gaussian-equivalent stretched FWHM: fwhm sqrt(1 + (gdd/T0^2)^2), T0 = fwhm / (2 sqrt(ln 2)).
  double gaussian_equivalent_stretch() const {
    const double t0 = fwhm_ps / units::gauss_fwhm_factor;
    const double r = gdd_ps2 / (t0 * t0);
    return fwhm_ps * std::sqrt(1.0 + r * r);
  }
};

/// Complex Rabi envelope on a uniform grid, |envelope| in rad/ps.
struct SampledField {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<std::complex<double>> envelope;
  double carrier_detuning = 0.0;

  std::size_t size() const { return envelope.size(); }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double t_end() const { return time(size() - 1); }

  double peak() const {
    double m = 0.0;
    for (auto z : envelope) m = std::max(m, std::abs(z));
    return m;
  }

  /// Trapezoidal integral of |Omega|^2.
  double energy() const {
    if (size() < 2) return 0.0;
    double s = 0.0;
    for (auto z : envelope) s += std::norm(z);
    s -= 0.5 * (std::norm(envelope.front()) + std::norm(envelope.back()));
    return s * dt;
  }

  std::vector<double> magnitude() const {
    std::vector<double> m(size());
    std::transform(envelope.begin(), envelope.end(), m.begin(),
                   [](auto z) { return std::abs(z); });
    return m;
  }

  SampledField scaled(double s) const {
    SampledField f = *this;
    for (auto& z : f.envelope) z *= s;
    return f;
  }
};

struct GridSpec {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t n = 0;
};

namespace detail {

// Next integer >= n of the form 2^a 3^b 5^c; keeps FFTs fast.
inline std::size_t smooth_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 2);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

inline double shape_value(PulseShape shape, double x) {
  return shape == PulseShape::sech ? 1.0 / std::cosh(x) : std::exp(-0.5 * x * x);
}

// Half-width beyond which the field is below 1e-6 of its peak.
inline double decay_half_width(const PulseSpec& s) {
  const double w = s.width_parameter();
  const double gdd = std::abs(s.gdd_ps2);
  if (s.shape == PulseShape::sech) {
    const double x = std::acosh(1e6);
    // chirped wings map spectral sech(pi tau w / 2) to t = gdd w
    return std::max(w * x, 2.0 * gdd * x / (units::pi * w));
  }
  const double x = std::sqrt(2.0 * std::log(1e6));
  return x * w * std::sqrt(1.0 + std::pow(gdd / (w * w), 2));
}

}  // namespace detail

/// Grid centered on the pulse: dt = stretched FWHM / 400, span at least
/// 12x the stretched FWHM and wide enough for the wings to fall below 1e-6.
inline GridSpec default_grid(const PulseSpec& spec) {
  spec.validate();
  const double stretched = spec.stretched_fwhm_estimate();
  const double dt = stretched / 400.0;
  const double half = std::max(6.0 * stretched, 1.1 * detail::decay_half_width(spec));
  const std::size_t n = detail::smooth_size(2 * static_cast<std::size_t>(std::ceil(half / dt)) + 1);
  return {-static_cast<double>(n / 2) * dt, dt, n};
}

/// Unchirped pulse with area spec.area_pi * pi. sech: (Theta/(pi tau)) sech(t/tau).
inline SampledField make_transform_limited(const PulseSpec& spec, const GridSpec& grid) {
  spec.validate();
  detail::require(spec.gdd_ps2 == 0.0, "make_transform_limited requires gdd = 0");
  detail::require(grid.n >= 3 && grid.dt > 0.0, "grid needs n >= 3 and dt > 0");
  const double theta = spec.area_pi * units::pi;
  const double w = spec.width_parameter();
  const double amp = spec.shape == PulseShape::sech ? theta / (units::pi * w)
                                                    : theta / (w * std::sqrt(2.0 * units::pi));
  SampledField f;
  f.t0 = grid.t0;
  f.dt = grid.dt;
  f.carrier_detuning = spec.detuning_radps;
  f.envelope.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i)
    f.envelope[i] = amp * detail::shape_value(spec.shape, f.time(i) / w);

  // Edge check on the unit-amplitude shape so zero-area pulses are judged too.
  const double edge = std::max(detail::shape_value(spec.shape, f.t0 / w),
                               detail::shape_value(spec.shape, f.t_end() / w));
  if (edge > 1e-6) {
    const double need = 2.0 * detail::decay_half_width(PulseSpec{spec.shape, spec.fwhm_ps, 1.0, 0.0, 0.0});
    throw ValidationError("grid too small to contain the pulse: span " +
                          csv::format(f.t_end() - f.t0) + " ps, need at least " +
                          csv::format(need) + " ps");
  }
  return f;
}

inline SampledField make_transform_limited(const PulseSpec& spec) {
  PulseSpec tl = spec;
  tl.gdd_ps2 = 0.0;
  return make_transform_limited(tl, default_grid(spec));
}

namespace detail {

inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

// RAII wrapper around an FFTW plan; planning is serialized.
class FftPlan {
 public:
  FftPlan(std::vector<std::complex<double>>& data, int sign) {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    plan_ = fftw_plan_dft_1d(static_cast<int>(data.size()), p, p, sign, FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW planning failed");
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  void execute() { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// Multiply the spectrum by exp(i gdd w^2 / 2). Energy is preserved to
/// rounding; rejects fields whose stretched pulse reaches the grid edge.
inline SampledField apply_gdd(const SampledField& field, double gdd_ps2) {
  detail::require(field.size() >= 3 && field.dt > 0.0, "apply_gdd: invalid field");
  detail::require(std::isfinite(gdd_ps2), "apply_gdd: gdd must be finite");
  if (gdd_ps2 == 0.0) return field;

  const std::size_t n = field.size();
  SampledField out = field;
  auto& data = out.envelope;
  {
    // Spectrum with exp(+i w t) kernel (FFTW_BACKWARD), back with exp(-i w t).
    detail::FftPlan to_freq(data, FFTW_BACKWARD);
    detail::FftPlan to_time(data, FFTW_FORWARD);
    to_freq.execute();
    const double dw = 2.0 * units::pi / (static_cast<double>(n) * field.dt);
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = k < (n + 1) / 2 ? static_cast<double>(k)
                                        : static_cast<double>(k) - static_cast<double>(n);
      const double w = kk * dw;
      data[k] *= std::polar(1.0 / static_cast<double>(n), 0.5 * gdd_ps2 * w * w);
    }
    to_time.execute();
  }

  const double peak = out.peak();
  if (peak > 0.0) {
    const std::size_t edge = std::max<std::size_t>(1, n / 200);
    double worst = 0.0;
    for (std::size_t i = 0; i < edge; ++i)
      worst = std::max({worst, std::abs(data[i]), std::abs(data[n - 1 - i])});
    if (worst > 1e-4 * peak) {
      // Stationary phase: the stretched pulse occupies roughly |gdd| times the spectral width.
      const double span = field.t_end() - field.t0;
      const double need = span * std::max(2.0, std::sqrt(worst / (1e-4 * peak)));
      throw NumericalError("apply_gdd: stretched pulse aliases at the grid edge (" +
                           csv::format(worst / peak) + " of peak); span " + csv::format(span) +
                           " ps, need roughly " + csv::format(need) + " ps");
    }
  }
  return out;
}

/// Transform-limited pulse on the default grid, then chirped by spec.gdd_ps2.
/// The drive strength is the pre-chirp area; chirping preserves energy, not area.
inline SampledField synthesize(const PulseSpec& spec) {
  return apply_gdd(make_transform_limited(spec), spec.gdd_ps2);
}

/// Trapezoidal integral of |Omega(t)|.
inline double pulse_area(const SampledField& field) {
  if (field.size() < 2) return 0.0;
  double s = 0.0;
  for (auto z : field.envelope) s += std::abs(z);
  s -= 0.5 * (std::abs(field.envelope.front()) + std::abs(field.envelope.back()));
  return s * field.dt;
}

/// Delta(t) = Delta_0 - dphi/dt by central differences of the unwrapped phase
/// where |Omega| >= floor * peak; a least-squares linear chirp extrapolates outside.
inline std::vector<double> instantaneous_detuning(const SampledField& field, double floor = 1e-3) {
  const std::size_t n = field.size();
  std::vector<double> delta(n, field.carrier_detuning);
  const double peak = field.peak();
  if (n < 3 || peak == 0.0) return delta;

  const double cut = floor * peak;
  std::size_t lo = 0, hi = n - 1;
  while (lo < n && std::abs(field.envelope[lo]) < cut) ++lo;
  while (hi > lo && std::abs(field.envelope[hi]) < cut) --hi;
  if (hi <= lo) return delta;

  // Unwrapped phase increments between neighbours inside the window.
  std::vector<double> phase(hi - lo + 1, 0.0);
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    const double step = std::arg(field.envelope[i] * std::conj(field.envelope[i - 1]));
    if (std::abs(step) > 0.5 * units::pi)
      throw NumericalError("instantaneous_detuning: phase jumps by " + csv::format(step) +
                           " rad between samples at t = " + csv::format(field.time(i)) +
                           " ps; the field is undersampled");
    phase[i - lo] = phase[i - 1 - lo] + step;
  }
  const std::size_t m = phase.size();
  for (std::size_t j = 0; j < m; ++j) {
    double dphi;
    if (m == 1) dphi = 0.0;
    else if (j == 0) dphi = (phase[1] - phase[0]) / field.dt;
    else if (j == m - 1) dphi = (phase[m - 1] - phase[m - 2]) / field.dt;
    else dphi = (phase[j + 1] - phase[j - 1]) / (2.0 * field.dt);
    delta[lo + j] = field.carrier_detuning - dphi;
  }

  // Linear chirp fit over the window for the extrapolation.
  double st = 0.0, sd = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    st += field.time(i);
    sd += delta[i];
  }
  const double tm = st / static_cast<double>(m), dm = sd / static_cast<double>(m);
  double stt = 0.0, std_ = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double u = field.time(i) - tm;
    stt += u * u;
    std_ += u * (delta[i] - dm);
  }
  const double slope = stt > 0.0 ? std_ / stt : 0.0;
  for (std::size_t i = 0; i < lo; ++i) delta[i] = dm + slope * (field.time(i) - tm);
  for (std::size_t i = hi + 1; i < n; ++i) delta[i] = dm + slope * (field.time(i) - tm);
  return delta;
}

/// Intensity FWHM of |envelope|^2 with linear interpolation at the crossings.
inline double intensity_fwhm(const SampledField& field) {
  const std::size_t n = field.size();
  std::vector<double> inten(n);
  for (std::size_t i = 0; i < n; ++i) inten[i] = std::norm(field.envelope[i]);
  const auto imax = static_cast<std::size_t>(std::max_element(inten.begin(), inten.end()) - inten.begin());
  const double half = 0.5 * inten[imax];
  if (half == 0.0) return 0.0;
  std::size_t a = imax, b = imax;
  while (a > 0 && inten[a] > half) --a;
  while (b + 1 < n && inten[b] > half) ++b;
  auto cross = [&](std::size_t i, std::size_t j) {
    const double f = (half - inten[i]) / (inten[j] - inten[i]);
    return field.time(i) + f * (field.time(j) - field.time(i));
  };
  return cross(b - 1, b) - cross(a, a + 1);
}

// -- Grating stretcher -------------------------------------------------------

struct StretcherGeometry {
  double groove_density_per_mm = 1200.0;
  double wavelength_nm = 920.0;
  double incidence_deg = 0.0;
  double separation_mm = 0.0;   // effective perpendicular grating separation
  bool telescope_inserted = false;

  double sin_diffraction() const {
    const double d_nm = 1e6 / groove_density_per_mm;
    return wavelength_nm / d_nm - std::sin(incidence_deg * units::pi / 180.0);
  }

  void validate() const {
    detail::require(groove_density_per_mm > 0.0, "stretcher.groove_density_per_mm must be positive");
    detail::require(wavelength_nm > 0.0, "stretcher.wavelength_nm must be positive");
    detail::require(separation_mm >= 0.0, "stretcher.separation_mm must be >= 0");
    if (std::abs(sin_diffraction()) > 1.0)
      throw ValidationError("stretcher: first diffraction order is evanescent (sin theta_d = " +
                            csv::format(sin_diffraction()) + ")");
  }
};

/// Parallel grating-pair GDD in ps^2 (Treacy):
/// -lambda^3 L / (2 pi c^2 d^2 cos^3 theta_d). Negative for the bare pair,
/// positive once the telescope images one grating behind the other.
inline double treacy_gdd(const StretcherGeometry& g) {
  g.validate();
  const double lambda = g.wavelength_nm * 1e-9;
  const double d = 1e-3 / g.groove_density_per_mm;
  const double len = g.separation_mm * 1e-3;
  const double s = g.sin_diffraction();
  const double cos3 = std::pow(1.0 - s * s, 1.5);
  const double gdd_s2 = -lambda * lambda * lambda * len /
                        (2.0 * units::pi * units::c_si * units::c_si * d * d * cos3);
  const double gdd = gdd_s2 * 1e24;
  return g.telescope_inserted ? -gdd : gdd;
}

/// Grating separation (mm) giving `target_gdd_ps2`; the Treacy GDD is linear
/// in the separation, so this is one division. The sign must match the
/// telescope setting.
inline double separation_for_gdd(StretcherGeometry g, double target_gdd_ps2) {
  g.separation_mm = 1.0;
  const double per_mm = treacy_gdd(g);
  detail::require(std::isfinite(target_gdd_ps2) && target_gdd_ps2 * per_mm >= 0.0,
                  std::string("stretcher.target_gdd_ps2 must have the sign of the ") +
                      (g.telescope_inserted ? "telescope (positive) configuration" : "bare pair (negative)"));
  return target_gdd_ps2 / per_mm;
}

/// CSV: t_ps, re_omega, im_omega, delta_radps.
inline void write_field_csv(std::ostream& os, const SampledField& field) {
  const auto delta = instantaneous_detuning(field);
  os << "t_ps,re_omega,im_omega,delta_radps\n";
  for (std::size_t i = 0; i < field.size(); ++i)
    os << csv::format(field.time(i)) << ',' << csv::format(field.envelope[i].real()) << ','
       << csv::format(field.envelope[i].imag()) << ',' << csv::format(delta[i]) << '\n';
}

/// Reads the CSV written by write_field_csv. The carrier detuning is
/// recovered from the first delta sample where the phase is flat.
inline SampledField read_field_csv(std::istream& in, const std::string& source) {
  auto t = csv::read_table(in, source);
  detail::require(t.header == std::vector<std::string>{"t_ps", "re_omega", "im_omega", "delta_radps"},
                  source + ": unexpected field CSV header");
  detail::require(t.rows.size() >= 3, source + ": field needs at least 3 samples");
  SampledField f;
  f.t0 = t.rows.front()[0];
  f.dt = (t.rows.back()[0] - f.t0) / static_cast<double>(t.rows.size() - 1);
  for (const auto& r : t.rows) f.envelope.emplace_back(r[1], r[2]);
  f.carrier_detuning = t.rows[t.rows.size() / 2][3];
  if (f.peak() > 0.0) {
    // Delta_0 = Delta(t) + dphi/dt at the sample of maximum amplitude.
    const auto delta = instantaneous_detuning(f);
    std::size_t imax = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (std::abs(f.envelope[i]) > std::abs(f.envelope[imax])) imax = i;
    f.carrier_detuning += t.rows[imax][3] - delta[imax];
  }
  return f;
}

}  // namespace rapsim
