#pragma once

// Voigt line shapes for resonance-fluorescence spectra.
//
// Frequencies and widths are FWHM in GHz of ordinary frequency. `amplitude`
// is the integrated line area, so the profile is
//   amplitude * Re w(z) / (sigma sqrt(2 pi)) + baseline,
//   z = (nu - center + i GammaL / 2) / (sigma sqrt 2),  sigma = GammaG / (2 sqrt(2 ln 2)).

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "faddeeva.hpp"
#include "levenberg_marquardt.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace rapsim {

struct Spectrum {
  std::vector<double> freq_ghz;
  std::vector<double> intensity;
  std::vector<double> sigma;  // empty, or one positive entry per sample

  std::size_t size() const { return freq_ghz.size(); }
  bool has_sigma() const { return !sigma.empty(); }

  void validate() const {
    detail::require(!freq_ghz.empty(), "spectrum is empty");
    detail::require(intensity.size() == freq_ghz.size(), "spectrum: intensity length mismatch");
    detail::require(sigma.empty() || sigma.size() == freq_ghz.size(), "spectrum: sigma length mismatch");
    for (std::size_t i = 0; i < size(); ++i) {
      detail::require(std::isfinite(freq_ghz[i]) && std::isfinite(intensity[i]), "spectrum: non-finite sample");
      detail::require(i == 0 || freq_ghz[i] > freq_ghz[i - 1], "spectrum: frequencies must be strictly increasing");
      detail::require(intensity[i] >= 0.0, "spectrum: intensities must be >= 0");
      if (has_sigma()) detail::require(sigma[i] > 0.0, "spectrum: sigma must be > 0");
    }
  }
};

struct VoigtParams {
  double center = 0.0;
  double lorentzian_fwhm = 0.0;
  double gaussian_fwhm = 0.0;
  double amplitude = 1.0;
  double baseline = 0.0;

  void validate() const {
    detail::require(lorentzian_fwhm >= 0.0 && gaussian_fwhm >= 0.0, "voigt: widths must be >= 0");
    detail::require(lorentzian_fwhm > 0.0 || gaussian_fwhm > 0.0, "voigt: both widths are zero");
    detail::require(std::isfinite(center) && std::isfinite(amplitude) && std::isfinite(baseline),
                    "voigt: non-finite parameter");
  }
};

struct VoigtFit {
  VoigtParams params;
  VoigtParams sigma;  // one-sigma uncertainty of each field
  double chi2 = 0.0;  // weighted sum of squared residuals
  double reduced_chi2 = 0.0;
  /// Profile-likelihood test of GammaG = 0: chi2 increase when GammaG is
  /// pinned at the width floor and the rest refitted, in units of the
  /// per-point variance. Below 4 means consistent with zero at two sigma.
  double gaussian_zero_delta_chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t n_points = 0;
};

inline constexpr double gauss_fwhm_to_sigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))

/// Fitted widths are bounded below by this fraction of the starting total FWHM.
inline constexpr double width_floor_fraction = 1e-6;

/// Unit-area Voigt profile; exact closed forms in the degenerate limits.
inline double voigt_shape(double dnu, double fl, double fg) {
  if (fg == 0.0) {
    const double g = 0.5 * fl;
    return g / (std::numbers::pi * (dnu * dnu + g * g));
  }
  const double s = fg * gauss_fwhm_to_sigma * std::numbers::sqrt2;
  if (fl == 0.0) return std::exp(-(dnu / s) * (dnu / s)) / (s * std::sqrt(std::numbers::pi));
  const auto w = faddeeva({dnu / s, 0.5 * fl / s});
  return w.real() / (s * std::sqrt(std::numbers::pi));
}

inline double voigt_profile(double nu, const VoigtParams& p) {
  p.validate();
  return p.amplitude * voigt_shape(nu - p.center, p.lorentzian_fwhm, p.gaussian_fwhm) + p.baseline;
}

/// Olivero-Longbothum estimate of the Voigt FWHM.
inline double voigt_fwhm_estimate(double fl, double fg) {
  return 0.5346 * fl + std::sqrt(0.2166 * fl * fl + fg * fg);
}

/// Voigt FWHM by bisection on the profile.
inline double voigt_fwhm(double fl, double fg) {
  VoigtParams{0.0, fl, fg}.validate();
  const double half = 0.5 * voigt_shape(0.0, fl, fg);
  double lo = 0.0, hi = fl + fg;
  while (hi - lo > 1e-15 * (fl + fg)) {
    const double mid = 0.5 * (lo + hi);
    (voigt_shape(mid, fl, fg) > half ? lo : hi) = mid;
  }
  return lo + hi;
}

/// Two-sided p-value of the Wald-Wolfowitz runs test on residual signs.
/// Exact zeros are skipped; returns 1 when one sign is absent.
inline double residual_runs_pvalue(const std::vector<double>& residuals) {
  std::vector<bool> sign;
  for (double r : residuals)
    if (r != 0.0) sign.push_back(r > 0.0);
  const double n1 = static_cast<double>(std::count(sign.begin(), sign.end(), true));
  const double n2 = static_cast<double>(sign.size()) - n1;
  if (n1 == 0.0 || n2 == 0.0) return 1.0;
  double runs = 1.0;
  for (std::size_t i = 1; i < sign.size(); ++i) runs += sign[i] != sign[i - 1];
  const double n = n1 + n2;
  const double mean = 2.0 * n1 * n2 / n + 1.0;
  const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
  if (var <= 0.0) return 1.0;
  return std::erfc(std::abs(runs - mean) / std::sqrt(2.0 * var));
}

namespace detail {

/// Half-maximum crossings around the highest sample, linearly interpolated.
inline std::optional<double> half_max_width(const Spectrum& s, double baseline) {
  const auto peak = static_cast<std::size_t>(
      std::max_element(s.intensity.begin(), s.intensity.end()) - s.intensity.begin());
  const double half = baseline + 0.5 * (s.intensity[peak] - baseline);
  auto cross = [&](std::size_t a, std::size_t b) {
    const double f = (half - s.intensity[a]) / (s.intensity[b] - s.intensity[a]);
    return s.freq_ghz[a] + f * (s.freq_ghz[b] - s.freq_ghz[a]);
  };
  std::optional<double> left, right;
  for (std::size_t i = peak; i > 0; --i)
    if (s.intensity[i - 1] <= half) {
      left = cross(i - 1, i);
      break;
    }
  for (std::size_t i = peak; i + 1 < s.size(); ++i)
    if (s.intensity[i + 1] <= half) {
      right = cross(i + 1, i);
      break;
    }
  if (!left || !right) return std::nullopt;
  return *right - *left;
}

}  // namespace detail

/// Automatic starting point: intensity-weighted center, total FWHM from the
/// half-maximum crossings split evenly between the components.
inline VoigtParams initial_voigt_guess(const Spectrum& s) {
  s.validate();
  const double base = *std::min_element(s.intensity.begin(), s.intensity.end());
  double wsum = 0.0, wnu = 0.0, area = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    wsum += s.intensity[i] - base;
    wnu += (s.intensity[i] - base) * s.freq_ghz[i];
    if (i > 0)
      area += 0.5 * (s.intensity[i] + s.intensity[i - 1] - 2.0 * base) * (s.freq_ghz[i] - s.freq_ghz[i - 1]);
  }
  detail::require(wsum > 0.0, "fit_voigt: spectrum has no peak above its minimum");
  const auto fwhm = detail::half_max_width(s, base);
  detail::require(fwhm.has_value() && *fwhm > 0.0, "fit_voigt: peak does not fall to half maximum on both sides");
  return {wnu / wsum, 0.5 * *fwhm, 0.5 * *fwhm, area, base};
}

namespace detail {

inline VoigtFit fit_voigt_from(const Spectrum& s, const VoigtParams& g0, const LmOptions& opt,
                               bool pin_gaussian_at_floor) {
  detail::require(g0.lorentzian_fwhm > 0.0 && g0.gaussian_fwhm > 0.0, "fit_voigt: initial widths must be > 0");
  const double span = s.freq_ghz.back() - s.freq_ghz.front();
  detail::require(span >= 3.0 * voigt_fwhm_estimate(g0.lorentzian_fwhm, g0.gaussian_fwhm),
                  "fit_voigt: spectrum must span at least 3 FWHM");

  // Offsets from the starting center keep the center parameter O(width).
  const double c0 = g0.center;
  const auto n = static_cast<Eigen::Index>(s.size());
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double fl = std::exp(p(1)), fg = std::exp(p(2)), amp = p(3), base = p(4);
    const double sq = fg * gauss_fwhm_to_sigma * std::numbers::sqrt2;
    const double k = 1.0 / (sq * std::sqrt(std::numbers::pi));
    r.resize(n);
    if (jac) jac->resize(n, 5);
    if (!(std::isfinite(k) && std::isfinite(fl) && fl > 0.0 && sq > 0.0)) {
      // Overflowed trial step: rejected by the solver.
      r.setConstant(std::numeric_limits<double>::infinity());
      return;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double inv_sigma = s.has_sigma() ? 1.0 / s.sigma[ui] : 1.0;
      const std::complex<double> z((s.freq_ghz[ui] - c0 - p(0)) / sq, 0.5 * fl / sq);
      const auto jet = faddeeva_jet(z);
      const double re_w = jet.w.real();
      r(i) = (amp * k * re_w + base - s.intensity[ui]) * inv_sigma;
      if (!jac) continue;
      const double d_center = -amp * k * jet.dw.real() / sq;
      const double d_fl = -amp * k * jet.dw.imag() / (2.0 * sq);
      const double d_fg = -amp * k * jet.z_dw_plus_w.real() / fg;
      (*jac)(i, 0) = d_center * inv_sigma;
      (*jac)(i, 1) = d_fl * fl * inv_sigma;
      (*jac)(i, 2) = d_fg * fg * inv_sigma;
      (*jac)(i, 3) = k * re_w * inv_sigma;
      (*jac)(i, 4) = inv_sigma;
    }
  };

  Eigen::VectorXd p0(5);
  p0 << 0.0, std::log(g0.lorentzian_fwhm), std::log(g0.gaussian_fwhm), g0.amplitude, g0.baseline;
  // A width that the data cannot resolve settles on this floor instead of
  // drifting towards underflow; its sigma then dwarfs its value.
  LmOptions bounded = opt;
  const double floor_log = std::log(width_floor_fraction * voigt_fwhm_estimate(g0.lorentzian_fwhm, g0.gaussian_fwhm));
  bounded.lower = Eigen::VectorXd::Constant(5, -std::numeric_limits<double>::infinity());
  bounded.lower(1) = bounded.lower(2) = floor_log;
  if (pin_gaussian_at_floor) {
    bounded.upper = Eigen::VectorXd::Constant(5, std::numeric_limits<double>::infinity());
    bounded.upper(2) = floor_log;
  }
  const auto lm = levenberg_marquardt(model, p0, bounded);

  VoigtFit fit;
  const auto& p = lm.params;
  fit.params = {c0 + p(0), std::exp(p(1)), std::exp(p(2)), p(3), p(4)};
  fit.n_points = s.size();
  fit.iterations = lm.iterations;
  fit.converged = lm.converged;
  const double dof = static_cast<double>(s.size()) - 5.0;
  fit.chi2 = lm.chi2;
  fit.reduced_chi2 = lm.chi2 / dof;
  // Column-scaled inverse of J^T J: only correlations set the conditioning.
  const Eigen::VectorXd scale = lm.jacobian.colwise().norm().transpose().cwiseMax(1e-300);
  const Eigen::MatrixXd js = lm.jacobian * scale.cwiseInverse().asDiagonal();
  Eigen::MatrixXd cov = scale.cwiseInverse().asDiagonal() *
                        (js.transpose() * js).ldlt().solve(Eigen::MatrixXd::Identity(5, 5)) *
                        scale.cwiseInverse().asDiagonal();
  if (!s.has_sigma()) cov *= fit.reduced_chi2;
  auto sd = [&](int i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  fit.sigma = {sd(0), fit.params.lorentzian_fwhm * sd(1), fit.params.gaussian_fwhm * sd(2), sd(3), sd(4)};
  return fit;
}

}  // namespace detail

/// Weighted least-squares Voigt fit in (center, ln GammaL, ln GammaG,
/// amplitude, baseline). Without per-point sigma the covariance is scaled by
/// the reduced chi-square.
inline VoigtFit fit_voigt(const Spectrum& s, std::optional<VoigtParams> guess = std::nullopt,
                          const LmOptions& opt = {}) {
  s.validate();
  detail::require(s.size() >= 20, "fit_voigt: need at least 20 samples");
  const VoigtParams g0 = guess ? *guess : initial_voigt_guess(s);
  g0.validate();
  auto fit = detail::fit_voigt_from(s, g0, opt, false);
  const auto pinned = detail::fit_voigt_from(s, g0, opt, true);
  const double variance = s.has_sigma() ? 1.0 : fit.reduced_chi2;
  fit.gaussian_zero_delta_chi2 = variance > 0.0 ? std::max(0.0, pinned.chi2 - fit.chi2) / variance : 0.0;
  return fit;
}

/// Independent fits, one per spectrum, assembled in input order.
inline std::vector<VoigtFit> fit_voigt_all(const std::vector<Spectrum>& spectra, int threads = 0) {
  std::vector<VoigtFit> out(spectra.size());
  parallel_for(spectra.size(), threads, [&](std::size_t i) { out[i] = fit_voigt(spectra[i]); });
  return out;
}

/// Forward model on an even grid of `n_points` over center +- half_span
/// (default: 5 Voigt FWHM), times (1 + noise * N(0, 1)) per point. With
/// noise > 0 the per-point sigma is noise * model.
inline Spectrum synth_spectrum(const VoigtParams& p, std::size_t n_points, double noise, std::uint64_t seed,
                               double half_span_ghz = 0.0) {
  p.validate();
  detail::require(n_points >= 2, "synth_spectrum: need at least 2 points");
  detail::require(noise >= 0.0 && std::isfinite(noise), "synth_spectrum: noise must be >= 0");
  detail::require(half_span_ghz >= 0.0, "synth_spectrum: half span must be >= 0");
  if (half_span_ghz == 0.0) half_span_ghz = 5.0 * voigt_fwhm_estimate(p.lorentzian_fwhm, p.gaussian_fwhm);
  auto g = make_stream(seed, 0);
  Spectrum s;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double nu = p.center - half_span_ghz + 2.0 * half_span_ghz * static_cast<double>(i) /
                                                     static_cast<double>(n_points - 1);
    const double clean = voigt_profile(nu, p);
    s.freq_ghz.push_back(nu);
    if (noise > 0.0) {
      s.intensity.push_back(std::max(0.0, clean * (1.0 + noise * standard_normal(g))));
      s.sigma.push_back(noise * clean);
    } else {
      s.intensity.push_back(clean);
    }
  }
  return s;
}

// -- I/O -----------------------------------------------------------------------

inline void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << (s.has_sigma() ? "freq_ghz,intensity,sigma\n" : "freq_ghz,intensity\n");
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << csv::format(s.freq_ghz[i]) << ',' << csv::format(s.intensity[i]);
    if (s.has_sigma()) os << ',' << csv::format(s.sigma[i]);
    os << '\n';
  }
}

inline Spectrum read_spectrum_csv(std::istream& in, const std::string& source = "spectrum") {
  const auto t = csv::read_table(in, source);
  const bool with_sigma = t.header == std::vector<std::string>{"freq_ghz", "intensity", "sigma"};
  detail::require(with_sigma || t.header == std::vector<std::string>{"freq_ghz", "intensity"},
                  source + ": expected columns freq_ghz,intensity[,sigma]");
  Spectrum s;
  for (const auto& r : t.rows) {
    s.freq_ghz.push_back(r[0]);
    s.intensity.push_back(r[1]);
    if (with_sigma) s.sigma.push_back(r[2]);
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return s;
}

inline nlohmann::ordered_json to_json(const VoigtFit& f) {
  return {{"center_ghz", f.params.center},
          {"center_sigma", f.sigma.center},
          {"lorentzian_fwhm_ghz", f.params.lorentzian_fwhm},
          {"lorentzian_fwhm_sigma", f.sigma.lorentzian_fwhm},
          {"gaussian_fwhm_ghz", f.params.gaussian_fwhm},
          {"gaussian_fwhm_sigma", f.sigma.gaussian_fwhm},
          {"amplitude", f.params.amplitude},
          {"amplitude_sigma", f.sigma.amplitude},
          {"baseline", f.params.baseline},
          {"baseline_sigma", f.sigma.baseline},
          {"voigt_fwhm_ghz", voigt_fwhm(f.params.lorentzian_fwhm, f.params.gaussian_fwhm)},
          {"reduced_chi2", f.reduced_chi2},
          {"gaussian_zero_delta_chi2", f.gaussian_zero_delta_chi2},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"n_points", f.n_points}};
}

}  // namespace rapsim
