#pragma once

// Internal units: time in ps, angular frequency in rad/ps, hbar = 1.

#include <numbers>

namespace rapsim::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar_si = 1.054571817e-34;     // J s
inline constexpr double kb_si = 1.380649e-23;          // J/K
inline constexpr double c_si = 299792458.0;            // m/s

/// k_B T / hbar in rad/ps.
constexpr double thermal_frequency(double temperature_k) {
  return kb_si * temperature_k / hbar_si * 1e-12;
}

/// Ordinary frequency in GHz -> angular frequency in rad/ps.
constexpr double ghz_to_radps(double ghz) { return 2.0 * pi * ghz * 1e-3; }
constexpr double radps_to_ghz(double radps) { return radps * 1e3 / (2.0 * pi); }

/// Intensity FWHM of sech^2(t/tau) is 2 acosh(sqrt 2) tau.
inline constexpr double sech_fwhm_factor = 1.7627471740390860;
/// Intensity FWHM of exp(-t^2/T0^2) is 2 sqrt(ln 2) T0.
inline constexpr double gauss_fwhm_factor = 1.6651092223153954;

}  // namespace rapsim::units
