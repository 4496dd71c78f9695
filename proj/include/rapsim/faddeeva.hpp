#pragma once

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
//
// Inside |z| < 6: Weideman's rational expansion in Z = (L + iz)/(L - iz)
// with 32 terms. Outside: the Laplace continued fraction, evaluated
// bottom-up with a fixed depth. Within 1e-5 of the real axis the real part
// is exp(-x^2) plus the first-order term in y, because the expansion is
// only accurate in absolute terms where Re w is exponentially small.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "errors.hpp"

namespace rapsim {

namespace detail {

inline constexpr int weideman_terms = 32;

struct WeidemanTable {
  double l = 0.0;
  std::array<double, weideman_terms> a{};  // a[n - 1] multiplies Z^(n - 1)
};

inline const WeidemanTable& weideman_table() {
  static const WeidemanTable table = [] {
    WeidemanTable t;
    constexpr int n = weideman_terms, m = 2 * n;
    t.l = std::sqrt(n / std::numbers::sqrt2);
    // Cosine transform of f(theta) = exp(-t^2)(L^2 + t^2), t = L tan(theta / 2),
    // sampled at theta = k pi / M, |k| < M.
    for (int j = 1; j <= n; ++j) {
      double s = 0.0;
      for (int k = -m + 1; k <= m - 1; ++k) {
        const double tk = t.l * std::tan(0.5 * k * std::numbers::pi / m);
        s += std::exp(-tk * tk) * (t.l * t.l + tk * tk) * std::cos(std::numbers::pi * k * j / m);
      }
      t.a[static_cast<std::size_t>(j - 1)] = s / (2.0 * m);
    }
    return t;
  }();
  return table;
}

inline std::complex<double> faddeeva_weideman(std::complex<double> z) {
  const auto& t = weideman_table();
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> d = t.l - i * z;
  const std::complex<double> zz = (t.l + i * z) / d;
  std::complex<double> p = 0.0;
  for (int n = weideman_terms - 1; n >= 0; --n) p = p * zz + t.a[static_cast<std::size_t>(n)];
  return 2.0 * p / (d * d) + 1.0 / (std::sqrt(std::numbers::pi) * d);
}

/// Continued-fraction levels T_k = z - (k + 1) / (2 T_{k+1}); w = (i / sqrt(pi)) / T_0.
inline std::array<std::complex<double>, 3> faddeeva_cf_levels(std::complex<double> z) {
  constexpr int depth = 60;
  std::array<std::complex<double>, 3> t{};
  std::complex<double> tail = z;
  for (int k = depth; k >= 1; --k) {
    tail = z - (0.5 * k) / tail;
    if (k <= 3) t[static_cast<std::size_t>(k - 1)] = tail;
  }
  // After the loop t[0] = T_0, t[1] = T_1, t[2] = T_2.
  return t;
}

inline std::complex<double> faddeeva_continued_fraction(std::complex<double> z) {
  return std::complex<double>(0.0, 1.0 / std::sqrt(std::numbers::pi)) / faddeeva_cf_levels(z)[0];
}

}  // namespace detail

/// w(z) for Im z >= 0.
inline std::complex<double> faddeeva(std::complex<double> z) {
  detail::require(z.imag() >= 0.0, "faddeeva: Im z must be >= 0");
  const double x = z.real(), y = z.imag();
  const bool inner = std::abs(z) < 6.0;
  const auto w = inner ? detail::faddeeva_weideman(z) : detail::faddeeva_continued_fraction(z);
  if (y >= 1e-5) return w;
  // Re w(x + iy) = exp(-x^2) + y (2x Im w(x) - 2/sqrt(pi)) + O(y^2)
  const double im_axis = inner ? detail::faddeeva_weideman({x, 0.0}).imag() : w.imag();
  const double re = std::exp(-x * x) + y * (2.0 * x * im_axis - 2.0 / std::sqrt(std::numbers::pi));
  return {re, w.imag()};
}

/// w'(z) = -2 z w(z) + 2i / sqrt(pi).
inline std::complex<double> faddeeva_derivative(std::complex<double> z, std::complex<double> w) {
  return -2.0 * z * w + std::complex<double>(0.0, 2.0 / std::sqrt(std::numbers::pi));
}

struct FaddeevaJet {
  std::complex<double> w;
  std::complex<double> dw;         // w'(z)
  std::complex<double> z_dw_plus_w;  // z w'(z) + w(z)
};

/// w with the derivative combinations needed by width derivatives. For
/// large |z| both combinations cancel to O(|z|^-2) and O(|z|^-3) relative to
/// their terms, so they are read off the continued-fraction levels instead.
inline FaddeevaJet faddeeva_jet(std::complex<double> z) {
  if (std::abs(z) < 6.0 || z.imag() < 1e-5) {
    const auto w = faddeeva(z);
    const auto dw = faddeeva_derivative(z, w);
    return {w, dw, z * dw + w};
  }
  const auto t = detail::faddeeva_cf_levels(z);
  const std::complex<double> c(0.0, 1.0 / std::sqrt(std::numbers::pi));
  return {c / t[0], -c / (t[0] * t[1]), -c / (t[0] * t[1] * t[2])};
}

}  // namespace rapsim
