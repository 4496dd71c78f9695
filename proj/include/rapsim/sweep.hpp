#pragma once

// Figure-level experiments: power scans, the chirp x area map and power
// robustness traces. Every grid point is an independent pulse evaluation,
// run in parallel and assembled by index.
//
// The reported population is the per-pulse emission yield
// P_e(end) + Gamma * integral of P_e dt, which equals P_e(end) when Gamma = 0.

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "pulseshaper.hpp"

namespace rapsim {

struct ScanSpec {
  PulseSpec pulse;               // template; area and gdd come from the grids
  std::vector<double> areas_pi;  // pulse areas in units of pi
  std::vector<double> gdds_ps2;
  SystemParams system;
  std::optional<double> counts_per_population;  // kappa for overlays on count data

  void validate() const {
    pulse.validate();
    system.validate();
    detail::require(!areas_pi.empty(), "scan.areas_pi must not be empty");
    detail::require(!gdds_ps2.empty(), "scan.gdds_ps2 must not be empty");
    for (double a : areas_pi)
      detail::require(a >= 0.0 && std::isfinite(a), "scan.areas_pi entries must be >= 0");
    for (double g : gdds_ps2) detail::require(std::isfinite(g), "scan.gdds_ps2 entries must be finite");
    if (counts_per_population)
      detail::require(*counts_per_population > 0.0, "scan.counts_per_population must be > 0");
  }
};

struct SweepOptions {
  int threads = 0;  // 0: hardware concurrency
  EvolveOptions evolve;
};

/// Emission yield of one pulse.
inline double pulse_yield(const PulseSpec& pulse, const SystemParams& sys, const EvolveOptions& opt = {}) {
  const auto tr = evolve(synthesize(pulse), sys, opt);
  return photon_yield(tr, sys.radiative_rate);
}

/// Area grid [0, max] with `n` equal steps (n + 1 points).
inline std::vector<double> area_grid(double max_area_pi, std::size_t n) {
  detail::require(max_area_pi > 0.0 && n >= 1, "area grid needs a positive range and at least one step");
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = max_area_pi * static_cast<double>(i) / static_cast<double>(n);
  return g;
}

// -- Power scan ----------------------------------------------------------------

struct PowerCurve {
  double gdd_ps2 = 0.0;
  std::vector<double> area_pi;
  std::vector<double> p_e;
  std::optional<double> counts_per_population;

  /// Index of the first local maximum (first sample not exceeded by its successor).
  std::size_t first_maximum() const {
    for (std::size_t i = 0; i + 1 < p_e.size(); ++i)
      if (p_e[i + 1] < p_e[i] && p_e[i] > 0.0) return i;
    return p_e.size() - 1;
  }
  std::size_t global_maximum() const {
    return static_cast<std::size_t>(std::max_element(p_e.begin(), p_e.end()) - p_e.begin());
  }
};

/// One evolve per area at the single gdd of the scan.
inline PowerCurve power_scan(const ScanSpec& spec, const SweepOptions& opt = {}) {
  spec.validate();
  detail::require(spec.gdds_ps2.size() == 1, "power_scan: scan.gdds_ps2 must hold exactly one value");
  PowerCurve c;
  c.gdd_ps2 = spec.gdds_ps2.front();
  c.area_pi = spec.areas_pi;
  c.counts_per_population = spec.counts_per_population;
  c.p_e.assign(c.area_pi.size(), 0.0);
  parallel_for(c.area_pi.size(), opt.threads, [&](std::size_t i) {
    PulseSpec p = spec.pulse;
    p.area_pi = c.area_pi[i];
    p.gdd_ps2 = c.gdd_ps2;
    c.p_e[i] = pulse_yield(p, spec.system, opt.evolve);
  });
  return c;
}

/// `area_pi,p_e`, plus `counts` when a calibration constant is set.
inline void write_curve_csv(std::ostream& os, const PowerCurve& c) {
  os << "area_pi,p_e" << (c.counts_per_population ? ",counts\n" : "\n");
  for (std::size_t i = 0; i < c.area_pi.size(); ++i) {
    os << csv::format(c.area_pi[i]) << ',' << csv::format(c.p_e[i]);
    if (c.counts_per_population) os << ',' << csv::format(*c.counts_per_population * c.p_e[i]);
    os << '\n';
  }
}

inline PowerCurve read_curve_csv(std::istream& in, const std::string& source = "curve") {
  const auto t = csv::read_table(in, source);
  const bool counts = t.header == std::vector<std::string>{"area_pi", "p_e", "counts"};
  detail::require(counts || t.header == std::vector<std::string>{"area_pi", "p_e"},
                  source + ": expected columns area_pi,p_e[,counts]");
  PowerCurve c;
  for (const auto& r : t.rows) {
    c.area_pi.push_back(r[0]);
    c.p_e.push_back(r[1]);
  }
  if (counts && !t.rows.empty() && c.p_e.front() != 0.0) c.counts_per_population = t.rows.front()[2] / c.p_e.front();
  return c;
}

// -- Chirp x area map ------------------------------------------------------------

struct ChirpAreaMap {
  std::vector<double> gdd_ps2;  // rows
  std::vector<double> area_pi;  // columns
  std::vector<double> p_e;      // row-major

  double at(std::size_t row, std::size_t col) const { return p_e[row * area_pi.size() + col]; }
};

inline ChirpAreaMap chirp_area_map(const ScanSpec& spec, const SweepOptions& opt = {}) {
  spec.validate();
  detail::require(spec.areas_pi.size() >= 2 && spec.gdds_ps2.size() >= 2,
                  "chirp_area_map: scan.areas_pi and scan.gdds_ps2 need at least two points each");
  ChirpAreaMap m{spec.gdds_ps2, spec.areas_pi, {}};
  const std::size_t nc = m.area_pi.size();
  m.p_e.assign(m.gdd_ps2.size() * nc, 0.0);
  parallel_for(m.p_e.size(), opt.threads, [&](std::size_t k) {
    PulseSpec p = spec.pulse;
    p.gdd_ps2 = m.gdd_ps2[k / nc];
    p.area_pi = m.area_pi[k % nc];
    m.p_e[k] = pulse_yield(p, spec.system, opt.evolve);
  });
  return m;
}

/// Header `gdd_ps2,<areas...>`, then one row per gdd.
inline void write_map_csv(std::ostream& os, const ChirpAreaMap& m) {
  os << "gdd_ps2";
  for (double a : m.area_pi) os << ',' << csv::format(a);
  os << '\n';
  for (std::size_t r = 0; r < m.gdd_ps2.size(); ++r) {
    os << csv::format(m.gdd_ps2[r]);
    for (std::size_t c = 0; c < m.area_pi.size(); ++c) os << ',' << csv::format(m.at(r, c));
    os << '\n';
  }
}

inline ChirpAreaMap read_map_csv(std::istream& in, const std::string& source = "map") {
  const auto t = csv::read_table(in, source);
  detail::require(t.header.size() >= 2 && t.header.front() == "gdd_ps2",
                  source + ": expected header gdd_ps2,<areas>");
  ChirpAreaMap m;
  for (std::size_t i = 1; i < t.header.size(); ++i)
    m.area_pi.push_back(csv::parse_double(t.header[i], source + ": header"));
  for (const auto& r : t.rows) {
    m.gdd_ps2.push_back(r[0]);
    m.p_e.insert(m.p_e.end(), r.begin() + 1, r.end());
  }
  return m;
}

// -- Robustness trace ------------------------------------------------------------

struct ModulationSpec {
  double frequency_hz = 0.05;
  double peak_to_peak_fraction = 0.8;  // of the mean laser power
  double center_area_pi = 1.0;
  double duration_s = 40.0;
  double sampling_hz = 2.0;

  void validate() const {
    detail::require(frequency_hz > 0.0 && std::isfinite(frequency_hz), "modulation.frequency_hz must be > 0");
    detail::require(peak_to_peak_fraction >= 0.0 && peak_to_peak_fraction < 2.0,
                    "modulation.peak_to_peak_fraction must lie in [0, 2)");
    detail::require(center_area_pi > 0.0, "modulation.center_area_pi must be > 0");
    detail::require(duration_s >= 0.0, "modulation.duration_s must be >= 0");
    detail::require(sampling_hz > 0.0, "modulation.sampling_hz must be > 0");
  }

  /// Unit triangle wave: 0 at t = 0, +1 at a quarter period, -1 at three quarters.
  double triangle(double t_s) const {
    const double x = frequency_hz * t_s + 0.25;
    return 1.0 - 4.0 * std::abs(x - std::floor(x) - 0.5);
  }

  /// Power follows the triangle; the area goes as the square root of power.
  double area_pi(double t_s) const {
    return center_area_pi * std::sqrt(1.0 + 0.5 * peak_to_peak_fraction * triangle(t_s));
  }

  std::size_t samples() const { return static_cast<std::size_t>(std::floor(duration_s * sampling_hz + 1e-9)) + 1; }
};

struct RobustnessTrace {
  std::vector<double> t_s;
  std::vector<double> area_pi;
  std::vector<double> p_e;

  /// (max - min) / (max + min); 0 for a flat or empty trace.
  double fluctuation() const {
    if (p_e.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(p_e.begin(), p_e.end());
    return *hi + *lo > 0.0 ? (*hi - *lo) / (*hi + *lo) : 0.0;
  }
};

/// Quasi-static: each sample is an independent pulse at the instantaneous area.
inline RobustnessTrace robustness_trace(const ModulationSpec& mod, const PulseSpec& pulse, const SystemParams& sys,
                                        const SweepOptions& opt = {}) {
  mod.validate();
  pulse.validate();
  sys.validate();
  RobustnessTrace tr;
  const std::size_t n = mod.samples();
  for (std::size_t i = 0; i < n; ++i) {
    tr.t_s.push_back(static_cast<double>(i) / mod.sampling_hz);
    tr.area_pi.push_back(mod.area_pi(tr.t_s.back()));
  }
  tr.p_e.assign(n, 0.0);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    PulseSpec p = pulse;
    p.area_pi = tr.area_pi[i];
    tr.p_e[i] = pulse_yield(p, sys, opt.evolve);
  });
  return tr;
}

inline void write_trace_csv(std::ostream& os, const RobustnessTrace& tr) {
  os << "t_s,area_pi,p_e\n";
  for (std::size_t i = 0; i < tr.t_s.size(); ++i)
    os << csv::format(tr.t_s[i]) << ',' << csv::format(tr.area_pi[i]) << ',' << csv::format(tr.p_e[i]) << '\n';
}

inline RobustnessTrace read_trace_csv(std::istream& in, const std::string& source = "trace") {
  const auto t = csv::read_table(in, source);
  detail::require(t.header == std::vector<std::string>{"t_s", "area_pi", "p_e"},
                  source + ": expected columns t_s,area_pi,p_e");
  RobustnessTrace tr;
  for (const auto& r : t.rows) {
    tr.t_s.push_back(r[0]);
    tr.area_pi.push_back(r[1]);
    tr.p_e.push_back(r[2]);
  }
  return tr;
}

}  // namespace rapsim
