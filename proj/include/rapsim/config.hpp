#pragma once

// Run configuration. The JSON schema is strict: unknown keys, wrong types and
// missing required keys are ValidationErrors naming the full key path.
// Sections are optional at parse time; each subcommand checks for the ones it
// uses. `resolved_json` echoes the parsed values and re-parses to the same
// config.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "photonstats.hpp"
#include "pulseshaper.hpp"
#include "spectra.hpp"
#include "sweep.hpp"
#include "units.hpp"

namespace rapsim {

using ojson = nlohmann::ordered_json;

/// Seed used when neither the config nor the command line sets one.
inline constexpr std::uint64_t default_seed = 20240611;

namespace config_detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Tracks which keys of one JSON object were read; finish() rejects the rest.
class Reader {
 public:
  Reader(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {
    detail::require(j_.is_object(), (path_.empty() ? std::string("config") : path_) + " must be a JSON object");
  }

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const { return join_path(path_, key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const auto& v = at(key);
    detail::require(v.is_number(), key_path(key) + " must be a number");
    const double x = v.get<double>();
    detail::require(std::isfinite(x), key_path(key) + " must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto& v = at(key);
    detail::require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                    key_path(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    detail::require(v.is_boolean(), key_path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    detail::require(v.is_string(), key_path(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = at(key);
    detail::require(v.is_array(), key_path(key) + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      detail::require(v[i].is_number() && std::isfinite(v[i].get<double>()),
                      key_path(key) + "[" + std::to_string(i) + "] must be a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Reader child(const std::string& key) { return Reader(at(key), key_path(key)); }

  /// At most one of the keys may be present.
  void exclusive(const std::string& a, const std::string& b) const {
    detail::require(!(has(a) && has(b)), key_path(a) + " and " + key_path(b) + " are mutually exclusive");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ValidationError("unknown key '" + key_path(it.key()) + "'");
  }

 private:
  const ojson& at(const std::string& key) {
    if (!j_.contains(key)) throw ValidationError("missing required key '" + key_path(key) + "'");
    used_.insert(key);
    return j_.at(key);
  }

  const ojson& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Re-raises a module validation error with the section path when the module
// message does not already carry it.
template <class F>
void validate_section(const std::string& section, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(section, 0) == 0) throw;
    throw ValidationError(section + ": " + what);
  }
}

}  // namespace config_detail

struct StretcherConfig {
  StretcherGeometry geometry;
  std::optional<double> target_gdd_ps2;  // when set, separation_mm is solved from it
};

struct ScanConfig {
  std::vector<double> areas_pi;
  std::vector<double> gdds_ps2;
  std::optional<double> counts_per_population;
};

struct CorrelationConfig {
  std::uint64_t n_pulses = 1000000;
  double window_ns = 3.2;
  int n_side_peaks = 6;
  CorrelationOptions options;
};

struct HomConfig {
  HomGeometry geometry;
  double outer_delay_ns = 8.0;
};

struct G2Config {
  std::optional<std::string> input;
};

struct SpectrumConfig {
  std::optional<std::string> input;
  std::optional<VoigtParams> synth;
  std::uint64_t n_points = 401;
  double noise = 0.0;
  double half_span_ghz = 0.0;  // 0: five Voigt FWHM
  bool fit = true;
};

struct OutputConfig {
  std::string dir = "rapsim_out";
  std::string format = "csv";
};

struct RunConfig {
  std::string description;
  std::uint64_t seed = default_seed;
  unsigned threads = 0;
  std::optional<PulseSpec> pulse;
  std::optional<StretcherConfig> stretcher;
  SystemParams system;
  EvolveOptions integrator;
  std::optional<ScanConfig> scan;
  std::optional<ModulationSpec> modulation;
  std::optional<SourceModel> source;
  CorrelationConfig correlation;
  HomConfig hom;
  G2Config g2;
  std::optional<SpectrumConfig> spectrum;
  OutputConfig output;
};

namespace config_detail {

inline PulseSpec parse_pulse(Reader r) {
  PulseSpec p;
  const std::string shape = r.string("shape", "sech");
  if (shape == "sech") p.shape = PulseShape::sech;
  else if (shape == "gaussian") p.shape = PulseShape::gaussian;
  else throw ValidationError(r.key_path("shape") + " must be \"sech\" or \"gaussian\", got \"" + shape + "\"");
  p.fwhm_ps = r.number("fwhm_ps");
  p.area_pi = r.number("area_pi", p.area_pi);
  p.gdd_ps2 = r.number("gdd_ps2", p.gdd_ps2);
  p.detuning_radps = r.number("detuning_radps", p.detuning_radps);
  r.finish();
  validate_section("pulse", [&] { p.validate(); });
  return p;
}

inline StretcherConfig parse_stretcher(Reader r) {
  StretcherConfig s;
  auto& g = s.geometry;
  g.groove_density_per_mm = r.number("groove_density_per_mm", g.groove_density_per_mm);
  g.wavelength_nm = r.number("wavelength_nm");
  g.incidence_deg = r.number("incidence_deg", 0.0);
  g.telescope_inserted = r.boolean("telescope_inserted", true);
  r.exclusive("separation_mm", "target_gdd_ps2");
  detail::require(r.has("separation_mm") || r.has("target_gdd_ps2"),
                  "missing required key '" + r.key_path("separation_mm") + "' (or '" +
                      r.key_path("target_gdd_ps2") + "')");
  if (r.has("target_gdd_ps2")) {
    s.target_gdd_ps2 = r.number("target_gdd_ps2");
    g.separation_mm = 0.0;
    validate_section("stretcher", [&] { g.validate(); });
    g.separation_mm = separation_for_gdd(g, *s.target_gdd_ps2);
  } else {
    g.separation_mm = r.number("separation_mm");
  }
  r.finish();
  validate_section("stretcher", [&] { g.validate(); });
  return s;
}

inline SystemParams parse_system(Reader r) {
  SystemParams s;
  r.exclusive("radiative_rate_per_ps", "radiative_linewidth_ghz");
  if (r.has("radiative_linewidth_ghz")) {
    const double ghz = r.number("radiative_linewidth_ghz");
    detail::require(ghz >= 0.0, r.key_path("radiative_linewidth_ghz") + " must be >= 0");
    s.radiative_rate = units::ghz_to_radps(ghz);
  } else {
    s.radiative_rate = r.number("radiative_rate_per_ps", 0.0);
  }
  s.pure_dephasing = r.number("pure_dephasing_per_ps", 0.0);
  if (r.has("phonon")) {
    auto p = r.child("phonon");
    s.phonon.alpha_ps2 = p.number("alpha_ps2");
    s.phonon.cutoff_radps = p.number("cutoff_radps");
    s.phonon.temperature_k = p.number("temperature_k");
    p.finish();
  }
  r.finish();
  validate_section("system", [&] { s.validate(); });
  return s;
}

inline EvolveOptions parse_integrator(Reader r) {
  EvolveOptions o;
  o.tol = r.number("tol", o.tol);
  o.h_max = r.number("h_max_ps", o.h_max);
  r.finish();
  detail::require(o.tol > 0.0 && o.tol < 1.0, r.key_path("tol") + " must lie in (0, 1)");
  detail::require(o.h_max > 0.0, r.key_path("h_max_ps") + " must be positive");
  return o;
}

// Either an explicit list under `list_key` or an even grid from min/max/steps.
inline std::vector<double> parse_grid(Reader& r, const std::string& list_key, const std::string& min_key,
                                      const std::string& max_key, const std::string& steps_key,
                                      std::optional<double> default_min) {
  if (r.has(list_key)) {
    for (const auto& k : {min_key, max_key, steps_key}) r.exclusive(list_key, k);
    return r.numbers(list_key);
  }
  if (!r.has(max_key) && !r.has(steps_key) && !r.has(min_key)) return {};
  const double lo = default_min && !r.has(min_key) ? *default_min : r.number(min_key);
  const double hi = r.number(max_key);
  const auto n = r.unsigned_integer(steps_key);
  detail::require(n >= 1, r.key_path(steps_key) + " must be >= 1");
  detail::require(hi > lo, r.key_path(max_key) + " must exceed " + r.key_path(min_key));
  std::vector<double> g(n + 1);
  for (std::uint64_t i = 0; i <= n; ++i)
    g[i] = i == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
  return g;
}

inline ScanConfig parse_scan(Reader r) {
  ScanConfig s;
  s.areas_pi = parse_grid(r, "areas_pi", "area_min_pi", "area_max_pi", "area_steps", 0.0);
  s.gdds_ps2 = parse_grid(r, "gdds_ps2", "gdd_min_ps2", "gdd_max_ps2", "gdd_steps", std::nullopt);
  if (r.has("counts_per_population")) s.counts_per_population = r.number("counts_per_population");
  r.finish();
  for (double a : s.areas_pi) detail::require(a >= 0.0, "scan.areas_pi entries must be >= 0");
  if (s.counts_per_population)
    detail::require(*s.counts_per_population > 0.0, "scan.counts_per_population must be > 0");
  return s;
}

inline ModulationSpec parse_modulation(Reader r) {
  ModulationSpec m;
  m.frequency_hz = r.number("frequency_hz", m.frequency_hz);
  m.peak_to_peak_fraction = r.number("peak_to_peak_fraction", m.peak_to_peak_fraction);
  m.center_area_pi = r.number("center_area_pi", m.center_area_pi);
  m.duration_s = r.number("duration_s", m.duration_s);
  m.sampling_hz = r.number("sampling_hz", m.sampling_hz);
  r.finish();
  m.validate();
  return m;
}

// p1 defaults to 1 - p0 - p2; p2 may be given directly or through g2_target.
inline SourceModel parse_source(Reader r, const SystemParams& sys) {
  SourceModel s;
  r.exclusive("p2", "g2_target");
  s.p0 = r.number("p0", 0.0);
  if (r.has("g2_target")) {
    const double g2 = r.number("g2_target");
    detail::require(g2 >= 0.0 && g2 <= 0.5, r.key_path("g2_target") + " must lie in [0, 0.5]");
    // With q = 1 - p0 and p2 = q x: g2 = 2 x / (q (1 + x)^2).
    s.p2 = (1.0 - s.p0) * two_photon_probability_for_g2(g2 * (1.0 - s.p0));
  } else {
    s.p2 = r.number("p2", 0.0);
  }
  s.p1 = r.number("p1", 1.0 - s.p0 - s.p2);
  s.overlap = r.number("overlap", s.overlap);
  s.efficiency = r.number("efficiency", s.efficiency);
  s.rep_period_ns = r.number("rep_period_ns", s.rep_period_ns);
  // Default lifetime is 1 / Gamma of the system section when Gamma > 0.
  const double fallback = sys.radiative_rate > 0.0 ? 1e-3 / sys.radiative_rate : s.lifetime_ns;
  s.lifetime_ns = r.number("lifetime_ns", fallback);
  r.finish();
  s.validate();
  return s;
}

inline CorrelationConfig parse_correlation(Reader r) {
  CorrelationConfig c;
  c.n_pulses = r.unsigned_integer("n_pulses", c.n_pulses);
  c.window_ns = r.number("window_ns", c.window_ns);
  const auto n_side = r.unsigned_integer("n_side_peaks", 6);
  c.options.bin_width_ns = r.number("bin_width_ns", c.options.bin_width_ns);
  c.options.half_range_periods = r.number("half_range_periods", c.options.half_range_periods);
  c.options.block_pulses = r.unsigned_integer("block_pulses", c.options.block_pulses);
  r.finish();
  detail::require(c.n_pulses >= 1, "correlation.n_pulses must be >= 1");
  detail::require(n_side >= 1 && n_side <= 1000, "correlation.n_side_peaks must lie in [1, 1000]");
  c.n_side_peaks = static_cast<int>(n_side);
  detail::require(c.window_ns > 0.0, "correlation.window_ns must be positive");
  detail::require(c.options.bin_width_ns > 0.0, "correlation.bin_width_ns must be positive");
  detail::require(c.options.half_range_periods > 0.0, "correlation.half_range_periods must be positive");
  detail::require(c.options.block_pulses >= 1, "correlation.block_pulses must be >= 1");
  return c;
}

inline HomConfig parse_hom(Reader r) {
  HomConfig h;
  h.geometry.pair_delay_ns = r.number("pair_delay_ns", h.geometry.pair_delay_ns);
  h.geometry.mz_delay_ns = r.number("mz_delay_ns", h.geometry.mz_delay_ns);
  h.geometry.mz_visibility = r.number("mz_visibility", h.geometry.mz_visibility);
  h.outer_delay_ns = r.number("outer_delay_ns", h.outer_delay_ns);
  r.finish();
  h.geometry.validate();
  detail::require(h.outer_delay_ns > 0.0, "hom.outer_delay_ns must be positive");
  return h;
}

inline SpectrumConfig parse_spectrum(Reader r) {
  SpectrumConfig s;
  r.exclusive("input", "synth");
  if (r.has("input")) s.input = r.string("input");
  if (r.has("synth")) {
    auto p = r.child("synth");
    VoigtParams v;
    v.center = p.number("center_ghz", 0.0);
    v.lorentzian_fwhm = p.number("lorentzian_fwhm_ghz");
    v.gaussian_fwhm = p.number("gaussian_fwhm_ghz");
    v.amplitude = p.number("amplitude", v.amplitude);
    v.baseline = p.number("baseline", v.baseline);
    p.finish();
    validate_section("spectrum.synth", [&] { v.validate(); });
    s.synth = v;
  }
  s.n_points = r.unsigned_integer("n_points", s.n_points);
  s.noise = r.number("noise", s.noise);
  s.half_span_ghz = r.number("half_span_ghz", s.half_span_ghz);
  s.fit = r.boolean("fit", s.fit);
  r.finish();
  detail::require(s.n_points >= 2, "spectrum.n_points must be >= 2");
  detail::require(s.noise >= 0.0, "spectrum.noise must be >= 0");
  detail::require(s.half_span_ghz >= 0.0, "spectrum.half_span_ghz must be >= 0");
  return s;
}

}  // namespace config_detail

inline RunConfig parse_config(const ojson& j) {
  using namespace config_detail;
  Reader r(j, "");
  RunConfig c;
  c.description = r.string("description", "");
  c.seed = r.unsigned_integer("seed", default_seed);
  const auto threads = r.unsigned_integer("threads", 0);
  detail::require(threads <= 4096, "threads must be <= 4096");
  c.threads = static_cast<unsigned>(threads);
  if (r.has("pulse")) c.pulse = parse_pulse(r.child("pulse"));
  if (r.has("stretcher")) c.stretcher = parse_stretcher(r.child("stretcher"));
  if (r.has("system")) c.system = parse_system(r.child("system"));
  if (r.has("integrator")) c.integrator = parse_integrator(r.child("integrator"));
  if (r.has("scan")) c.scan = parse_scan(r.child("scan"));
  if (r.has("modulation")) c.modulation = parse_modulation(r.child("modulation"));
  if (r.has("source")) c.source = parse_source(r.child("source"), c.system);
  if (r.has("correlation")) c.correlation = parse_correlation(r.child("correlation"));
  if (r.has("hom")) c.hom = parse_hom(r.child("hom"));
  if (r.has("g2")) {
    auto g = r.child("g2");
    if (g.has("input")) c.g2.input = g.string("input");
    g.finish();
  }
  if (r.has("spectrum")) c.spectrum = parse_spectrum(r.child("spectrum"));
  if (r.has("output")) {
    auto o = r.child("output");
    c.output.dir = o.string("dir", c.output.dir);
    c.output.format = o.string("format", c.output.format);
    o.finish();
  }
  r.finish();
  detail::require(c.output.format == "csv" || c.output.format == "json",
                  "output.format must be \"csv\" or \"json\", got \"" + c.output.format + "\"");
  detail::require(!c.output.dir.empty(), "output.dir must not be empty");
  return c;
}

inline ojson parse_json_text(const std::string& text, const std::string& source) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ValidationError(source + ": invalid JSON (" + e.what() + ")");
  }
}

inline ojson read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json_text(text, path);
}

/// The resolved config with every default filled in. parse_config of the
/// result reproduces the config.
inline ojson resolved_json(const RunConfig& c) {
  ojson j;
  if (!c.description.empty()) j["description"] = c.description;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  if (c.pulse) {
    const auto& p = *c.pulse;
    j["pulse"] = {{"shape", to_string(p.shape)},
                  {"fwhm_ps", p.fwhm_ps},
                  {"area_pi", p.area_pi},
                  {"gdd_ps2", p.gdd_ps2},
                  {"detuning_radps", p.detuning_radps}};
  }
  if (c.stretcher) {
    const auto& g = c.stretcher->geometry;
    j["stretcher"] = {{"groove_density_per_mm", g.groove_density_per_mm},
                      {"wavelength_nm", g.wavelength_nm},
                      {"incidence_deg", g.incidence_deg},
                      {"telescope_inserted", g.telescope_inserted}};
    if (c.stretcher->target_gdd_ps2) j["stretcher"]["target_gdd_ps2"] = *c.stretcher->target_gdd_ps2;
    else j["stretcher"]["separation_mm"] = g.separation_mm;
  }
  j["system"] = {{"radiative_rate_per_ps", c.system.radiative_rate},
                 {"pure_dephasing_per_ps", c.system.pure_dephasing}};
  if (c.system.phonon.alpha_ps2 > 0.0)
    j["system"]["phonon"] = {{"alpha_ps2", c.system.phonon.alpha_ps2},
                             {"cutoff_radps", c.system.phonon.cutoff_radps},
                             {"temperature_k", c.system.phonon.temperature_k}};
  j["integrator"] = {{"tol", c.integrator.tol}, {"h_max_ps", c.integrator.h_max}};
  if (c.scan) {
    j["scan"] = {{"areas_pi", c.scan->areas_pi}, {"gdds_ps2", c.scan->gdds_ps2}};
    if (c.scan->counts_per_population) j["scan"]["counts_per_population"] = *c.scan->counts_per_population;
  }
  if (c.modulation) {
    const auto& m = *c.modulation;
    j["modulation"] = {{"frequency_hz", m.frequency_hz},
                       {"peak_to_peak_fraction", m.peak_to_peak_fraction},
                       {"center_area_pi", m.center_area_pi},
                       {"duration_s", m.duration_s},
                       {"sampling_hz", m.sampling_hz}};
  }
  if (c.source) {
    const auto& s = *c.source;
    j["source"] = {{"p0", s.p0}, {"p1", s.p1}, {"p2", s.p2}, {"overlap", s.overlap},
                   {"efficiency", s.efficiency}, {"rep_period_ns", s.rep_period_ns},
                   {"lifetime_ns", s.lifetime_ns}};
  }
  j["correlation"] = {{"n_pulses", c.correlation.n_pulses},
                      {"window_ns", c.correlation.window_ns},
                      {"n_side_peaks", c.correlation.n_side_peaks},
                      {"bin_width_ns", c.correlation.options.bin_width_ns},
                      {"half_range_periods", c.correlation.options.half_range_periods},
                      {"block_pulses", c.correlation.options.block_pulses}};
  j["hom"] = {{"pair_delay_ns", c.hom.geometry.pair_delay_ns},
              {"mz_delay_ns", c.hom.geometry.mz_delay_ns},
              {"mz_visibility", c.hom.geometry.mz_visibility},
              {"outer_delay_ns", c.hom.outer_delay_ns}};
  if (c.g2.input) j["g2"] = {{"input", *c.g2.input}};
  if (c.spectrum) {
    const auto& s = *c.spectrum;
    ojson js;
    if (s.input) js["input"] = *s.input;
    if (s.synth)
      js["synth"] = {{"center_ghz", s.synth->center},
                     {"lorentzian_fwhm_ghz", s.synth->lorentzian_fwhm},
                     {"gaussian_fwhm_ghz", s.synth->gaussian_fwhm},
                     {"amplitude", s.synth->amplitude},
                     {"baseline", s.synth->baseline}};
    js["n_points"] = s.n_points;
    js["noise"] = s.noise;
    js["half_span_ghz"] = s.half_span_ghz;
    js["fit"] = s.fit;
    j["spectrum"] = js;
  }
  j["output"] = {{"dir", c.output.dir}, {"format", c.output.format}};
  return j;
}

/// Bundled configuration holding the published experimental and simulation
/// constants. Identical to configs/paper_defaults.json.
inline const char* paper_defaults_text() {
  return R"json({
  "description": "Published constants: 3 ps sech pulses, +-32 ps^2 chirp (about 30 ps stretched), 4.2 K phonon bath with alpha = 0.022 ps^2 and omega_c = 2 rad/ps, 0.39 GHz radiative linewidth, 82 MHz repetition, 4 ns HOM delays, 3.2 ns coincidence window.",
  "seed": 20240611,
  "pulse": {
    "shape": "sech",
    "fwhm_ps": 3.0,
    "area_pi": 1.0,
    "gdd_ps2": 0.0,
    "detuning_radps": 0.0
  },
  "system": {
    "radiative_linewidth_ghz": 0.39,
    "pure_dephasing_per_ps": 0.0,
    "phonon": {
      "alpha_ps2": 0.022,
      "cutoff_radps": 2.0,
      "temperature_k": 4.2
    }
  },
  "scan": {
    "area_max_pi": 3.0,
    "area_steps": 60,
    "gdds_ps2": [-32.0, 32.0]
  },
  "modulation": {
    "frequency_hz": 0.05,
    "peak_to_peak_fraction": 0.8,
    "center_area_pi": 1.0,
    "duration_s": 40.0,
    "sampling_hz": 2.0
  },
  "source": {
    "p0": 0.0,
    "g2_target": 0.003,
    "overlap": 0.995,
    "efficiency": 1.0,
    "rep_period_ns": 12.195121951219512
  },
  "correlation": {
    "n_pulses": 1000000,
    "window_ns": 3.2,
    "n_side_peaks": 6,
    "bin_width_ns": 0.1,
    "half_range_periods": 4.0
  },
  "hom": {
    "pair_delay_ns": 4.0,
    "mz_delay_ns": 4.0,
    "mz_visibility": 0.995,
    "outer_delay_ns": 8.0
  },
  "spectrum": {
    "synth": {
      "center_ghz": 0.0,
      "lorentzian_fwhm_ghz": 0.48,
      "gaussian_fwhm_ghz": 0.55
    },
    "n_points": 401,
    "noise": 0.0
  }
}
)json";
}

inline ojson paper_defaults_json() { return parse_json_text(paper_defaults_text(), "paper defaults"); }

namespace config_detail {

// Alternative spellings of one setting. An overlay that uses one side
// removes the other side from the base before merging.
struct ExclusiveGroup {
  const char* section;
  std::vector<const char*> a, b;
};

inline const std::vector<ExclusiveGroup>& exclusive_groups() {
  static const std::vector<ExclusiveGroup> g = {
      {"scan", {"areas_pi"}, {"area_min_pi", "area_max_pi", "area_steps"}},
      {"scan", {"gdds_ps2"}, {"gdd_min_ps2", "gdd_max_ps2", "gdd_steps"}},
      {"system", {"radiative_rate_per_ps"}, {"radiative_linewidth_ghz"}},
      {"source", {"p2"}, {"g2_target"}},
      {"stretcher", {"separation_mm"}, {"target_gdd_ps2"}},
      {"spectrum", {"input"}, {"synth"}},
  };
  return g;
}

inline bool has_any(const ojson& section, const std::vector<const char*>& keys) {
  for (const char* k : keys)
    if (section.contains(k)) return true;
  return false;
}

}  // namespace config_detail

/// Paper defaults (optional) with the user's config merged over them
/// (RFC 7386 merge patch: objects merge, everything else replaces, null
/// deletes).
inline ojson layered_config(bool paper_defaults, const std::optional<ojson>& user) {
  ojson base = paper_defaults ? paper_defaults_json() : ojson::object();
  if (user) {
    detail::require(user->is_object(), "config must be a JSON object");
    for (const auto& g : config_detail::exclusive_groups()) {
      if (!user->contains(g.section) || !(*user)[g.section].is_object() || !base.contains(g.section)) continue;
      const auto& over = (*user)[g.section];
      auto& under = base[g.section];
      if (config_detail::has_any(over, g.a))
        for (const char* k : g.b) under.erase(k);
      if (config_detail::has_any(over, g.b))
        for (const char* k : g.a) under.erase(k);
    }
    base.merge_patch(*user);
  }
  return base;
}

}  // namespace rapsim
