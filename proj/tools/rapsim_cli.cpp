// rapsim: one subcommand per experiment. Exit 0 on success, 1 on invalid
// input or configuration, 2 when the numerics fail.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rapsim/rapsim.hpp"

namespace fs = std::filesystem;
using rapsim::ojson;

namespace {

constexpr const char* version = "1.0.0";

struct Flags {
  std::string config_path;
  bool paper_defaults = false;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  std::optional<unsigned> threads;
  std::string input;
};

// Collects artifacts in the output directory and records their names.
class Output {
 public:
  Output(const rapsim::RunConfig& cfg) : dir_(cfg.output.dir), json_(cfg.output.format == "json") {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw rapsim::ValidationError("output.dir: cannot create '" + dir_.string() + "': " + ec.message());
  }

  /// Bulk table: CSV, or its column JSON form under --format json.
  template <class Writer>
  void table(const std::string& stem, Writer&& write) {
    std::ostringstream os;
    write(os);
    if (json_) text(stem + ".json", rapsim::csv_to_json(os.str(), stem).dump(2) + "\n");
    else text(stem + ".csv", os.str());
  }

  /// Scalar results are always JSON.
  void record(const std::string& stem, const ojson& j) { text(stem + ".json", j.dump(2) + "\n"); }

  void text(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw rapsim::ValidationError("output.dir: cannot write '" + p.string() + "'");
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path dir_;
  bool json_;
  std::vector<std::string> names_;
};

template <class T>
const T& need(const std::optional<T>& v, const std::string& section, const std::string& command) {
  if (!v) throw rapsim::ValidationError("missing required section '" + section + "' for '" + command + "'");
  return *v;
}

rapsim::SweepOptions sweep_options(const rapsim::RunConfig& c) {
  rapsim::SweepOptions o;
  o.threads = static_cast<int>(c.threads);
  o.evolve = c.integrator;
  return o;
}

rapsim::ScanSpec scan_spec(const rapsim::RunConfig& c, const std::string& command) {
  const auto& scan = need(c.scan, "scan", command);
  rapsim::ScanSpec s;
  s.pulse = need(c.pulse, "pulse", command);
  s.areas_pi = scan.areas_pi;
  s.gdds_ps2 = scan.gdds_ps2;
  s.system = c.system;
  s.counts_per_population = scan.counts_per_population;
  return s;
}

ojson curve_summary(const rapsim::PowerCurve& c) {
  const auto first = c.first_maximum(), top = c.global_maximum();
  return {{"gdd_ps2", c.gdd_ps2},
          {"first_maximum_area_pi", c.area_pi[first]},
          {"first_maximum_p_e", c.p_e[first]},
          {"global_maximum_area_pi", c.area_pi[top]},
          {"global_maximum_p_e", c.p_e[top]}};
}

void run_rabi(const rapsim::RunConfig& c, Output& out) {
  auto spec = scan_spec(c, "rabi");
  spec.gdds_ps2 = {0.0};
  const auto curve = rapsim::power_scan(spec, sweep_options(c));
  out.table("rabi", [&](std::ostream& os) { rapsim::write_curve_csv(os, curve); });
  out.record("rabi_summary", curve_summary(curve));
}

void run_rap(const rapsim::RunConfig& c, Output& out) {
  const auto spec = scan_spec(c, "rap");
  rapsim::detail::require(!spec.gdds_ps2.empty(), "scan.gdds_ps2 must not be empty");
  ojson summary = ojson::array();
  for (double gdd : spec.gdds_ps2) {
    auto one = spec;
    one.gdds_ps2 = {gdd};
    const auto curve = rapsim::power_scan(one, sweep_options(c));
    out.table("rap_gdd_" + rapsim::csv::format(gdd), [&](std::ostream& os) { rapsim::write_curve_csv(os, curve); });
    summary.push_back(curve_summary(curve));
  }
  out.record("rap_summary", summary);
}

void run_map(const rapsim::RunConfig& c, Output& out) {
  const auto m = rapsim::chirp_area_map(scan_spec(c, "map"), sweep_options(c));
  out.table("map", [&](std::ostream& os) { rapsim::write_map_csv(os, m); });
}

void run_trace(const rapsim::RunConfig& c, Output& out) {
  const auto& mod = need(c.modulation, "modulation", "trace");
  const auto& pulse = need(c.pulse, "pulse", "trace");
  const auto tr = rapsim::robustness_trace(mod, pulse, c.system, sweep_options(c));
  out.table("trace", [&](std::ostream& os) { rapsim::write_trace_csv(os, tr); });
  out.record("trace_summary", {{"gdd_ps2", pulse.gdd_ps2},
                               {"center_area_pi", mod.center_area_pi},
                               {"fluctuation", tr.fluctuation()}});
}

void run_dressed(const rapsim::RunConfig& c, Output& out) {
  const auto& pulse = need(c.pulse, "pulse", "dressed");
  const auto field = rapsim::synthesize(pulse);
  const auto curves = rapsim::dressed_curves(field, c.system, c.integrator);
  out.table("dressed", [&](std::ostream& os) { rapsim::write_dressed_csv(os, curves); });
  out.record("dressed_summary", {{"adiabaticity_parameter", rapsim::adiabaticity_parameter(field)},
                                 {"final_p_e", curves.p_e.back()},
                                 {"photon_yield", rapsim::photon_yield(rapsim::evolve(field, c.system, c.integrator),
                                                                       c.system.radiative_rate)}});
}

void run_gdd(const rapsim::RunConfig& c, Output& out) {
  const auto& st = need(c.stretcher, "stretcher", "gdd");
  const auto& g = st.geometry;
  const double gdd = rapsim::treacy_gdd(g);
  ojson j = {{"groove_density_per_mm", g.groove_density_per_mm},
             {"wavelength_nm", g.wavelength_nm},
             {"incidence_deg", g.incidence_deg},
             {"telescope_inserted", g.telescope_inserted},
             {"separation_mm", g.separation_mm},
             {"sin_diffraction", g.sin_diffraction()},
             {"gdd_ps2", gdd}};
  if (c.pulse) {
    auto p = *c.pulse;
    p.gdd_ps2 = gdd;
    const auto field = rapsim::synthesize(p);
    j["input_fwhm_ps"] = p.fwhm_ps;
    j["stretched_fwhm_ps"] = rapsim::intensity_fwhm(field);
    j["gaussian_equivalent_fwhm_ps"] = p.gaussian_equivalent_stretch();
    out.table("field", [&](std::ostream& os) { rapsim::write_field_csv(os, field); });
  }
  out.record("gdd", j);
}

rapsim::CorrelationOptions correlation_options(const rapsim::RunConfig& c) {
  auto o = c.correlation.options;
  o.threads = c.threads;
  return o;
}

rapsim::G2Result hbt_g2(const rapsim::RunConfig& c, Output* out) {
  const auto& src = need(c.source, "source", out ? "hbt" : "hom");
  const auto h = rapsim::simulate_hbt(src, c.correlation.n_pulses, c.seed, correlation_options(c));
  if (out) out->table("hbt_histogram", [&](std::ostream& os) { rapsim::write_histogram_csv(os, h); });
  return rapsim::estimate_g2(h, c.correlation.window_ns, c.correlation.n_side_peaks);
}

void run_hbt(const rapsim::RunConfig& c, Output& out) {
  const auto r = hbt_g2(c, &out);
  auto j = rapsim::to_json(r);
  j["analytic_g2"] = rapsim::analytic_g2(*c.source);
  j["n_pulses"] = c.correlation.n_pulses;
  out.record("g2", j);
}

// Seeds: the g2 calibration run uses `seed`, the two HOM runs seed + 1 and seed + 2.
void run_hom(const rapsim::RunConfig& c, Output& out) {
  const auto& src = need(c.source, "source", "hom");
  const auto opt = correlation_options(c);
  const auto par = rapsim::simulate_hom(src, rapsim::Polarization::parallel, c.hom.geometry,
                                        c.correlation.n_pulses, c.seed + 1, opt);
  const auto cross = rapsim::simulate_hom(src, rapsim::Polarization::cross, c.hom.geometry,
                                          c.correlation.n_pulses, c.seed + 2, opt);
  out.table("hom_parallel", [&](std::ostream& os) { rapsim::write_histogram_csv(os, par); });
  out.table("hom_cross", [&](std::ostream& os) { rapsim::write_histogram_csv(os, cross); });
  const auto g2 = hbt_g2(c, nullptr);
  rapsim::HOMResult r;
  r.window_ns = c.correlation.window_ns;
  r.v_raw = rapsim::hom_raw_visibility(par, cross, r.window_ns, c.hom.outer_delay_ns);
  r.g2 = {g2.g2, g2.sigma};
  r.mz_visibility = c.hom.geometry.mz_visibility;
  r.v_corrected = rapsim::correct_visibility(r.v_raw, r.g2, rapsim::Estimate{r.mz_visibility, 0.0});
  auto j = rapsim::to_json(r);
  j["overlap"] = src.overlap;
  j["n_pulses"] = c.correlation.n_pulses;
  out.record("hom", j);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rapsim::ValidationError(path + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// CSV as is; `.json` files in the column form are converted first.
std::string read_table_text(const std::string& path) {
  const std::string text = read_text(path);
  if (fs::path(path).extension() == ".json") return rapsim::json_to_csv(rapsim::parse_json_text(text, path), path);
  return text;
}

void run_g2(const rapsim::RunConfig& c, const Flags& f, Output& out) {
  const std::string path = !f.input.empty() ? f.input : c.g2.input.value_or("");
  if (path.empty()) throw rapsim::ValidationError("missing required key 'g2.input' (or --input)");
  std::istringstream in(read_table_text(path));
  const auto h = rapsim::read_histogram_csv(in, path);
  out.record("g2", rapsim::to_json(rapsim::estimate_g2(h, c.correlation.window_ns, c.correlation.n_side_peaks)));
}

void run_spectrum(const rapsim::RunConfig& c, const Flags& f, Output& out) {
  rapsim::SpectrumConfig sc = c.spectrum.value_or(rapsim::SpectrumConfig{});
  if (!f.input.empty()) {
    sc.input = f.input;
    sc.synth.reset();
  }
  if (!sc.input && !sc.synth)
    throw rapsim::ValidationError("missing required key 'spectrum.synth' (or 'spectrum.input', or --input)");
  rapsim::Spectrum s;
  if (sc.input) {
    std::istringstream in(read_table_text(*sc.input));
    s = rapsim::read_spectrum_csv(in, *sc.input);
  } else {
    s = rapsim::synth_spectrum(*sc.synth, sc.n_points, sc.noise, c.seed, sc.half_span_ghz);
    out.table("spectrum", [&](std::ostream& os) { rapsim::write_spectrum_csv(os, s); });
  }
  if (sc.fit) {
    const auto fit = rapsim::fit_voigt(s);
    if (!fit.converged) throw rapsim::NumericalError("spectrum: Voigt fit did not converge");
    out.record("fit", rapsim::to_json(fit));
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

rapsim::RunConfig resolve(const Flags& f) {
  std::optional<ojson> user;
  if (!f.config_path.empty()) user = rapsim::read_json_file(f.config_path);
  ojson j = rapsim::layered_config(f.paper_defaults, user);
  if (f.seed) j["seed"] = *f.seed;
  if (f.threads) j["threads"] = *f.threads;
  if (f.out) j["output"]["dir"] = *f.out;
  if (f.format) j["output"]["format"] = *f.format;
  return rapsim::parse_config(j);
}

int run(const std::string& command, const Flags& f) {
  const auto cfg = resolve(f);
  Output out(cfg);
  if (command == "rabi") run_rabi(cfg, out);
  else if (command == "rap") run_rap(cfg, out);
  else if (command == "map") run_map(cfg, out);
  else if (command == "trace") run_trace(cfg, out);
  else if (command == "dressed") run_dressed(cfg, out);
  else if (command == "gdd") run_gdd(cfg, out);
  else if (command == "hbt") run_hbt(cfg, out);
  else if (command == "hom") run_hom(cfg, out);
  else if (command == "g2") run_g2(cfg, f, out);
  else if (command == "spectrum") run_spectrum(cfg, f, out);
  ojson manifest;
  manifest["tool"] = "rapsim";
  manifest["version"] = version;
  manifest["subcommand"] = command;
  manifest["created_utc"] = utc_now();
  manifest["seed"] = cfg.seed;
  manifest["config_file"] = f.config_path;
  manifest["paper_defaults"] = f.paper_defaults;
  if (!f.input.empty()) manifest["input"] = f.input;
  manifest["artifacts"] = out.names();
  manifest["config"] = rapsim::resolved_json(cfg);
  out.text("manifest.json", manifest.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chirped-pulse RAP single-photon source simulator"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_flag("--paper-defaults", f.paper_defaults, "Start from the bundled published constants");
  app.add_option("--out", f.out, "Output directory (overrides output.dir)");
  app.add_option("--seed", f.seed, "RNG seed (overrides seed)");
  app.add_option("--format", f.format, "Bulk output format (overrides output.format)")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", f.threads, "Worker cap, 0 = all cores (overrides threads)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"rabi", "Power scan of transform-limited pulses"},
      {"rap", "Power scan at each scan.gdds_ps2 chirp"},
      {"map", "Emission yield over the chirp x area grid"},
      {"trace", "Yield under triangular laser-power modulation"},
      {"dressed", "Dressed-state energies and populations along one pulse"},
      {"gdd", "Grating-pair group-delay dispersion"},
      {"hbt", "Monte-Carlo Hanbury Brown-Twiss histogram and g2(0)"},
      {"hom", "Monte-Carlo Hong-Ou-Mandel histograms and visibility"},
      {"g2", "g2(0) from a coincidence histogram file"},
      {"spectrum", "Synthesize and/or fit a Voigt spectrum"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (name == "g2" || name == "spectrum")
      sub->add_option("--input", f.input, "Input table (.csv, or column-form .json)")->check(CLI::ExistingFile);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), f);
  } catch (const rapsim::ValidationError& e) {
    std::cerr << "rapsim: error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "rapsim: error: " << e.what() << '\n';
    return 1;
  } catch (const rapsim::NumericalError& e) {
    std::cerr << "rapsim: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rapsim: numerical failure: " << e.what() << '\n';
    return 2;
  }
}
