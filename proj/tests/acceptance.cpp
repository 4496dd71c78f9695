// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 when
// the set of failing criteria equals --expected-failures (default: none).

#include <CLI11.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rapsim/rapsim.hpp"

namespace fs = std::filesystem;
using namespace rapsim;

namespace {

struct Outcome {
  std::string id;
  bool pass;
  std::string text;
};

std::vector<Outcome> outcomes;

void report(const std::string& id, bool pass, const std::string& text) {
  outcomes.push_back({id, pass, text});
  std::printf("[%s] %-3s %s\n", pass ? "PASS" : "FAIL", id.c_str(), text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

PulseSpec sech(double area_pi, double gdd_ps2) { return {PulseShape::sech, 3.0, area_pi, gdd_ps2, 0.0}; }

SystemParams paper_system() {
  SystemParams s;
  s.radiative_rate = units::ghz_to_radps(0.39);
  s.phonon = {0.022, 2.0, 4.2};
  return s;
}

std::vector<double> even_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = i + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

// Every (pulse, system) evaluated by criteria 1-4; criterion 9 re-runs them
// with full trajectories.
struct GridPoint {
  PulseSpec pulse;
  bool lossless;
};
std::vector<GridPoint> acceptance_grid;

void add_grid(const std::vector<double>& areas, const std::vector<double>& gdds, bool lossless) {
  for (double g : gdds)
    for (double a : areas) acceptance_grid.push_back({sech(a, g), lossless});
}

// -- Criteria --------------------------------------------------------------------

void area_theorem() {
  const Stopwatch sw;
  double worst = 0.0;
  for (double theta : {0.5, 1.0, 2.0, 3.0}) {
    const auto tr = evolve(synthesize(sech(theta, 0.0)), SystemParams{});
    const double s = std::sin(0.5 * units::pi * theta);
    worst = std::max(worst, std::abs(tr.final_excited() - s * s));
  }
  const double t = sw.seconds();
  add_grid({0.5, 1.0, 2.0, 3.0}, {0.0}, true);
  report("1", worst < 1e-4 && t < 10.0,
         fmt("area theorem, lossless TL pulses at 0.5/1/2/3 pi: max |P_e - sin^2(Theta/2)| = %.2e (< 1e-4); "
             "%.2f s (< 10 s)", worst, t));
}

void rabi_landmark() {
  ScanSpec s;
  s.pulse = sech(1.0, 0.0);
  s.areas_pi = area_grid(3.0, 60);
  s.gdds_ps2 = {0.0};
  s.system = paper_system();
  const auto c = power_scan(s);
  add_grid(s.areas_pi, s.gdds_ps2, false);
  const double peak = c.area_pi[c.first_maximum()];
  report("2", std::abs(peak - 1.0) <= 0.05 + 1e-12,
         fmt("Rabi landmark, phonons on, gdd = 0: first maximum at %.2f pi (pi within one 0.05 pi step), "
             "P_e = %.4f", peak, c.p_e[c.first_maximum()]));
}

void chirp_map() {
  const auto areas = area_grid(3.0, 60);
  ScanSpec s;
  s.pulse = sech(1.0, 0.0);
  s.areas_pi = areas;
  s.system = paper_system();
  s.gdds_ps2 = {32.0};
  const auto pos = power_scan(s);
  s.gdds_ps2 = {-32.0};
  const auto neg = power_scan(s);
  add_grid(areas, {-32.0, 32.0}, false);

  double plateau = 1.0, worst_gap = 1.0;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (areas[i] < 1.5 - 1e-12) continue;
    plateau = std::min(plateau, pos.p_e[i]);
    worst_gap = std::min(worst_gap, pos.p_e[i] - neg.p_e[i]);
  }
  report("3a", plateau >= 0.9,
         fmt("positive-chirp plateau, gdd = +32 ps^2: min P_e over [1.5, 3] pi = %.4f (>= 0.9)", plateau));

  const std::size_t k = neg.global_maximum();
  bool monotone = true;
  for (std::size_t i = k + 1; i < neg.p_e.size(); ++i) monotone = monotone && neg.p_e[i] <= neg.p_e[i - 1];
  const double offset = std::abs(neg.area_pi[k] - 1.5);
  report("3b", offset <= 0.3 + 1e-12 && monotone,
         fmt("negative chirp, gdd = -32 ps^2: peak at %.2f pi (|peak - 1.5 pi| = %.2f pi <= 0.3 pi), "
             "P_e = %.4f, %s beyond the peak up to 3 pi", neg.area_pi[k], offset, neg.p_e[k],
             monotone ? "monotone decreasing" : "NOT monotone"));
  report("3c", worst_gap >= 0.0,
         fmt("positive >= negative pointwise on [1.5, 3] pi: min(P_e(+32) - P_e(-32)) = %.4f", worst_gap));

  // 40 x 40 map over +-64 ps^2 and [0, 3] pi.
  ScanSpec m = s;
  m.areas_pi = even_grid(0.0, 3.0, 40);
  m.gdds_ps2 = even_grid(-64.0, 64.0, 40);
  const Stopwatch sw;
  const auto map = chirp_area_map(m);
  const double t = sw.seconds();
  add_grid(m.areas_pi, m.gdds_ps2, false);
  add_grid(m.areas_pi, m.gdds_ps2, true);
  // Rows nearest +-32 ps^2.
  auto nearest = [&](double g) {
    std::size_t best = 0;
    for (std::size_t r = 0; r < map.gdd_ps2.size(); ++r)
      if (std::abs(map.gdd_ps2[r] - g) < std::abs(map.gdd_ps2[best] - g)) best = r;
    return best;
  };
  const std::size_t rp = nearest(32.0), rn = nearest(-32.0);
  double map_plateau = 1.0, map_gap = 1.0;
  for (std::size_t c = 0; c < map.area_pi.size(); ++c) {
    if (map.area_pi[c] < 1.5 - 1e-12) continue;
    map_plateau = std::min(map_plateau, map.at(rp, c));
    map_gap = std::min(map_gap, map.at(rp, c) - map.at(rn, c));
  }
  report("3d", t < 600.0 && map_plateau >= 0.9 && map_gap >= 0.0,
         fmt("40 x 40 map in %.1f s (< 600 s, %u worker(s)); rows %+.2f / %+.2f ps^2: plateau min %.4f, "
             "min(pos - neg) = %.4f", t, resolve_threads(0, 1600), map.gdd_ps2[rp], map.gdd_ps2[rn], map_plateau,
             map_gap));
}

void robustness() {
  ModulationSpec mod;
  const auto ro = robustness_trace(mod, sech(1.0, 0.0), paper_system());
  mod.center_area_pi = 1.9;
  const auto rap = robustness_trace(mod, sech(1.0, 32.0), paper_system());
  for (const auto& [tr, gdd] : {std::pair{&ro, 0.0}, std::pair{&rap, 32.0}})
    for (double a : tr->area_pi) acceptance_grid.push_back({sech(a, gdd), false});
  const double f_ro = ro.fluctuation(), f_rap = rap.fluctuation();
  report("4", f_ro >= 3.0 * f_rap && f_rap <= 0.05,
         fmt("power robustness, triangle 80%% p-p: RO (pi) %.4f vs RAP (1.9 pi, +32 ps^2) %.4f; ratio %.2f (>= 3), "
             "RAP <= 0.05", f_ro, f_rap, f_ro / f_rap));
}

void g2_statistics() {
  const auto path = (fs::path(RAPSIM_SOURCE_DIR) / "tests/data/g2_fixture.csv").string();
  std::ifstream in(path);
  const auto fixture = estimate_g2(read_histogram_csv(in, path));
  report("5a", fixture.g2 == 0.003,
         fmt("g2 estimator on the fixture (N0 = %.0f, side mean = %.0f): %.17g (== 0.003)", fixture.zero_peak,
             fixture.side_peak_mean, fixture.g2));

  SourceModel src;
  src.p2 = two_photon_probability_for_g2(0.003);
  src.p1 = 1.0 - src.p2;
  const Stopwatch sw;
  const auto h = simulate_hbt(src, 10000000, default_seed);
  const auto r = estimate_g2(h);
  const double t = sw.seconds();
  const double z = std::abs(r.g2 - 0.003) / r.sigma;
  report("5b", z <= 3.0 && t < 60.0,
         fmt("Monte-Carlo HBT, 1e7 pulses, p2 for g2 = 0.003: g2 = %.5f +- %.5f (%.2f sigma <= 3); %.1f s (< 60 s)",
             r.g2, r.sigma, z, t));
}

void hom_chain() {
  SourceModel src;
  src.p2 = two_photon_probability_for_g2(0.003);
  src.p1 = 1.0 - src.p2;
  src.overlap = 0.995;
  HomGeometry geom;
  geom.mz_visibility = 0.995;
  const std::size_t n = 4000000;
  const auto par = simulate_hom(src, Polarization::parallel, geom, n, default_seed + 1);
  const auto cross = simulate_hom(src, Polarization::cross, geom, n, default_seed + 2);
  const auto v = hom_raw_visibility(par, cross);
  report("6a", std::abs(v.value - 0.979) <= 0.01,
         fmt("HOM Monte Carlo, M = xi = 0.995, 4e6 pulse pairs: v_raw = %.4f +- %.4f (0.979 +- 0.01)", v.value,
             v.sigma));
  const double vc = correct_visibility(0.979, 0.003, 0.995);
  report("6b", std::abs(vc - 0.995) <= 0.001,
         fmt("correct_visibility(0.979, 0.003, 0.995) = %.5f (0.995 +- 0.001)", vc));
}

void gate_fidelity() {
  const double f1 = cz_process_fidelity(1.0);
  report("7a", std::abs(f1 - 1.0) <= 1e-10, fmt("CZ process fidelity at M = 1: %.15f (1 within 1e-10)", f1));
  const double f = cz_process_fidelity(0.995);
  report("7b", std::abs(f - 0.999) <= 0.002,
         fmt("CZ process fidelity at M = 0.995: %.6f (target 0.999 +- 0.002)", f));
}

void voigt() {
  const VoigtParams truth{0.0, 0.48, 0.55, 1.0, 0.0};
  const auto fit = fit_voigt(synth_spectrum(truth, 401, 0.0, default_seed));
  const double el = std::abs(fit.params.lorentzian_fwhm / 0.48 - 1.0);
  const double eg = std::abs(fit.params.gaussian_fwhm / 0.55 - 1.0);
  report("8a", fit.converged && el <= 0.01 && eg <= 0.01,
         fmt("Voigt round trip (noiseless): GammaL = %.6f GHz (err %.1e), GammaG = %.6f GHz (err %.1e), both <= 1%%",
             fit.params.lorentzian_fwhm, el, fit.params.gaussian_fwhm, eg));

  const VoigtParams lor{0.0, 0.39, 0.0, 1.0, 0.0};
  const auto clean = fit_voigt(synth_spectrum(lor, 401, 0.0, default_seed));
  report("8b", clean.converged && clean.params.gaussian_fwhm <= 1e-4 * clean.params.lorentzian_fwhm,
         fmt("pure 0.39 GHz Lorentzian (noiseless): GammaG = %.2e GHz (<= 1e-4 GammaL), GammaL = %.6f GHz",
             clean.params.gaussian_fwhm, clean.params.lorentzian_fwhm));
  const auto noisy = fit_voigt(synth_spectrum(lor, 401, 0.02, default_seed));
  report("8c", noisy.converged && noisy.gaussian_zero_delta_chi2 <= 4.0,
         fmt("pure 0.39 GHz Lorentzian, 2%% noise: GammaG = %.3f +- %.3f GHz, profile delta chi2 for GammaG = 0 is "
             "%.2f (<= 4, consistent with zero at 2 sigma)", noisy.params.gaussian_fwhm, noisy.sigma.gaussian_fwhm,
             noisy.gaussian_zero_delta_chi2));
}

void hygiene() {
  struct Stats {
    double trace = 0.0, min_eig = 0.0, purity = 0.0;
  };
  std::vector<Stats> stats(acceptance_grid.size());
  const Stopwatch sw;
  parallel_for(acceptance_grid.size(), 0, [&](std::size_t i) {
    const auto& g = acceptance_grid[i];
    const auto sys = g.lossless ? SystemParams{} : paper_system();
    const auto tr = evolve(synthesize(g.pulse), sys);
    Stats s;
    for (const auto& r : tr.rho) {
      s.trace = std::max(s.trace, std::abs(r.trace().real() - 1.0));
      s.min_eig = std::min(s.min_eig, detail::min_eigenvalue(r));
      if (g.lossless) s.purity = std::max(s.purity, std::abs((r * r).trace().real() - 1.0));
    }
    stats[i] = s;
  });
  Stats worst;
  std::size_t lossless = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    worst.trace = std::max(worst.trace, stats[i].trace);
    worst.min_eig = std::min(worst.min_eig, stats[i].min_eig);
    worst.purity = std::max(worst.purity, stats[i].purity);
    lossless += acceptance_grid[i].lossless;
  }
  report("9a", worst.trace <= 1e-9 && worst.min_eig >= -1e-9 && worst.purity <= 1e-8,
         fmt("hygiene over %zu acceptance runs (%zu lossless): max trace error %.1e (<= 1e-9), min eigenvalue %.1e "
             "(>= -1e-9), max purity error %.1e (<= 1e-8); %.1f s",
             stats.size(), lossless, worst.trace, worst.min_eig, worst.purity, sw.seconds()));

  const auto sys = paper_system();
  for (const auto& [label, p] : {std::pair{"9b", sech(1.9, 32.0)}, std::pair{"9c", sech(1.0, 0.0)}}) {
    const auto f = synthesize(p);
    const double yield = photon_yield(evolve(f, sys), sys.radiative_rate);
    const auto stream = jump_trajectory(f, sys, 10000, default_seed);
    const double z = std::abs(stream.mean_photons() - yield) / stream.mean_photons_se();
    report(label, z <= 3.0,
           fmt("jump ensemble, 1e4 trajectories, %.1f pi at %+.0f ps^2: mean photons %.5f +- %.5f vs master equation "
               "%.5f (%.2f SE <= 3)", p.area_pi, p.gdd_ps2, stream.mean_photons(), stream.mean_photons_se(), yield,
               z));
  }
}

// -- Determinism through the command-line tool ----------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RAPSIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (e.path().filename() == "manifest.json") {
      auto m = ojson::parse(text);
      m.erase("created_utc");
      m["config"]["output"].erase("dir");
      text = m.dump();
    }
    out[e.path().filename().string()] = text;
  }
  return out;
}

void determinism() {
  const fs::path src = RAPSIM_SOURCE_DIR;
  const fs::path root = fs::path(RAPSIM_BINARY_DIR) / "acceptance_runs";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"rabi", "--paper-defaults"},
      {"rap", "--paper-defaults"},
      {"map", "--paper-defaults"},
      {"trace", "--paper-defaults"},
      {"dressed", "--paper-defaults"},
      {"gdd", "--config " + (src / "configs/stretcher_gdd.json").string()},
      {"hbt", "--paper-defaults"},
      {"hom", "--paper-defaults"},
      {"g2", "--input " + (src / "tests/data/g2_fixture.csv").string()},
      {"spectrum", "--config " + (src / "configs/lorentzian_spectrum.json").string()},
      {"hbt", "--paper-defaults --format json"},
  };
  std::size_t files = 0;
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [cmd, opts] = runs[i];
    std::map<std::string, std::string> got[2];
    for (int k = 0; k < 2; ++k) {
      const auto dir = root / (std::to_string(i) + "_" + cmd + "_" + std::to_string(k));
      fs::remove_all(dir);
      if (run_cli(cmd + " " + opts + " --seed 424242 --out " + dir.string()) != 0) {
        bad.push_back(cmd + " (exit code)");
        break;
      }
      got[k] = read_dir(dir);
    }
    if (got[0].empty() || got[0] != got[1]) bad.push_back(cmd);
    files += got[0].size();
  }
  std::string which;
  for (const auto& b : bad) which += " " + b;
  report("10", bad.empty(),
         fmt("determinism: %zu subcommand runs twice with the same config and seed, %zu files byte-identical "
             "(manifest timestamp excluded)%s%s", runs.size(), files, bad.empty() ? "" : "; differing:",
             which.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rapsim acceptance suite"};
  std::vector<std::string> expected;
  app.add_option("--expected-failures", expected, "Criteria ids known to fail (e.g. 7b)");
  CLI11_PARSE(app, argc, argv);

  const Stopwatch total;
  try {
    area_theorem();
    rabi_landmark();
    chirp_map();
    robustness();
    g2_statistics();
    hom_chain();
    gate_fidelity();
    voigt();
    hygiene();
    determinism();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }

  std::set<std::string> failed;
  for (const auto& o : outcomes)
    if (!o.pass) failed.insert(o.id);
  const std::set<std::string> want(expected.begin(), expected.end());
  std::printf("\n%zu criteria lines, %zu passed, %zu failed", outcomes.size(), outcomes.size() - failed.size(),
              failed.size());
  if (!failed.empty()) {
    std::printf(" (");
    bool first = true;
    for (const auto& f : failed) {
      std::printf("%s%s", first ? "" : ", ", f.c_str());
      first = false;
    }
    std::printf(")");
  }
  std::printf("; %.1f s total\n", total.seconds());
  if (failed != want) {
    std::printf("failing set differs from --expected-failures\n");
    return 1;
  }
  return 0;
}
