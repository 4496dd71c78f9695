#pragma once

// Photon-correlation measurements: HBT and HOM coincidence histograms from a
// per-pulse photon-number source model, g2(0) and visibility estimators.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "jumps.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace rapsim {

// -- Histogram -----------------------------------------------------------------

/// Coincidence counts on bins centred at k * bin_width, k = -half_bins..half_bins.
struct CoincidenceHistogram {
  double bin_width_ns = 0.1;
  double rep_period_ns = 1e3 / 82.0;
  std::vector<double> delays_ns;
  std::vector<std::uint64_t> counts;

  static CoincidenceHistogram make(double bin_width_ns, double half_range_ns, double rep_period_ns) {
    detail::require(bin_width_ns > 0.0, "histogram bin width must be positive");
    detail::require(half_range_ns >= 0.0, "histogram range must be non-negative");
    detail::require(rep_period_ns > 0.0, "source.rep_period_ns must be positive");
    CoincidenceHistogram h;
    h.bin_width_ns = bin_width_ns;
    h.rep_period_ns = rep_period_ns;
    const auto half = static_cast<long>(std::ceil(half_range_ns / bin_width_ns - 1e-9));
    for (long k = -half; k <= half; ++k) h.delays_ns.push_back(static_cast<double>(k) * bin_width_ns);
    h.counts.assign(h.delays_ns.size(), 0);
    return h;
  }

  std::size_t size() const { return counts.size(); }
  long half_bins() const { return static_cast<long>(size() / 2); }
  double max_delay() const { return delays_ns.empty() ? 0.0 : delays_ns.back(); }

  void add(double delay_ns, std::uint64_t n = 1) {
    const long k = std::lround(delay_ns / bin_width_ns);
    if (k < -half_bins() || k > half_bins()) return;
    counts[static_cast<std::size_t>(k + half_bins())] += n;
  }

  /// Counts within [center - window/2, center + window/2]; edge bins are
  /// weighted by their overlap with the window.
  double integrate(double center_ns, double window_ns) const {
    const double lo = center_ns - 0.5 * window_ns, hi = center_ns + 0.5 * window_ns;
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double bin_lo = delays_ns[i] - 0.5 * bin_width_ns, bin_hi = delays_ns[i] + 0.5 * bin_width_ns;
      if (lo <= bin_lo && bin_hi <= hi) {
        s += static_cast<double>(counts[i]);  // fully inside: weight exactly 1
        continue;
      }
      const double a = std::max(lo, bin_lo), b = std::min(hi, bin_hi);
      if (b > a) s += static_cast<double>(counts[i]) * std::min(1.0, (b - a) / bin_width_ns);
    }
    return s;
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

  void validate() const {
    detail::require(bin_width_ns > 0.0, "histogram bin_width must be positive");
    detail::require(rep_period_ns > 0.0, "histogram rep_period must be positive");
    detail::require(delays_ns.size() == counts.size() && size() % 2 == 1,
                    "histogram needs an odd number of bins");
    for (std::size_t i = 0; i < size(); ++i) {
      const double expect = (static_cast<double>(i) - static_cast<double>(half_bins())) * bin_width_ns;
      detail::require(std::abs(delays_ns[i] - expect) <= 1e-6 * bin_width_ns,
                      "histogram bins must be uniform and symmetric about 0");
    }
  }

  bool same_binning(const CoincidenceHistogram& o) const {
    return bin_width_ns == o.bin_width_ns && delays_ns == o.delays_ns;
  }
};

inline void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& h) {
  os << "# bin_width=" << csv::format(h.bin_width_ns) << '\n'
     << "# rep_period=" << csv::format(h.rep_period_ns) << '\n'
     << "delay_ns,counts\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    os << csv::format(h.delays_ns[i]) << ',' << h.counts[i] << '\n';
}

inline CoincidenceHistogram read_histogram_csv(std::istream& in, const std::string& source = "histogram") {
  const auto t = csv::read_table(in, source);
  detail::require(t.header == std::vector<std::string>{"delay_ns", "counts"},
                  source + ": expected columns delay_ns,counts");
  CoincidenceHistogram h;
  const auto bw = csv::comment_value(t, "bin_width");
  const auto rep = csv::comment_value(t, "rep_period");
  detail::require(!bw.empty() && !rep.empty(), source + ": missing '# bin_width=' or '# rep_period=' line");
  h.bin_width_ns = csv::parse_double(bw, source + ": bin_width");
  h.rep_period_ns = csv::parse_double(rep, source + ": rep_period");
  for (const auto& r : t.rows) {
    detail::require(r[1] >= 0.0 && r[1] == std::floor(r[1]), source + ": counts must be non-negative integers");
    h.delays_ns.push_back(r[0]);
    h.counts.push_back(static_cast<std::uint64_t>(r[1]));
  }
  h.validate();
  return h;
}

// -- Source model ----------------------------------------------------------------

struct SourceModel {
  double p0 = 0.0, p1 = 1.0, p2 = 0.0;  // photons per pulse
  double overlap = 1.0;                  // wavepacket overlap M
  double efficiency = 1.0;               // end-to-end detection efficiency
  double rep_period_ns = 1e3 / 82.0;
  double lifetime_ns = 1.0 / (2.0 * units::pi * 0.39);  // 1 / Gamma, Gamma = 2 pi 0.39 GHz

  void validate() const {
    for (auto [v, name] : {std::pair{p0, "source.p0"}, {p1, "source.p1"}, {p2, "source.p2"},
                           {overlap, "source.overlap"}, {efficiency, "source.efficiency"}})
      detail::require(v >= 0.0 && v <= 1.0, std::string(name) + " must lie in [0, 1]");
    detail::require(std::abs(p0 + p1 + p2 - 1.0) <= 1e-9, "source.p0 + p1 + p2 must equal 1");
    detail::require(rep_period_ns > 0.0, "source.rep_period_ns must be positive");
    detail::require(lifetime_ns > 0.0, "source.lifetime_ns must be positive");
  }
};

/// Pulsed g2(0) of the photon-number model: 2 p2 / (p1 + 2 p2)^2.
inline double analytic_g2(const SourceModel& s) {
  const double mean = s.p1 + 2.0 * s.p2;
  return mean > 0.0 ? 2.0 * s.p2 / (mean * mean) : 0.0;
}

/// p2 with p0 = 0 such that analytic_g2 = g2, i.e. the small root of
/// g2 (1 + p2)^2 = 2 p2.
inline double two_photon_probability_for_g2(double g2) {
  detail::require(g2 >= 0.0 && g2 <= 0.5, "target g2 must lie in [0, 0.5]");
  return g2 / ((1.0 - g2) + std::sqrt(1.0 - 2.0 * g2));
}

/// Photon-number probabilities from jump trajectories (>= 2 photons counted as 2).
inline SourceModel source_from_stream(const PhotonStream& s, double lifetime_ns) {
  const auto d = s.number_distribution();
  SourceModel m;
  m.p0 = d[0];
  m.p1 = d[1];
  m.p2 = d[2];
  m.rep_period_ns = s.rep_period_ns;
  m.lifetime_ns = lifetime_ns;
  return m;
}

// -- Monte Carlo -------------------------------------------------------------------

struct Click {
  double t_ns;
  int detector;  // 0 or 1
};

namespace detail {

inline int draw_photon_number(const SourceModel& s, std::mt19937_64& g) {
  const double u = uniform01(g);
  return u < s.p0 ? 0 : (u < s.p0 + s.p1 ? 1 : 2);
}

// Pairs clicks on detector 1 with clicks on detector 0 within +-range;
// delay = t(1) - t(0). Clicks may arrive out of order by up to `guard`.
class CoincidenceAccumulator {
 public:
  CoincidenceAccumulator(CoincidenceHistogram& h, double range_ns, double guard_ns)
      : h_(h), range_(range_ns), guard_(guard_ns) {}

  void push(const Click& c) {
    latest_ = std::max(latest_, c.t_ns);
    while (!recent_.empty() && recent_.front().t_ns < latest_ - range_ - guard_) recent_.pop_front();
    for (const auto& r : recent_) {
      if (r.detector == c.detector) continue;
      const double d = c.detector == 1 ? c.t_ns - r.t_ns : r.t_ns - c.t_ns;
      if (std::abs(d) <= range_) h_.add(d);
    }
    recent_.push_back(c);
  }

 private:
  CoincidenceHistogram& h_;
  double range_, guard_;
  double latest_ = -std::numeric_limits<double>::infinity();
  std::deque<Click> recent_;
};

// Generates clicks block by block (each from its own RNG stream, possibly in
// parallel) and feeds them in time order to the accumulator.
template <class BlockGen>
void accumulate_blocks(std::size_t n_blocks, unsigned threads, CoincidenceAccumulator& acc,
                       BlockGen&& gen) {
  const unsigned workers = resolve_threads(threads, n_blocks);
  const std::size_t chunk = std::max<std::size_t>(1, 4 * workers);
  std::vector<std::vector<Click>> buf;
  for (std::size_t b0 = 0; b0 < n_blocks; b0 += chunk) {
    const std::size_t nb = std::min(chunk, n_blocks - b0);
    buf.assign(nb, {});
    parallel_for(nb, workers, [&](std::size_t i) {
      buf[i] = gen(b0 + i);
      std::sort(buf[i].begin(), buf[i].end(),
                [](const Click& a, const Click& b) { return a.t_ns < b.t_ns; });
    });
    for (const auto& blk : buf)
      for (const auto& c : blk) acc.push(c);
  }
}

}  // namespace detail

struct CorrelationOptions {
  double bin_width_ns = 0.1;
  double half_range_periods = 4.0;  // histogram spans +-this many repetition periods
  std::size_t block_pulses = 4096;  // pulses per RNG stream
  unsigned threads = 0;
};

/// Hanbury Brown-Twiss: each pulse emits k photons (k from p0/p1/p2) after
/// exponential delays; each photon is detected with probability efficiency
/// and sent to either detector with probability 1/2.
inline CoincidenceHistogram simulate_hbt(const SourceModel& src, std::size_t n_pulses,
                                         std::uint64_t seed, const CorrelationOptions& opt = {}) {
  src.validate();
  detail::require(n_pulses >= 1000, "simulate_hbt: n_pulses must be >= 1000");
  detail::require(opt.block_pulses >= 1, "simulate_hbt: block size must be >= 1");
  const double range = opt.half_range_periods * src.rep_period_ns;
  auto h = CoincidenceHistogram::make(opt.bin_width_ns, range, src.rep_period_ns);
  detail::CoincidenceAccumulator acc(h, range, src.rep_period_ns);
  const std::size_t n_blocks = (n_pulses + opt.block_pulses - 1) / opt.block_pulses;
  detail::accumulate_blocks(n_blocks, opt.threads, acc, [&](std::size_t b) {
    auto g = make_stream(seed, b);
    std::vector<Click> out;
    const std::size_t first = b * opt.block_pulses;
    const std::size_t last = std::min(n_pulses, first + opt.block_pulses);
    for (std::size_t k = first; k < last; ++k) {
      const int n = detail::draw_photon_number(src, g);
      for (int j = 0; j < n; ++j) {
        const double t = static_cast<double>(k) * src.rep_period_ns + exponential(g, src.lifetime_ns);
        const bool detected = uniform01(g) < src.efficiency;
        const int det = uniform01(g) < 0.5 ? 0 : 1;
        if (detected) out.push_back({t, det});
      }
    }
    return out;
  });
  return h;
}

enum class Polarization { parallel, cross };

inline std::string to_string(Polarization p) { return p == Polarization::parallel ? "parallel" : "cross"; }

struct HomGeometry {
  double pair_delay_ns = 4.0;   // delay between the two pulses of a pair
  double mz_delay_ns = 4.0;     // long-arm excess delay of the analysing interferometer
  double mz_visibility = 1.0;   // first-order visibility xi of the interferometer

  void validate() const {
    detail::require(pair_delay_ns > 0.0, "hom.pair_delay_ns must be positive");
    detail::require(mz_delay_ns > 0.0, "hom.mz_delay_ns must be positive");
    detail::require(mz_visibility >= 0.0 && mz_visibility <= 1.0, "hom.mz_visibility must lie in [0, 1]");
  }
};

/// Two-photon interference in the unbalanced Mach-Zehnder. Every period emits
/// a pulse pair; each photon takes the short or long arm with probability 1/2
/// and leaves the output splitter on either port. When both pulses emitted
/// exactly one photon and the early one took the long arm while the late one
/// took the short arm (pair delay = MZ delay), the two meet at the output
/// splitter and leave on different ports with probability (1 - M_eff)/2,
/// M_eff = M xi^2 for parallel and 0 for cross polarization. All other
/// photons route independently.
inline CoincidenceHistogram simulate_hom(const SourceModel& src, Polarization pol,
                                         const HomGeometry& geom, std::size_t n_pulses,
                                         std::uint64_t seed, const CorrelationOptions& opt = {}) {
  src.validate();
  geom.validate();
  detail::require(n_pulses >= 1000, "simulate_hom: n_pulses must be >= 1000");
  detail::require(opt.block_pulses >= 1, "simulate_hom: block size must be >= 1");
  detail::require(opt.half_range_periods > 0.0, "simulate_hom: histogram range must be positive");
  const bool interfere = std::abs(geom.pair_delay_ns - geom.mz_delay_ns) < 1e-12;
  const double m_eff = pol == Polarization::parallel
                           ? src.overlap * geom.mz_visibility * geom.mz_visibility
                           : 0.0;
  const double range = opt.half_range_periods * src.rep_period_ns;
  auto h = CoincidenceHistogram::make(opt.bin_width_ns, range, src.rep_period_ns);
  detail::CoincidenceAccumulator acc(h, range, src.rep_period_ns);
  const std::size_t n_blocks = (n_pulses + opt.block_pulses - 1) / opt.block_pulses;
  detail::accumulate_blocks(n_blocks, opt.threads, acc, [&](std::size_t b) {
    auto g = make_stream(seed, b);
    std::vector<Click> out;
    auto detect = [&](double t, int port) {
      if (uniform01(g) < src.efficiency) out.push_back({t, port});
    };
    const std::size_t first = b * opt.block_pulses;
    const std::size_t last = std::min(n_pulses, first + opt.block_pulses);
    for (std::size_t k = first; k < last; ++k) {
      const double t0 = static_cast<double>(k) * src.rep_period_ns;
      const int na = detail::draw_photon_number(src, g);
      const int nb = detail::draw_photon_number(src, g);
      // emission time, arm (0 short, 1 long)
      std::array<std::pair<double, int>, 2> a{}, c{};
      for (int j = 0; j < na; ++j) a[j] = {t0 + exponential(g, src.lifetime_ns), uniform01(g) < 0.5 ? 0 : 1};
      for (int j = 0; j < nb; ++j)
        c[j] = {t0 + geom.pair_delay_ns + exponential(g, src.lifetime_ns), uniform01(g) < 0.5 ? 0 : 1};
      const auto arrival = [&](const std::pair<double, int>& p) { return p.first + p.second * geom.mz_delay_ns; };
      if (interfere && na == 1 && nb == 1 && a[0].second == 1 && c[0].second == 0) {
        const bool split = uniform01(g) < 0.5 * (1.0 - m_eff);
        const int port = uniform01(g) < 0.5 ? 0 : 1;
        detect(arrival(a[0]), port);
        detect(arrival(c[0]), split ? 1 - port : port);
        continue;
      }
      for (int j = 0; j < na; ++j) detect(arrival(a[j]), uniform01(g) < 0.5 ? 0 : 1);
      for (int j = 0; j < nb; ++j) detect(arrival(c[j]), uniform01(g) < 0.5 ? 0 : 1);
    }
    return out;
  });
  return h;
}

/// Ideal HOM cluster areas at delays {-2d, -d, 0, d, 2d} for mz delay d,
/// from enumerating the four arm choices and two output ports of a photon
/// pair: {1, 2, 2(1 - M_eff), 2, 1} / 16 per pulse pair.
inline std::array<double, 5> hom_peak_ratios(double m_eff) {
  return {1.0, 2.0, 2.0 * (1.0 - m_eff), 2.0, 1.0};
}

// -- Estimators ----------------------------------------------------------------

struct G2Result {
  double g2 = 0.0;
  double sigma = 0.0;
  double window_ns = 3.2;
  int n_side_peaks = 6;
  double zero_peak = 0.0;
  double side_peak_mean = 0.0;
};

/// g2(0) = N0 / mean(S_i): N0 integrates the zero-delay peak over +-window/2,
/// S_i the n_side nearest side peaks (order -1, +1, -2, +2, ...).
/// sigma = g2 sqrt(1/N0 + 1/sum S_i) from Poisson counts; for N0 = 0,
/// g2 = 0 and sigma = 1/mean(S_i).
inline G2Result estimate_g2(const CoincidenceHistogram& h, double window_ns = 3.2, int n_side = 6) {
  h.validate();
  detail::require(window_ns > 0.0, "g2.window_ns must be positive");
  detail::require(window_ns < h.rep_period_ns, "g2.window_ns overlaps adjacent peaks (must be < rep period " +
                                                   csv::format(h.rep_period_ns) + " ns)");
  detail::require(n_side >= 1, "g2.n_side_peaks must be >= 1");
  const int reach = (n_side + 1) / 2;
  detail::require(reach * h.rep_period_ns + 0.5 * window_ns <= h.max_delay() + 0.5 * h.bin_width_ns,
                  "histogram spans fewer than the requested side peaks");
  G2Result r;
  r.window_ns = window_ns;
  r.n_side_peaks = n_side;
  r.zero_peak = h.integrate(0.0, window_ns);
  double sum = 0.0;
  for (int i = 0; i < n_side; ++i) {
    const int k = i / 2 + 1;
    sum += h.integrate((i % 2 == 0 ? -k : k) * h.rep_period_ns, window_ns);
  }
  detail::require(sum > 0.0, "estimate_g2: side peaks are empty");
  r.side_peak_mean = sum / n_side;
  r.g2 = r.zero_peak / r.side_peak_mean;
  r.sigma = r.zero_peak > 0.0 ? r.g2 * std::sqrt(1.0 / r.zero_peak + 1.0 / sum) : 1.0 / r.side_peak_mean;
  return r;
}

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// V = 1 - (A_par(0)/N_par) / (A_cross(0)/N_cross), with N the summed areas of
/// the outer peaks at +-outer_delay. Poisson sigma.
inline Estimate hom_raw_visibility(const CoincidenceHistogram& par, const CoincidenceHistogram& cross,
                                   double window_ns = 3.2, double outer_delay_ns = 8.0) {
  par.validate();
  cross.validate();
  detail::require(par.same_binning(cross), "hom_raw_visibility: histograms differ in binning");
  detail::require(window_ns > 0.0, "hom.window_ns must be positive");
  detail::require(outer_delay_ns + 0.5 * window_ns <= par.max_delay() + 0.5 * par.bin_width_ns,
                  "hom_raw_visibility: histogram does not reach the outer peaks");
  const double a_par = par.integrate(0.0, window_ns);
  const double a_cross = cross.integrate(0.0, window_ns);
  const double n_par = par.integrate(-outer_delay_ns, window_ns) + par.integrate(outer_delay_ns, window_ns);
  const double n_cross = cross.integrate(-outer_delay_ns, window_ns) + cross.integrate(outer_delay_ns, window_ns);
  detail::require(a_cross > 0.0, "hom_raw_visibility: cross-polarized zero-delay area is zero");
  detail::require(n_par > 0.0 && n_cross > 0.0, "hom_raw_visibility: outer normalization peaks are empty");
  const double ratio = (a_par / n_par) / (a_cross / n_cross);
  const double rel = 1.0 / n_par + 1.0 / a_cross + 1.0 / n_cross;
  const double sigma = a_par > 0.0 ? ratio * std::sqrt(1.0 / a_par + rel) : (1.0 / n_par) / (a_cross / n_cross);
  return {1.0 - ratio, sigma};
}

/// (v_raw + 2 g2) / xi^2 with first-order propagation of the input sigmas.
inline Estimate correct_visibility(Estimate v_raw, Estimate g2, Estimate xi) {
  detail::require(xi.value > 0.0 && xi.value <= 1.0, "hom.mz_visibility must lie in (0, 1]");
  detail::require(g2.value >= 0.0, "g2 must be non-negative");
  const double x2 = xi.value * xi.value;
  const double v = (v_raw.value + 2.0 * g2.value) / x2;
  const double dxi = -2.0 * v / xi.value;
  const double s = std::sqrt(std::pow(v_raw.sigma / x2, 2) + std::pow(2.0 * g2.sigma / x2, 2) +
                             std::pow(dxi * xi.sigma, 2));
  return {v, s};
}

inline double correct_visibility(double v_raw, double g2, double xi) {
  return correct_visibility(Estimate{v_raw, 0.0}, Estimate{g2, 0.0}, Estimate{xi, 0.0}).value;
}

struct HOMResult {
  Estimate v_raw;
  Estimate v_corrected;
  double window_ns = 3.2;
  Estimate g2;
  double mz_visibility = 1.0;
};

// -- JSON records --------------------------------------------------------------

inline nlohmann::ordered_json to_json(const G2Result& r) {
  return {{"g2", r.g2}, {"sigma", r.sigma}, {"window_ns", r.window_ns},
          {"n_side_peaks", r.n_side_peaks}, {"zero_peak_counts", r.zero_peak},
          {"side_peak_mean", r.side_peak_mean}};
}

inline nlohmann::ordered_json to_json(const HOMResult& r) {
  return {{"v_raw", r.v_raw.value},
          {"v_raw_sigma", r.v_raw.sigma},
          {"v_corrected", r.v_corrected.value},
          {"v_corrected_sigma", r.v_corrected.sigma},
          {"window_ns", r.window_ns},
          {"g2", r.g2.value},
          {"g2_sigma", r.g2.sigma},
          {"mz_visibility", r.mz_visibility}};
}

}  // namespace rapsim
