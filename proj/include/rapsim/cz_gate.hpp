#pragma once

// Post-selected linear-optical controlled-phase gate (success 1/9) with
// partially distinguishable photons.
//
// Spatial modes: c0 c1 t0 t1 plus one vacuum mode per attenuated rail. A
// beam splitter of reflectivity 1/3 couples c1 and t1; c0 and t0 pass 1/3
// attenuators. Each photon also carries a two-level internal state; the
// target's internal state has overlap sqrt(M) with the control's. The gate
// acts on spatial modes only, so after post-selecting one photon in each
// qubit's rails the internal degrees of freedom are traced out.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>

#include "errors.hpp"

namespace rapsim {

namespace cz {
enum Mode : int { c0 = 0, c1 = 1, t0 = 2, t1 = 3, vac_c = 4, vac_t = 5 };
}  // namespace cz

using ModeUnitary = Eigen::Matrix<double, 6, 6>;

/// U[out][in] for the six spatial modes.
inline ModeUnitary cz_mode_unitary() {
  using namespace cz;
  const double r = std::sqrt(1.0 / 3.0), s = std::sqrt(2.0 / 3.0);
  ModeUnitary u = ModeUnitary::Zero();
  u(c1, c1) = r;
  u(t1, c1) = s;
  u(c1, t1) = -s;
  u(t1, t1) = r;
  for (auto [rail, vac] : {std::pair{c0, vac_c}, {t0, vac_t}}) {
    u(rail, rail) = r;
    u(vac, rail) = s;
    u(rail, vac) = -s;
    u(vac, vac) = r;
  }
  return u;
}

struct CzProcess {
  /// Kraus operators of the unnormalized post-selected map on |control target>,
  /// one per internal label pair of the (control-rail, target-rail) photons.
  std::array<Eigen::Matrix4cd, 4> kraus;
  double success_probability = 0.0;  // averaged over the logical basis
  double fidelity = 0.0;             // process fidelity against diag(1, 1, 1, -1)
};

/// Brute-force two-photon evolution over the 12 modes (6 spatial x 2 internal).
inline CzProcess cz_process(double overlap_m, const ModeUnitary& u = cz_mode_unitary()) {
  using namespace cz;
  detail::require(overlap_m >= 0.0 && overlap_m <= 1.0, "cz overlap M must lie in [0, 1]");
  using Photon = Eigen::Matrix<std::complex<double>, 12, 1>;  // index 2 * spatial + internal
  auto propagate = [&](const Photon& in) {
    Photon out = Photon::Zero();
    for (int m = 0; m < 6; ++m)
      for (int n = 0; n < 6; ++n)
        for (int s = 0; s < 2; ++s) out(2 * m + s) += u(m, n) * in(2 * n + s);
    return out;
  };
  CzProcess p;
  for (auto& k : p.kraus) k.setZero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Photon pc = Photon::Zero(), pt = Photon::Zero();
      pc(2 * (c0 + i)) = 1.0;
      pt(2 * (t0 + j)) = std::sqrt(overlap_m);
      pt(2 * (t0 + j) + 1) = std::sqrt(1.0 - overlap_m);
      const Photon oc = propagate(pc), ot = propagate(pt);
      // Fock amplitude of a^dag_a a^dag_b |0>, a != b: oc(a) ot(b) + oc(b) ot(a).
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          for (int sa = 0; sa < 2; ++sa)
            for (int sb = 0; sb < 2; ++sb) {
              const int a = 2 * (c0 + x) + sa, b = 2 * (t0 + y) + sb;
              p.kraus[2 * sa + sb](2 * x + y, 2 * i + j) = oc(a) * ot(b) + oc(b) * ot(a);
            }
    }
  }
  const Eigen::Matrix4cd ideal = Eigen::Vector4cd(1.0, 1.0, 1.0, -1.0).asDiagonal();
  double overlap = 0.0, norm = 0.0;
  for (const auto& k : p.kraus) {
    overlap += std::norm((ideal.adjoint() * k).trace());
    norm += k.squaredNorm();
  }
  p.success_probability = norm / 4.0;
  // Choi state (1/4) sum |K>><<K| normalised by its trace, against |CZ>>/2.
  p.fidelity = norm > 0.0 ? overlap / (4.0 * norm) : 0.0;
  return p;
}

inline double cz_process_fidelity(double overlap_m) { return cz_process(overlap_m).fidelity; }

}  // namespace rapsim
