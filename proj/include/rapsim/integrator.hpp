#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension from Hairer,
// Norsett & Wanner. State types only need +, scalar * and an error norm.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "csv.hpp"
#include "errors.hpp"

namespace rapsim {

struct StepControl {
  double tol = 1e-8;        // per-step error bound (absolute and relative)
  double h_min = 1e-6;      // ps; smaller steps abort
  double h_max = 1.0;       // ps
  double h_init = 1e-2;     // ps
  std::size_t max_steps = 50'000'000;
};

/// Dense output over one accepted step [t, t + h].
template <class State>
struct DenseStep {
  double t = 0.0, h = 0.0;
  State r1, r2, r3, r4, r5;

  State operator()(double s) const {
    const double th = (s - t) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

/// Integrates y' = rhs(t, y) from t0 to t1. After every accepted step
/// `on_step(dense)` sees the interpolant and may return false to stop early.
/// `err_norm(dy, y_old, y_new, tol)` returns the scaled error (accept if <= 1).
template <class State, class Rhs, class ErrNorm, class OnStep>
State integrate_dopri5(Rhs&& rhs, State y, double t0, double t1, const StepControl& ctl,
                       ErrNorm&& err_norm, OnStep&& on_step) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  double t = t0;
  double h = std::min(ctl.h_init, t1 - t0);
  State k1 = rhs(t, y);
  double err_prev = 1e-4;
  std::size_t steps = 0;
  DenseStep<State> dense;

  while (t < t1) {
    if (++steps > ctl.max_steps) throw NumericalError("integrator: step budget exhausted");
    bool last = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      last = true;
    }
    const State k2 = rhs(t + c2 * h, State(y + h * (a21 * k1)));
    const State k3 = rhs(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
    const State k4 = rhs(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 = rhs(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 =
        rhs(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const State ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const State k7 = rhs(t + h, ynew);
    const State errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = err_norm(errv, y, ynew, ctl.tol);

    if (err <= 1.0) {
      dense.t = t;
      dense.h = h;
      dense.r1 = y;
      dense.r2 = ynew - y;
      dense.r3 = h * k1 - dense.r2;
      dense.r4 = dense.r2 - h * k7 - dense.r3;
      dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;
      if (!on_step(std::as_const(dense))) return y;
      // PI step-size control.
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = e;
      h = std::min(h * fac, ctl.h_max);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < ctl.h_min)
        throw NumericalError("integrator: step size underflow (h = " + csv::format(h) +
                             " ps) at t = " + csv::format(t) + " ps");
    }
  }
  return y;
}

}  // namespace rapsim
