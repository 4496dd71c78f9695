#pragma once

// Levenberg-Marquardt for small dense problems with Marquardt's diagonal
// scaling of the damping term.

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace rapsim {

struct LmOptions {
  int max_iterations = 200;
  double parameter_tol = 1e-8;  // relative step size that counts as converged
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  // Optional per-parameter bounds; trial points are projected onto them.
  // Equal bounds pin a parameter.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;  // at params
  double chi2 = 0.0;         // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Fills the residual vector r(p) and, when `jac` is non-null, dr/dp.
using LmProblem = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

inline LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd p, const LmOptions& opt = {}) {
  LmResult res;
  auto project = [&](Eigen::VectorXd& x) {
    if (opt.lower.size() == x.size()) x = x.cwiseMax(opt.lower);
    if (opt.upper.size() == x.size()) x = x.cwiseMin(opt.upper);
  };
  project(p);
  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd j;
  problem(p, r, &j);
  double chi2 = r.squaredNorm();
  double lambda = opt.lambda0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index i = 0; i < a.rows(); ++i) damped(i, i) += lambda * std::max(a(i, i), 1e-300);
      step = damped.ldlt().solve(-g);
      Eigen::VectorXd p_try = p + step;
      project(p_try);
      step = p_try - p;
      problem(p_try, r_try, nullptr);
      const double chi2_try = r_try.squaredNorm();
      if (std::isfinite(chi2_try) && chi2_try <= chi2) {
        p = p_try;
        chi2 = chi2_try;
        lambda = std::max(lambda * opt.lambda_down, 1e-12);
        accepted = true;
        break;
      }
      lambda *= opt.lambda_up;
    }
    if (!accepted) {
      // No downhill step at any damping: p is a minimum to working precision.
      res.converged = true;
      break;
    }
    problem(p, r, &j);
    bool small = true;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (std::abs(step(i)) > opt.parameter_tol * (std::abs(p(i)) + opt.parameter_tol)) small = false;
    if (small) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.params = std::move(p);
  res.residuals = std::move(r);
  res.jacobian = std::move(j);
  res.chi2 = chi2;
  res.iterations = it;
  return res;
}

}  // namespace rapsim
