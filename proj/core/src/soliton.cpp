#include "csol/soliton.hpp"

#include <cmath>

#include "csol/errors.hpp"
#include "csol/moments.hpp"

namespace csol {

namespace {

GValue g_eval_unchecked(const Decomposition& d, const Vec& w) {
  GValue g;
  g.gradient = Vec::Zero(d.dim());
  g.hessian = Mat::Zero(d.dim(), d.dim());
  MomentOptions opts;
  opts.shifted = true;
  for (const auto& p : d.summands) {
    MomentResult r = polytope_exp_moments(p, w, opts);
    g.value += r.log_shift + std::log(r.i0);
    g.gradient += r.barycenter();
    g.hessian += r.covariance();
  }
  g.hessian = 0.5 * (g.hessian + g.hessian.transpose());
  return g;
}

}  // namespace

GValue g_eval(const Decomposition& d, const Vec& w) {
  validate(d);
  if (w.size() != d.dim()) throw Error(ErrorCode::DimensionMismatch, "W length differs from decomposition dimension");
  return g_eval_unchecked(d, w);
}

SolitonSolution soliton_field(const Decomposition& d, const SolitonOptions& opts) {
  validate(d);
  const int m = d.dim();
  if (min_slack(d.target, Vec::Zero(m)) <= d.target.tolerance())
    throw Error(ErrorCode::OriginNotInterior, "origin is not strictly inside the target polytope");
  Vec w = opts.start ? *opts.start : Vec::Zero(m);
  if (w.size() != m) throw Error(ErrorCode::DimensionMismatch, "start length differs from decomposition dimension");

  SolitonSolution sol;
  GValue g = g_eval_unchecked(d, w);
  double step = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    double gn = g.gradient.norm();
    sol.trace.push_back({it, w, g.value, gn, step});
    if (gn < opts.tol) {
      sol.w = w;
      sol.residual = gn;
      sol.iterations = it;
      sol.g_value = g.value;
      return sol;
    }
    Eigen::LDLT<Mat> ldlt(g.hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw Error(ErrorCode::LineSearchStall, "Hessian of G is not positive definite");
    Vec dir = ldlt.solve(-g.gradient);
    double slope = g.gradient.dot(dir);
    double alpha = 1.0;
    for (;;) {
      Vec trial = w + alpha * dir;
      GValue gt = g_eval_unchecked(d, trial);
      if (std::isfinite(gt.value) && gt.value <= g.value + opts.armijo_c1 * alpha * slope) {
        w = trial;
        g = std::move(gt);
        break;
      }
      // Near the minimum G stops resolving decrease; accept a step that shrinks the gradient.
      if (std::isfinite(gt.value) && gt.gradient.norm() < 0.5 * gn && alpha == 1.0 &&
          std::abs(gt.value - g.value) <= 1e-13 * std::max(1.0, std::abs(g.value))) {
        w = trial;
        g = std::move(gt);
        break;
      }
      alpha *= opts.backtrack;
      if (alpha < opts.min_step) throw Error(ErrorCode::LineSearchStall, "backtracking failed to decrease G");
    }
    step = alpha;
  }
  throw Error(ErrorCode::MaxIterationsExceeded, "Newton iteration budget exhausted");
}

}  // namespace csol
