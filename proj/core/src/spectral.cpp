#include "csol/spectral.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

#include "csol/errors.hpp"

namespace csol {

namespace {

Vec second_difference(const Vec& f, double h) {
  const int n = static_cast<int>(f.size());
  Vec d2 = Vec::Zero(n);
  for (int i = 1; i + 1 < n; ++i) d2(i) = (f(i + 1) - 2.0 * f(i) + f(i - 1)) / (h * h);
  // Ends: geometric extrapolation keeps the exponential decay.
  d2(0) = d2(1) * d2(1) / d2(2);
  d2(n - 1) = d2(n - 2) * d2(n - 2) / d2(n - 3);
  return d2;
}

SturmLiouvilleProblem build(const Vec& x, const Vec& metric, const Vec& twist) {
  const int n = static_cast<int>(x.size());
  SturmLiouvilleProblem p;
  p.x = x;
  p.h = x(1) - x(0);
  p.metric = metric;
  if (!(metric.array() > 0.0).all() || !metric.allFinite())
    throw Error(ErrorCode::EigenSolveFailure, "metric density is not positive");
  double ref = twist(n / 2);
  p.rho = (twist.array() - ref).exp();
  Vec lw = (p.rho.array() * p.metric.array()).log();
  p.decay_left = (lw(1) - lw(0)) / p.h;
  p.decay_right = (lw(n - 2) - lw(n - 1)) / p.h;
  return p;
}

int sturm_count(const Vec& a, const Vec& b2, double x) {
  int count = 0;
  double q = a(0) - x;
  const double tiny = std::numeric_limits<double>::min() * 1e10;
  if (q < 0.0) ++count;
  for (Eigen::Index i = 1; i < a.size(); ++i) {
    if (q == 0.0) q = tiny;
    q = (a(i) - x) - b2(i - 1) / q;
    if (q < 0.0) ++count;
  }
  return count;
}

double bisect_eigenvalue(const Vec& a, const Vec& b2, int index, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(a, b2, mid) > index) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SturmLiouvilleProblem make_sturm_liouville(const Vec& x, const Vec& f) {
  if (x.size() != f.size() || x.size() < 5) throw Error(ErrorCode::EigenSolveFailure, "need at least five samples");
  const double h = x(1) - x(0);
  Vec m = second_difference(f, h);
  if (!(m.array() > 0.0).all()) throw Error(ErrorCode::EigenSolveFailure, "potential is not strictly convex");
  Vec twist = -m.array().log() - f.array();
  return build(x, m, twist);
}

SturmLiouvilleProblem make_sturm_liouville(const PotentialGrid& state, int alpha) {
  if (state.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "spectral problems are one-dimensional");
  if (alpha < 0 || alpha >= state.arity()) throw Error(ErrorCode::ArityMismatch, "summand index out of range");
  Grid grid(state.grid);
  Vec x(grid.size());
  for (int i = 0; i < grid.size(); ++i) x(i) = grid.coord(i);
  Vec fa = state.potential(alpha);
  Vec m = second_difference(fa, grid.spacing());
  if (!(m.array() > 0.0).all()) throw Error(ErrorCode::EigenSolveFailure, "potential is not strictly convex");
  Vec sum = Vec::Zero(grid.size());
  for (int b = 0; b < state.arity(); ++b) sum += state.potential(b);
  Vec twist = -m.array().log() - sum.array();
  return build(x, m, twist);
}

TridiagonalOperator assemble(const SturmLiouvilleProblem& p) {
  const int n = static_cast<int>(p.x.size());
  const double h = p.h;
  if (!(p.rho.array() > 0.0).all() || !(p.metric.array() > 0.0).all())
    throw Error(ErrorCode::EigenSolveFailure, "densities must be positive");
  if (!(p.decay_left > 0.0) || !(p.decay_right > 0.0))
    throw Error(ErrorCode::EigenSolveFailure, "weight does not decay beyond the box");
  TridiagonalOperator op;
  op.mass.resize(n);
  for (int i = 0; i < n; ++i) {
    double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    if (i == 0) w += 1.0 / p.decay_left;
    if (i == n - 1) w += 1.0 / p.decay_right;
    op.mass(i) = p.rho(i) * p.metric(i) * w;
  }
  Vec flux(n - 1);
  for (int i = 0; i + 1 < n; ++i) flux(i) = std::sqrt(p.rho(i) * p.rho(i + 1)) / h;

  // Rows of B^{-1} A, then the two-sided diagonal scaling.
  op.diag.resize(n);
  op.upper.resize(n - 1);
  op.lower.resize(n - 1);
  for (int i = 0; i < n; ++i) {
    double s = (i > 0 ? flux(i - 1) : 0.0) + (i + 1 < n ? flux(i) : 0.0);
    op.diag(i) = s / op.mass(i);
  }
  op.symmetry_defect = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    double up = -flux(i) / op.mass(i);      // (B^{-1}A)_{i,i+1}
    double dn = -flux(i) / op.mass(i + 1);  // (B^{-1}A)_{i+1,i}
    op.upper(i) = std::sqrt(op.mass(i) / op.mass(i + 1)) * up;
    op.lower(i) = std::sqrt(op.mass(i + 1) / op.mass(i)) * dn;
    op.symmetry_defect =
        std::max(op.symmetry_defect, std::abs(op.upper(i) - op.lower(i)) / std::abs(op.upper(i)));
  }
  return op;
}

EigenResult first_eigenvalue(const SturmLiouvilleProblem& p) {
  TridiagonalOperator op = assemble(p);
  const int n = static_cast<int>(op.diag.size());
  Vec off = 0.5 * (op.upper + op.lower);
  Vec b2 = off.array().square();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < n; ++i) {
    double r = (i > 0 ? std::abs(off(i - 1)) : 0.0) + (i + 1 < n ? std::abs(off(i)) : 0.0);
    lo = std::min(lo, op.diag(i) - r);
    hi = std::max(hi, op.diag(i) + r);
  }
  EigenResult res;
  res.symmetry_defect = op.symmetry_defect;
  res.lambda0 = bisect_eigenvalue(op.diag, b2, 0, lo, hi);
  res.lambda = bisect_eigenvalue(op.diag, b2, 1, lo, hi);
  if (!std::isfinite(res.lambda) || !(res.lambda > 0.0))
    throw Error(ErrorCode::EigenSolveFailure, "no positive eigenvalue on the mean-zero subspace");
  if (std::abs(res.lambda0) > 1e-8 * res.lambda)
    throw Error(ErrorCode::EigenSolveFailure, "constant mode is not an eigenvector of the assembled operator");

  Vec z0 = op.mass.array().sqrt();
  z0.normalize();
  Vec y = Vec::LinSpaced(n, -1.0, 1.0);
  const double shift = res.lambda * (1.0 + 1e-9);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, op.diag(i) - shift);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, off(i));
      trip.emplace_back(i + 1, i, off(i));
    }
  }
  Eigen::SparseMatrix<double> shifted(n, n);
  shifted.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::EigenSolveFailure, "shifted operator factorization failed");
  for (int it = 0; it < 4; ++it) {
    y -= z0.dot(y) * z0;
    y = lu.solve(y);
    if (!y.allFinite()) throw Error(ErrorCode::EigenSolveFailure, "inverse iteration diverged");
    y.normalize();
  }
  y -= z0.dot(y) * z0;
  y.normalize();
  Vec u = y.array() / op.mass.array().sqrt();
  if (u(n - 1) < 0.0) u = -u;
  res.vector = u;
  return res;
}

double mass_correlation(const SturmLiouvilleProblem& p, const Vec& a, const Vec& b) {
  const Vec w = assemble(p).mass;
  if (a.size() != w.size() || b.size() != w.size()) throw Error(ErrorCode::DimensionMismatch, "vectors differ from the grid size");
  const double total = w.sum();
  const Vec ac = a.array() - w.dot(a) / total;
  const Vec bc = b.array() - w.dot(b) / total;
  const double ab = (w.array() * ac.array() * bc.array()).sum();
  const double aa = (w.array() * ac.array().square()).sum();
  const double bb = (w.array() * bc.array().square()).sum();
  return ab / std::sqrt(aa * bb);
}

IdentityReport verify_holomorphic_identity(const PotentialGrid& state, double window, const std::optional<Vec>& constants) {
  if (state.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "the identity check is one-dimensional");
  if (state.t != 1.0) throw Error(ErrorCode::NotConverged, "state is not a t = 1 solution");
  const int k = state.arity();
  Grid grid(state.grid);
  const int n = grid.size();
  const double h = grid.spacing();
  std::vector<Vec> f(k), du(k), m(k);
  Vec sum_f = Vec::Zero(n);
  for (int a = 0; a < k; ++a) {
    f[a] = state.potential(a);
    sum_f += f[a];
    du[a] = Vec::Zero(n);
    m[a] = Vec::Zero(n);
    for (int i = 1; i + 1 < n; ++i) {
      du[a](i) = (f[a](i + 1) - f[a](i - 1)) / (2.0 * h);
      m[a](i) = (f[a](i + 1) - 2.0 * f[a](i) + f[a](i - 1)) / (h * h);
    }
    du[a](0) = (*state.refs)[a].gradient(0, 0);
    du[a](n - 1) = (*state.refs)[a].gradient(0, n - 1);
  }

  IdentityReport rep;
  rep.window = window > 0.0 ? window : grid.half_width();
  if (constants) {
    if (constants->size() != k) throw Error(ErrorCode::ArityMismatch, "expected one constant per summand");
    rep.constants = *constants;
  } else {
    // Mean-zero normalization against e^{-sum f}, split equally.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      double w = grid.trapezoid_weight(i) * std::exp(-(sum_f(i) - sum_f(n / 2)));
      double s = 0.0;
      for (int a = 0; a < k; ++a) s += du[a](i);
      num += w * s;
      den += w;
    }
    rep.constants = Vec::Constant(k, num / den / k);
  }

  std::vector<Vec> u(k);
  Vec usum = Vec::Zero(n);
  for (int a = 0; a < k; ++a) {
    u[a] = du[a].array() - rep.constants(a);
    usum += u[a];
  }
  rep.residual.assign(k, Vec::Zero(n));
  rep.sup = Vec::Zero(k);
  rep.sup_window = Vec::Zero(k);
  for (int a = 0; a < k; ++a) {
    Vec twist = Vec::Zero(n);
    for (int i = 1; i + 1 < n; ++i) {
      if (!(m[a](i) > 0.0)) throw Error(ErrorCode::NotConverged, "potential is not convex");
      twist(i) = -std::log(m[a](i)) - sum_f(i);
    }
    const double ref = twist(n / 2);
    for (int i = 2; i + 2 < n; ++i) {
      double rl = std::exp(0.5 * (twist(i - 1) + twist(i)) - ref);
      double rr = std::exp(0.5 * (twist(i) + twist(i + 1)) - ref);
      double ri = std::exp(twist(i) - ref);
      double lap = (rr * (u[a](i + 1) - u[a](i)) - rl * (u[a](i) - u[a](i - 1))) / (h * h * ri * m[a](i));
      double r = lap + usum(i);
      rep.residual[a](i) = r;
      rep.sup(a) = std::max(rep.sup(a), std::abs(r));
      if (std::abs(grid.coord(i)) <= rep.window + 1e-12) rep.sup_window(a) = std::max(rep.sup_window(a), std::abs(r));
    }
  }
  return rep;
}

}  // namespace csol
