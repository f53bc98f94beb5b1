#include "csol/guillemin.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "csol/errors.hpp"
#include "csol/parallel.hpp"

namespace csol {

namespace {

struct Facets {
  Mat normals;  // rows
  Vec offsets;
  Vec weights;  // u = sum w_i l_i log l_i
};

Facets facets_of(const Polytope& p) {
  Facets f;
  const auto& hs = p.halfspaces();
  f.normals.resize(hs.size(), p.dim());
  f.offsets.resize(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    f.normals.row(i) = hs[i].normal.transpose();
    f.offsets(i) = hs[i].offset;
  }
  f.weights = Vec::Constant(hs.size(), 0.5);
  return f;
}

double symplectic_potential(const Facets& f, const Vec& l) {
  double u = 0.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) u += f.weights(i) * l(i) * std::log(l(i));
  return u;
}

LegendrePoint solve_dual(const Facets& f, const Vec& x, Vec p) {
  const int m = static_cast<int>(x.size());
  LegendrePoint out;
  auto objective = [&](const Vec& q, Vec& l) {
    l = f.normals * q + f.offsets;
    if ((l.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    return symplectic_potential(f, l) - x.dot(q);
  };
  Vec l;
  double psi = objective(p, l);
  if (!std::isfinite(psi)) throw Error(ErrorCode::DegenerateInput, "Legendre start point is outside the polytope");
  Mat hess(m, m);
  for (int it = 0; it < 400; ++it) {
    Vec g = -x;
    hess.setZero();
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      Vec n = f.normals.row(i).transpose();
      g += f.weights(i) * (std::log(l(i)) + 1.0) * n;
      hess += (f.weights(i) / l(i)) * n * n.transpose();
    }
    Eigen::LDLT<Mat> ldlt(hess);
    Vec d = ldlt.solve(-g);
    double decrement = -g.dot(d);
    out.iterations = it + 1;
    if (decrement < 1e-30 || d.norm() <= 1e-16 * (1.0 + p.norm())) break;
    // Stay strictly inside: at most 99% of the distance to the nearest facet.
    Vec ld = f.normals * d;
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < l.size(); ++i)
      if (ld(i) < 0.0) alpha = std::min(alpha, -0.99 * l(i) / ld(i));
    Vec l_new;
    double psi_new = objective(p + alpha * d, l_new);
    int halvings = 0;
    while (!(psi_new <= psi + 1e-4 * alpha * g.dot(d) + 4e-16 * std::abs(psi)) && halvings < 60) {
      alpha *= 0.5;
      psi_new = objective(p + alpha * d, l_new);
      ++halvings;
    }
    if (halvings == 60) break;
    p += alpha * d;
    l = l_new;
    psi = psi_new;
  }
  l = f.normals * p + f.offsets;
  hess.setZero();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    Vec n = f.normals.row(i).transpose();
    hess += (f.weights(i) / l(i)) * n * n.transpose();
  }
  out.p = p;
  out.value = x.dot(p) - symplectic_potential(f, l);
  out.hessian = hess.inverse();
  return out;
}

}  // namespace

Mat GuilleminReference::hessian_at(int node) const {
  int m = polytope.dim();
  return Eigen::Map<const Mat>(hessian.col(node).data(), m, m);
}

LegendrePoint guillemin_dual(const Polytope& p, const Vec& x, const Vec& start) {
  if (x.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "point length differs from polytope dimension");
  return solve_dual(facets_of(p), x, start);
}

GuilleminReference guillemin_reference(const Polytope& p, const GridSpec& spec, const GuilleminOptions& opts) {
  Grid grid(spec);
  if (p.dim() != spec.dim) throw Error(ErrorCode::DimensionMismatch, "grid dimension differs from polytope dimension");
  const int m = p.dim();
  const int nn = grid.size();
  Facets f = facets_of(p);
  if (opts.facet_weights.size() > 0) {
    if (opts.facet_weights.size() != f.weights.size() || !(opts.facet_weights.array() > 0.0).all())
      throw Error(ErrorCode::DegenerateInput, "expected one positive weight per facet");
    f.weights = opts.facet_weights;
  }
  GuilleminReference ref;
  ref.polytope = p;
  ref.grid = spec;
  ref.h.resize(nn);
  ref.gradient.resize(m, nn);
  ref.hessian.resize(m * m, nn);

  // Each chunk walks its nodes in order, warm-starting from the previous node.
  parallel_chunks(nn, 256, [&](std::size_t b, std::size_t e) {
    Vec start = p.vertex_mean();
    for (std::size_t i = b; i < e; ++i) {
      LegendrePoint lp = solve_dual(f, grid.coords(static_cast<int>(i)), start);
      ref.h(i) = lp.value;
      ref.gradient.col(i) = lp.p;
      ref.hessian.col(i) = Eigen::Map<const Vec>(lp.hessian.data(), m * m);
      start = lp.p;
    }
  });

  // Discrete convexity up to rounding in the second differences.
  const double hh = grid.spacing();
  const double round = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, ref.h.cwiseAbs().maxCoeff()) / (hh * hh);
  for (int i = 0; i < nn; ++i) {
    if (grid.kind(i) != NodeKind::Interior) continue;
    Mat d2(m, m);
    for (int a = 0; a < m; ++a) {
      d2(a, a) = (ref.h(grid.neighbor(i, a, 1)) - 2.0 * ref.h(i) + ref.h(grid.neighbor(i, a, -1))) / (hh * hh);
    }
    if (m == 2) {
      int pp = grid.neighbor(grid.neighbor(i, 0, 1), 1, 1), pm = grid.neighbor(grid.neighbor(i, 0, 1), 1, -1);
      int mp = grid.neighbor(grid.neighbor(i, 0, -1), 1, 1), mm = grid.neighbor(grid.neighbor(i, 0, -1), 1, -1);
      d2(0, 1) = d2(1, 0) = (ref.h(pp) - ref.h(pm) - ref.h(mp) + ref.h(mm)) / (4.0 * hh * hh);
    }
    bool ok = true;
    for (int a = 0; a < m; ++a) ok = ok && d2(a, a) > -round;
    if (m == 2) ok = ok && d2.determinant() > -round * (std::abs(d2(0, 0)) + std::abs(d2(1, 1)) + round);
    if (!ok) throw Error(ErrorCode::GridTooCoarse, "reference potential is not discretely convex on this grid");
  }

  ref.max_support_gap = 0.0;
  for (int i = 0; i < nn; ++i)
    ref.max_support_gap = std::max(ref.max_support_gap, std::abs(ref.h(i) - support(p, grid.coords(i))));

  // Box adequacy is judged on the standard potential whatever the facet weights.
  Mat boundary_gradient;
  std::vector<int> boundary;
  for (int i = 0; i < nn; ++i)
    if (grid.kind(i) != NodeKind::Interior) boundary.push_back(i);
  if (opts.facet_weights.size() > 0) {
    Facets standard = facets_of(p);
    boundary_gradient.resize(m, boundary.size());
    Vec start = p.vertex_mean();
    for (std::size_t j = 0; j < boundary.size(); ++j) {
      start = solve_dual(standard, grid.coords(boundary[j]), start).p;
      boundary_gradient.col(j) = start;
    }
  } else {
    boundary_gradient.resize(m, boundary.size());
    for (std::size_t j = 0; j < boundary.size(); ++j) boundary_gradient.col(j) = ref.gradient.col(boundary[j]);
  }
  ref.max_facet_gap = 0.0;
  for (Eigen::Index fi = 0; fi < f.normals.rows(); ++fi) {
    double best = std::numeric_limits<double>::infinity();
    double scale = f.normals.row(fi).norm();
    for (Eigen::Index j = 0; j < boundary_gradient.cols(); ++j)
      best = std::min(best, (f.normals.row(fi).dot(boundary_gradient.col(j)) + f.offsets(fi)) / scale);
    ref.max_facet_gap = std::max(ref.max_facet_gap, best);
  }
  if (ref.max_facet_gap > opts.box_tol)
    throw Error(ErrorCode::BoxTooSmall, "gradient image of the box misses a facet by " + std::to_string(ref.max_facet_gap));
  return ref;
}

}  // namespace csol
