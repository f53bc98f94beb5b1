#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "csol/errors.hpp"
#include "csol/moments.hpp"

namespace csol {

namespace {

struct GaussRule {
  std::vector<double> x;  // nodes on [0, 1]
  std::vector<double> w;
};

GaussRule gauss_legendre(int q) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(q);
  r.w.resize(q);
  for (int i = 0; i < q; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= q; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = q * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = 0.5 * (1.0 - z);
    r.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  cache[q] = r;
  return r;
}

struct Cell {
  std::vector<Vec> v;
  int depth = 0;
};

MomentResult apply_rule(const Cell& c, const Vec& w, double shift, int q) {
  const int m = static_cast<int>(c.v.size()) - 1;
  const GaussRule g = gauss_legendre(q);
  Simplex s{c.v};
  double fact = 1.0;
  for (int j = 2; j <= m; ++j) fact *= j;
  const double jac = s.volume() * fact;

  MomentResult r;
  r.i0 = 0.0;
  r.i1 = Vec::Zero(m);
  r.i2 = Mat::Zero(m, m);
  r.log_shift = shift;
  std::vector<int> idx(m, 0);
  Vec p(m);
  for (;;) {
    double weight = jac;
    double prod = 1.0;
    p.setZero();
    for (int k = 0; k < m; ++k) {
      double u = g.x[idx[k]];
      weight *= g.w[idx[k]] * std::pow(u, m - 1 - k);
      p += prod * (1.0 - u) * c.v[k];
      prod *= u;
    }
    p += prod * c.v[m];
    double e = weight * std::exp(w.dot(p) - shift);
    r.i0 += e;
    r.i1 += e * p;
    r.i2 += e * p * p.transpose();
    int k = 0;
    while (k < m && ++idx[k] == q) idx[k++] = 0;
    if (k == m) break;
  }
  return r;
}

}  // namespace

MomentResult quadrature_oracle(const Polytope& poly, const Vec& w, MomentOrder order, const QuadratureOptions& opts) {
  if (w.size() != poly.dim()) throw Error(ErrorCode::DimensionMismatch, "weight length differs from polytope dimension");
  const int m = poly.dim();
  const double shift = support(poly, w);
  const double vol = volume(poly);

  std::vector<Cell> stack;
  for (const auto& s : triangulate(poly)) stack.push_back({s.vertices, 0});

  double i0_est = 0.0;
  for (const auto& c : stack) i0_est += apply_rule(c, w, shift, opts.base_order + 8).i0;
  const double len = std::max(1.0, poly.circumradius() + poly.vertex_mean().norm());
  const double scale[3] = {i0_est, i0_est * len, i0_est * len * len};
  const int controlled = static_cast<int>(order);

  MomentResult total;
  total.i0 = 0.0;
  total.i1 = Vec::Zero(m);
  total.i2 = Mat::Zero(m, m);
  total.log_shift = shift;
  long cells = 0;
  while (!stack.empty()) {
    Cell c = std::move(stack.back());
    stack.pop_back();
    if (++cells > opts.max_cells) throw Error(ErrorCode::ToleranceNotReached, "quadrature cell budget exhausted");
    MomentResult lo = apply_rule(c, w, shift, opts.base_order);
    MomentResult hi = apply_rule(c, w, shift, opts.base_order + 4);
    const double share = opts.rel_tol * Simplex{c.v}.volume() / vol;
    double err[3] = {std::abs(hi.i0 - lo.i0), (hi.i1 - lo.i1).norm(), (hi.i2 - lo.i2).norm()};
    bool ok = true;
    for (int k = 0; k <= controlled; ++k)
      if (err[k] > share * scale[k]) ok = false;
    if (ok) {
      total.i0 += hi.i0;
      total.i1 += hi.i1;
      total.i2 += hi.i2;
      continue;
    }
    if (c.depth >= opts.max_depth) throw Error(ErrorCode::ToleranceNotReached, "quadrature depth limit reached");
    int ea = 0, eb = 1;
    double best = -1.0;
    for (int i = 0; i <= m; ++i)
      for (int j = i + 1; j <= m; ++j) {
        double d = (c.v[i] - c.v[j]).squaredNorm();
        if (d > best) {
          best = d;
          ea = i;
          eb = j;
        }
      }
    Vec mid = 0.5 * (c.v[ea] + c.v[eb]);
    Cell left{c.v, c.depth + 1}, right{c.v, c.depth + 1};
    left.v[eb] = mid;
    right.v[ea] = mid;
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return total;
}

}  // namespace csol
