#include "csol/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "csol/errors.hpp"
#include "csol/parallel.hpp"

namespace csol {

namespace {

constexpr int kTaylorTerms = 48;

// sum_k h_k(z_i..z_j) / (j - i + k)! for -1/2 <= z <= 0.
double taylor_divided_diff(const std::vector<double>& z, int i, int j, std::vector<double>& h) {
  h.assign(kTaylorTerms, 0.0);
  h[0] = 1.0;
  for (int l = i; l <= j; ++l) {
    for (int k = 1; k < kTaylorTerms; ++k) h[k] += z[l] * h[k - 1];
  }
  int q = j - i;
  double inv_fact = 1.0;
  for (int r = 2; r <= q; ++r) inv_fact /= r;
  double sum = 0.0;
  for (int k = 0; k < kTaylorTerms; ++k) {
    double term = h[k] * inv_fact;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum) && k > 2) break;
    inv_fact /= (q + k + 1);
  }
  return sum;
}

}  // namespace

double divided_diff_exp(std::span<const double> nodes, const DividedDiffConfig& cfg) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw Error(ErrorCode::DegenerateInput, "divided difference needs at least one node");
  std::vector<double> a(nodes.begin(), nodes.end());
  std::sort(a.begin(), a.end());
  const double hi = a.back();
  if (n == 1) return std::exp(hi);
  const double spread = hi - a.front();

  // Pivoting on the largest node keeps every entry below one, so wide spreads underflow
  // harmlessly instead of overflowing.
  int s = 0;
  while (std::ldexp(spread, -s) > cfg.taylor_spread && s < 2000) ++s;
  std::vector<double> z(n);
  for (int i = 0; i < n; ++i) z[i] = std::ldexp(a[i] - hi, -s);

  // Upper-triangular exp of the bidiagonal matrix diag(z) + 2^-s * superdiag.
  Mat t = Mat::Zero(n, n);
  std::vector<double> h;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) t(i, j) = std::ldexp(taylor_divided_diff(z, i, j, h), -s * (j - i));

  for (int r = 0; r < s; ++r) {
    Mat sq = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int l = i; l <= j; ++l) acc += t(i, l) * t(l, j);
        sq(i, j) = acc;
      }
    t.swap(sq);
  }
  return std::exp(hi) * t(0, n - 1);
}

Mat MomentResult::covariance() const {
  Vec b = barycenter();
  return i2 / i0 - b * b.transpose();
}

MomentResult& MomentResult::operator+=(const MomentResult& o) {
  if (i1.size() == 0) {
    *this = o;
    return *this;
  }
  i0 += o.i0;
  i1 += o.i1;
  i2 += o.i2;
  return *this;
}

namespace {

MomentResult simplex_moments_shifted(const Simplex& s, const Vec& w, double shift, const DividedDiffConfig& cfg) {
  const int m = s.dim();
  const int nv = m + 1;
  double fact = 1.0;
  for (int j = 2; j <= m; ++j) fact *= j;
  const double jac = std::abs(s.signed_volume()) * fact;

  std::vector<double> a(nv);
  for (int i = 0; i < nv; ++i) a[i] = w.dot(s.vertices[i]) - shift;

  MomentResult r;
  r.log_shift = shift;
  r.i0 = jac * divided_diff_exp(a, cfg);
  r.i1 = Vec::Zero(m);
  r.i2 = Mat::Zero(m, m);
  std::vector<double> nodes(a);
  nodes.push_back(0.0);
  for (int i = 0; i < nv; ++i) {
    nodes[nv] = a[i];
    r.i1 += jac * divided_diff_exp(nodes, cfg) * s.vertices[i];
  }
  nodes.push_back(0.0);
  for (int i = 0; i < nv; ++i)
    for (int j = i; j < nv; ++j) {
      nodes[nv] = a[i];
      nodes[nv + 1] = a[j];
      double d = jac * divided_diff_exp(nodes, cfg);
      if (i == j) {
        r.i2 += 2.0 * d * s.vertices[i] * s.vertices[i].transpose();
      } else {
        Mat outer = s.vertices[i] * s.vertices[j].transpose();
        r.i2 += d * (outer + outer.transpose());
      }
    }
  return r;
}

}  // namespace

MomentResult simplex_exp_moments(const Simplex& s, const Vec& w, const DividedDiffConfig& cfg) {
  if (s.dim() < 1) throw Error(ErrorCode::DegenerateInput, "simplex needs at least two vertices");
  if (w.size() != s.dim()) throw Error(ErrorCode::DimensionMismatch, "weight length differs from simplex dimension");
  return simplex_moments_shifted(s, w, 0.0, cfg);
}

MomentResult polytope_exp_moments(const Polytope& p, const Vec& w, const MomentOptions& opts) {
  if (w.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "weight length differs from polytope dimension");
  if (!w.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite weight");
  const std::vector<Simplex> cells = triangulate(p, opts.apex);
  const double shift = opts.shifted ? support(p, w) : 0.0;
  std::vector<MomentResult> parts(cells.size());
  parallel_chunks(cells.size(), 16, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) parts[i] = simplex_moments_shifted(cells[i], w, shift, opts.divided_diff);
  });
  MomentResult total;
  total.i0 = 0.0;
  total.i1 = Vec::Zero(p.dim());
  total.i2 = Mat::Zero(p.dim(), p.dim());
  total.log_shift = shift;
  for (const auto& part : parts) {
    total.i0 += part.i0;
    total.i1 += part.i1;
    total.i2 += part.i2;
  }
  return total;
}

Vec weighted_barycenter(const Polytope& p, const Vec& w) {
  MomentOptions opts;
  opts.shifted = true;
  return polytope_exp_moments(p, w, opts).barycenter();
}

}  // namespace csol
