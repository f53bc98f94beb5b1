#include "csol/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "csol/errors.hpp"

namespace csol {

namespace {

// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k > n) return;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

int affine_rank(const std::vector<Vec>& pts, const std::vector<int>& which, double tol) {
  if (which.size() <= 1) return 0;
  const Vec& base = pts[which[0]];
  Mat d(base.size(), which.size() - 1);
  for (std::size_t j = 1; j < which.size(); ++j) d.col(j - 1) = pts[which[j]] - base;
  Eigen::FullPivLU<Mat> lu(d);
  lu.setThreshold(tol);
  return static_cast<int>(lu.rank());
}

int affine_rank(const std::vector<Vec>& pts, double tol) {
  std::vector<int> all(pts.size());
  std::iota(all.begin(), all.end(), 0);
  return affine_rank(pts, all, tol);
}

void check_dims(const std::vector<Halfspace>& hs, int& m) {
  if (hs.empty()) throw Error(ErrorCode::DegenerateInput, "no halfspaces given");
  m = static_cast<int>(hs.front().normal.size());
  if (m < 1) throw Error(ErrorCode::DegenerateInput, "zero-dimensional normal");
  for (const auto& h : hs) {
    if (h.normal.size() != m) throw Error(ErrorCode::DimensionMismatch, "halfspace normals differ in length");
    if (!h.normal.allFinite() || !std::isfinite(h.offset))
      throw Error(ErrorCode::DegenerateInput, "non-finite halfspace data");
    if (h.normal.norm() == 0.0) throw Error(ErrorCode::DegenerateInput, "zero halfspace normal");
  }
}

// True when {d : <n_i, d> >= 0 for all i} contains a nonzero direction.
bool has_recession_direction(const std::vector<Halfspace>& hs, int m) {
  Mat n(hs.size(), m);
  for (std::size_t i = 0; i < hs.size(); ++i) n.row(i) = hs[i].normal.normalized().transpose();
  Eigen::FullPivLU<Mat> full(n);
  full.setThreshold(1e-12);
  if (full.rank() < m) return true;
  auto is_recession = [&](const Vec& d) {
    for (Eigen::Index i = 0; i < n.rows(); ++i)
      if (n.row(i).dot(d) < -1e-12) return false;
    return true;
  };
  if (m == 1) return is_recession(Vec::Constant(1, 1.0)) || is_recession(Vec::Constant(1, -1.0));
  bool found = false;
  for_each_subset(static_cast<int>(hs.size()), m - 1, [&](const std::vector<int>& idx) {
    if (found) return;
    Mat sub(m - 1, m);
    for (int r = 0; r < m - 1; ++r) sub.row(r) = n.row(idx[r]);
    Eigen::FullPivLU<Mat> lu(sub);
    lu.setThreshold(1e-12);
    if (lu.rank() != m - 1) return;
    Vec d = lu.kernel().col(0).normalized();
    if (is_recession(d) || is_recession(-d)) found = true;
  });
  return found;
}

struct Enumerated {
  std::vector<Vec> vertices;
  double abs_tol = 0.0;
};

Enumerated enumerate_vertices(const std::vector<Halfspace>& hs, int m, GeomTolerance tol) {
  std::vector<Vec> unit_n(hs.size());
  std::vector<double> unit_c(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    double s = hs[i].normal.norm();
    unit_n[i] = hs[i].normal / s;
    unit_c[i] = hs[i].offset / s;
  }
  std::vector<Vec> candidates;
  for_each_subset(static_cast<int>(hs.size()), m, [&](const std::vector<int>& idx) {
    Mat a(m, m);
    Vec b(m);
    for (int r = 0; r < m; ++r) {
      a.row(r) = unit_n[idx[r]].transpose();
      b(r) = -unit_c[idx[r]];
    }
    Eigen::FullPivLU<Mat> lu(a);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return;
    Vec x = lu.solve(b);
    if (!x.allFinite()) return;
    double eps = tol.relative * std::max(1.0, x.norm());
    for (std::size_t i = 0; i < hs.size(); ++i)
      if (unit_n[i].dot(x) + unit_c[i] < -eps) return;
    candidates.push_back(std::move(x));
  });
  Enumerated out;
  double scale = 1.0;
  for (const auto& c : candidates) scale = std::max(scale, c.norm());
  out.abs_tol = tol.relative * scale;
  for (auto& c : candidates) {
    bool dup = false;
    for (const auto& v : out.vertices)
      if ((v - c).norm() <= out.abs_tol) {
        dup = true;
        break;
      }
    if (!dup) out.vertices.push_back(std::move(c));
  }
  return out;
}

Vec lexmin(const std::vector<Vec>& pts, int* index) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    const Vec& a = pts[i];
    const Vec& b = pts[best];
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (a(j) < b(j)) {
        best = i;
        break;
      }
      if (a(j) > b(j)) break;
    }
  }
  if (index) *index = best;
  return pts[best];
}

// Orthonormal basis of the complement of unit vector n, as columns.
Mat complement_basis(const Vec& n) {
  int m = static_cast<int>(n.size());
  Mat q = Eigen::HouseholderQR<Mat>(n).householderQ();
  return q.rightCols(m - 1);
}

}  // namespace

double Simplex::signed_volume() const {
  int m = dim();
  if (m < 1) return 0.0;
  Mat d(m, m);
  for (int j = 0; j < m; ++j) d.col(j) = vertices[j + 1] - vertices[0];
  double f = 1.0;
  for (int j = 2; j <= m; ++j) f *= j;
  return d.determinant() / f;
}

void Polytope::finish() {
  center_ = Vec::Zero(dim_);
  for (const auto& v : vertices_) center_ += v;
  center_ /= static_cast<double>(vertices_.size());
  radius_ = 0.0;
  for (const auto& v : vertices_) radius_ = std::max(radius_, (v - center_).norm());
}

Polytope Polytope::from_halfspaces(const std::vector<Halfspace>& hs, GeomTolerance tol) {
  int m = 0;
  check_dims(hs, m);
  if (has_recession_direction(hs, m)) throw Error(ErrorCode::UnboundedPolytope, "halfspaces do not bound a polytope");
  Enumerated en = enumerate_vertices(hs, m, tol);
  if (en.vertices.size() < static_cast<std::size_t>(m + 1) || affine_rank(en.vertices, en.abs_tol) < m)
    throw Error(ErrorCode::DegenerateInput, "halfspaces define an empty or lower-dimensional body");

  Polytope p;
  p.dim_ = m;
  p.tol_ = tol;
  p.vertices_ = std::move(en.vertices);
  std::vector<std::pair<Vec, double>> kept_unit;
  for (const auto& h : hs) {
    double s = h.normal.norm();
    Vec un = h.normal / s;
    double uc = h.offset / s;
    std::vector<int> tight;
    for (int i = 0; i < static_cast<int>(p.vertices_.size()); ++i)
      if (std::abs(un.dot(p.vertices_[i]) + uc) <= en.abs_tol) tight.push_back(i);
    if (static_cast<int>(tight.size()) < m) continue;
    if (affine_rank(p.vertices_, tight, en.abs_tol) != m - 1) continue;
    bool dup = false;
    for (const auto& [kn, kc] : kept_unit)
      if ((kn - un).norm() <= 1e-10 && std::abs(kc - uc) <= en.abs_tol) {
        dup = true;
        break;
      }
    if (dup) continue;
    kept_unit.emplace_back(un, uc);
    p.halfspaces_.push_back(h);
  }
  p.finish();
  return p;
}

Polytope Polytope::from_vertices(const std::vector<Vec>& points, GeomTolerance tol) {
  return from_halfspaces(halfspaces_from_vertices(points, tol), tol);
}

std::vector<Vec> vertices_from_halfspaces(const std::vector<Halfspace>& hs, GeomTolerance tol) {
  return Polytope::from_halfspaces(hs, tol).vertices();
}

std::vector<Halfspace> halfspaces_from_vertices(const std::vector<Vec>& points, GeomTolerance tol) {
  if (points.empty()) throw Error(ErrorCode::DegenerateInput, "no vertices given");
  int m = static_cast<int>(points.front().size());
  if (m < 1) throw Error(ErrorCode::DegenerateInput, "zero-dimensional points");
  double scale = 1.0;
  for (const auto& p : points) {
    if (p.size() != m) throw Error(ErrorCode::DimensionMismatch, "points differ in dimension");
    if (!p.allFinite()) throw Error(ErrorCode::DegenerateInput, "non-finite vertex");
    scale = std::max(scale, p.norm());
  }
  double eps = tol.relative * scale;
  std::vector<Vec> pts;
  for (const auto& p : points) {
    bool dup = false;
    for (const auto& q : pts)
      if ((p - q).norm() <= eps) {
        dup = true;
        break;
      }
    if (!dup) pts.push_back(p);
  }
  if (affine_rank(pts, eps) < m) throw Error(ErrorCode::DegenerateInput, "points span a lower-dimensional body");

  std::vector<Halfspace> out;
  if (m == 1) {
    double lo = pts[0](0), hi = pts[0](0);
    for (const auto& p : pts) {
      lo = std::min(lo, p(0));
      hi = std::max(hi, p(0));
    }
    out.push_back({Vec::Constant(1, 1.0), -lo});
    out.push_back({Vec::Constant(1, -1.0), hi});
    return out;
  }
  for_each_subset(static_cast<int>(pts.size()), m, [&](const std::vector<int>& idx) {
    Mat d(m - 1, m);
    for (int r = 1; r < m; ++r) d.row(r - 1) = (pts[idx[r]] - pts[idx[0]]).transpose();
    Eigen::FullPivLU<Mat> lu(d);
    lu.setThreshold(1e-12);
    if (lu.rank() != m - 1) return;
    Vec n = lu.kernel().col(0).normalized();
    double c = -n.dot(pts[idx[0]]);
    bool any_pos = false, any_neg = false;
    for (const auto& p : pts) {
      double s = n.dot(p) + c;
      if (s > eps) any_pos = true;
      if (s < -eps) any_neg = true;
    }
    if (any_pos && any_neg) return;
    if (any_neg) {
      n = -n;
      c = -c;
    }
    for (const auto& h : out)
      if ((h.normal - n).norm() <= 1e-9 && std::abs(h.offset - c) <= eps) return;
    out.push_back({n, c});
  });
  return out;
}

Vec ReebSlice::lift(const Vec& q) const {
  int d = static_cast<int>(xi.size());
  Vec p(d);
  double acc = 1.0;
  for (int k = 0, r = 0; k < d; ++k) {
    if (k == dropped_axis) continue;
    p(k) = q(r);
    acc -= xi(k) * q(r);
    ++r;
  }
  p(dropped_axis) = acc / xi(dropped_axis);
  return p;
}

Polytope canonical_polytope(const std::vector<Vec>& normals, GeomTolerance tol) {
  if (normals.empty()) throw Error(ErrorCode::DegenerateInput, "no fan normals given");
  int m = static_cast<int>(normals.front().size());
  std::vector<Halfspace> hs;
  for (const auto& n : normals) hs.push_back({n, 1.0});
  int dim = 0;
  check_dims(hs, dim);
  if (static_cast<int>(normals.size()) < m + 1 || has_recession_direction(hs, m))
    throw Error(ErrorCode::UnboundedPolytope, "fan normals do not positively span");
  Polytope p = Polytope::from_halfspaces(hs, tol);
  if (p.halfspaces().size() != normals.size())
    throw Error(ErrorCode::DegenerateInput, "a fan normal does not support a facet");
  return p;
}

ReebSlice reeb_slice(const MomentCone& cone, const Vec& xi, GeomTolerance tol) {
  if (cone.normals.empty()) throw Error(ErrorCode::DegenerateInput, "cone has no normals");
  int d = cone.dim();
  if (d < 2) throw Error(ErrorCode::DegenerateInput, "cone dimension must be at least 2");
  if (xi.size() != d) throw Error(ErrorCode::DimensionMismatch, "xi length differs from cone dimension");
  for (const auto& n : cone.normals)
    if (n.size() != d) throw Error(ErrorCode::DimensionMismatch, "cone normals differ in length");
  int j = 0;
  for (int k = 1; k < d; ++k)
    if (std::abs(xi(k)) >= std::abs(xi(j))) j = k;
  if (xi(j) == 0.0 || !xi.allFinite()) throw Error(ErrorCode::UnboundedSlice, "xi must be a finite nonzero vector");

  std::vector<Halfspace> hs;
  for (const auto& lam : cone.normals) {
    Vec a(d - 1);
    for (int k = 0, r = 0; k < d; ++k) {
      if (k == j) continue;
      a(r++) = lam(k) - lam(j) * xi(k) / xi(j);
    }
    hs.push_back({a, lam(j) / xi(j)});
  }
  ReebSlice out;
  out.xi = xi;
  out.dropped_axis = j;
  try {
    out.polytope = Polytope::from_halfspaces(hs, tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnboundedPolytope || e.code() == ErrorCode::DegenerateInput)
      throw Error(ErrorCode::UnboundedSlice, "xi is not in the interior of the dual cone");
    throw;
  }
  return out;
}

double support(const Polytope& p, const Vec& u) {
  if (u.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "direction length differs from polytope dimension");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : p.vertices()) best = std::max(best, v.dot(u));
  return best;
}

Polytope minkowski_sum(const Polytope& p, const Polytope& q) {
  if (p.dim() != q.dim()) throw Error(ErrorCode::DimensionMismatch, "Minkowski summands differ in dimension");
  std::vector<Vec> pts;
  pts.reserve(p.vertices().size() * q.vertices().size());
  for (const auto& a : p.vertices())
    for (const auto& b : q.vertices()) pts.push_back(a + b);
  return Polytope::from_vertices(pts, p.geom_tolerance());
}

Polytope minkowski_sum(const std::vector<Polytope>& summands) {
  if (summands.empty()) throw Error(ErrorCode::DegenerateInput, "empty Minkowski sum");
  Polytope acc = summands.front();
  for (std::size_t i = 1; i < summands.size(); ++i) acc = minkowski_sum(acc, summands[i]);
  return acc;
}

namespace {

std::vector<Vec> sample_directions(int m) {
  std::vector<Vec> dirs;
  if (m == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
  } else if (m == 2) {
    for (int k = 0; k < 64; ++k) {
      double a = 2.0 * M_PI * k / 64.0;
      dirs.push_back(Vec{{std::cos(a), std::sin(a)}});
    }
  } else if (m == 3) {
    const int n = 128;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / n;
      double r = std::sqrt(1.0 - z * z);
      dirs.push_back(Vec{{r * std::cos(golden * k), r * std::sin(golden * k), z}});
    }
  } else {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 256; ++k) {
      Vec v(m);
      for (int i = 0; i < m; ++i) v(i) = nd(rng);
      dirs.push_back(v.normalized());
    }
  }
  return dirs;
}

}  // namespace

DecompositionCheck check_decomposition(const std::vector<Polytope>& summands, const Polytope& target, double tol) {
  DecompositionCheck rep;
  rep.tolerance = tol;
  int m = target.dim();
  rep.worst_direction = Vec::Zero(m);
  if (summands.empty()) return rep;
  for (const auto& s : summands)
    if (s.dim() != m) {
      rep.dimension_mismatch = true;
      rep.max_deviation = std::numeric_limits<double>::infinity();
      return rep;
    }

  std::vector<Vec> dirs;
  for (const auto& h : target.halfspaces()) {
    dirs.push_back(h.normal.normalized());
    dirs.push_back(-h.normal.normalized());
  }
  for (const auto& s : summands)
    for (const auto& h : s.halfspaces()) {
      dirs.push_back(h.normal.normalized());
      dirs.push_back(-h.normal.normalized());
    }
  for (auto& d : sample_directions(m)) dirs.push_back(std::move(d));

  for (const auto& u : dirs) {
    double sum = 0.0;
    for (const auto& s : summands) sum += support(s, u);
    double dev = support(target, u) - sum;
    if (std::abs(dev) > rep.max_deviation) {
      rep.max_deviation = std::abs(dev);
      rep.worst_signed_deviation = dev;
      rep.worst_direction = u;
    }
  }
  rep.directions_tested = static_cast<int>(dirs.size());

  rep.facets_parallel = true;
  for (int a = 0; a < static_cast<int>(summands.size()); ++a) {
    const auto& hs = summands[a].halfspaces();
    for (int i = 0; i < static_cast<int>(hs.size()); ++i) {
      Vec n = hs[i].normal.normalized();
      bool match = false;
      for (const auto& t : target.halfspaces())
        if ((t.normal.normalized() - n).norm() <= 1e-8) {
          match = true;
          break;
        }
      if (!match) {
        rep.facets_parallel = false;
        rep.non_parallel_facets.emplace_back(a, i);
      }
    }
  }
  rep.pass = rep.max_deviation < tol;
  return rep;
}

int lexicographic_min_vertex(const Polytope& p) {
  int idx = 0;
  lexmin(p.vertices(), &idx);
  return idx;
}

std::vector<Simplex> triangulate(const Polytope& p, std::optional<int> apex) {
  const auto& verts = p.vertices();
  int m = p.dim();
  if (m < 1 || verts.size() < static_cast<std::size_t>(m + 1))
    throw Error(ErrorCode::DegenerateInput, "cannot triangulate a degenerate polytope");
  int a = apex ? *apex : lexicographic_min_vertex(p);
  if (a < 0 || a >= static_cast<int>(verts.size())) throw Error(ErrorCode::DegenerateInput, "apex index out of range");

  std::vector<Simplex> out;
  if (m == 1) {
    int lo = 0, hi = 0;
    for (int i = 1; i < static_cast<int>(verts.size()); ++i) {
      if (verts[i](0) < verts[lo](0)) lo = i;
      if (verts[i](0) > verts[hi](0)) hi = i;
    }
    out.push_back({{verts[lo], verts[hi]}});
    return out;
  }
  const double eps = p.tolerance();
  const Vec& av = verts[a];
  for (const auto& h : p.halfspaces()) {
    double s = h.normal.norm();
    Vec un = h.normal / s;
    double uc = h.offset / s;
    if (std::abs(un.dot(av) + uc) <= eps) continue;
    std::vector<int> tight;
    for (int i = 0; i < static_cast<int>(verts.size()); ++i)
      if (std::abs(un.dot(verts[i]) + uc) <= eps) tight.push_back(i);
    // Facet in its own (m-1)-dimensional chart, triangulated recursively.
    Mat basis = complement_basis(un);
    const Vec& origin = verts[tight[0]];
    std::vector<Vec> local;
    for (int i : tight) local.push_back(basis.transpose() * (verts[i] - origin));
    Polytope facet = Polytope::from_vertices(local, p.geom_tolerance());
    for (const auto& sub : triangulate(facet)) {
      Simplex s{{av}};
      for (const auto& lv : sub.vertices) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < static_cast<int>(local.size()); ++j) {
          double d = (local[j] - lv).norm();
          if (d < bd) {
            bd = d;
            best = j;
          }
        }
        s.vertices.push_back(verts[tight[best]]);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

double volume(const Polytope& p) {
  double v = 0.0;
  for (const auto& s : triangulate(p)) v += s.volume();
  return v;
}

Polytope translate(const Polytope& p, const Vec& v) {
  if (v.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "translation length differs from polytope dimension");
  std::vector<Halfspace> hs;
  for (const auto& h : p.halfspaces()) hs.push_back({h.normal, h.offset - h.normal.dot(v)});
  return Polytope::from_halfspaces(hs, p.geom_tolerance());
}

Polytope linear_image(const Polytope& p, const Mat& l) {
  if (l.rows() != p.dim() || l.cols() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "map size differs from polytope dimension");
  Eigen::FullPivLU<Mat> lu(l);
  if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateInput, "linear map is singular");
  Mat lit = lu.inverse().transpose();
  std::vector<Halfspace> hs;
  for (const auto& h : p.halfspaces()) hs.push_back({lit * h.normal, h.offset});
  return Polytope::from_halfspaces(hs, p.geom_tolerance());
}

double min_slack(const Polytope& p, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : p.halfspaces()) best = std::min(best, h.slack(x) / h.normal.norm());
  return best;
}

bool contains(const Polytope& p, const Vec& x, double tol) {
  if (x.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "point length differs from polytope dimension");
  return min_slack(p, x) >= -tol;
}

}  // namespace csol
