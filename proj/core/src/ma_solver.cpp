#include "csol/ma_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>

#include "csol/moments.hpp"
#include "csol/parallel.hpp"

namespace csol {

namespace {

using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

enum class EvalStatus { Ok, NonConvex, TailDiverges, NonFinite };

const char* status_text(EvalStatus s) {
  switch (s) {
    case EvalStatus::Ok: return "ok";
    case EvalStatus::NonConvex: return "iterate is not discretely convex";
    case EvalStatus::TailDiverges: return "mass tail does not decay";
    case EvalStatus::NonFinite: return "non-finite residual";
  }
  return "";
}

struct Layout {
  int k = 0, nodes = 0, m = 0;
  bool aug = false;
  int phi(int a, int i) const { return a * nodes + i; }
  int sigma(int a) const { return k * nodes + a; }
  int c() const { return k * nodes + k; }
  int eps(int j) const { return k * nodes + k + 1 + j; }
  int size() const { return k * nodes + k + 1 + (aug ? m : 0); }
};

struct Eval {
  EvalStatus status = EvalStatus::Ok;
  Vec f;  // residual vector, log form on interior nodes
  std::vector<Vec> fields;
  Vec pde_sup;
  Vec boundary_by_summand;
  Vec constraint_by_summand;
  double boundary_sup = 0.0;
  double mass = 0.0;
  double constraint_sup = 0.0;
  double merit = 0.0;
  double min_convexity = std::numeric_limits<double>::infinity();
  double tail_mass = 0.0;
  std::vector<Triplet> jac;
};

class System {
 public:
  explicit System(const PotentialGrid& s) : grid_(s.grid), st_(s) {
    lay_.k = s.arity();
    lay_.nodes = grid_.size();
    lay_.m = grid_.dim();
    lay_.aug = s.augmented;
    const int m = lay_.m;
    sum_h_ = Vec::Zero(lay_.nodes);
    for (const auto& r : *s.refs) sum_h_ += r.h;
    // Face rows ask the outward slope of f to exceed that of h by the difference of the two
    // exponential tail models; the reference's own tail uses its exact Hessians.
    face_target_.assign(lay_.k, Vec::Zero(lay_.nodes));
    const double hh = grid_.spacing();
    for (int a = 0; a < lay_.k; ++a) {
      const auto& ref = (*s.refs)[a];
      for (int i = 0; i < lay_.nodes; ++i) {
        if (grid_.kind(i) != NodeKind::Face) continue;
        const auto [d, sgn] = grid_.boundary_axes(i).front();
        const int inner = grid_.neighbor(i, d, -sgn);
        Vec n = Vec::Zero(m);
        n(d) = sgn;
        const double det_b = ref.hessian_at(i).determinant(), det_in = ref.hessian_at(inner).determinant();
        const double tang = m == 1 ? 1.0 : ref.hessian((1 - d) * m + (1 - d), i);
        const double kappa = (std::log(det_in) - std::log(det_b)) / hh;
        if (kappa > 0.0 && std::isfinite(kappa) && tang > 0.0)
          face_target_[a](i) = (ref.h(i) - ref.h(inner)) / hh + det_b * (0.5 * hh + 1.0 / kappa) / tang;
        else
          face_target_[a](i) = support(s.polytopes[a], n);
      }
    }
  }

  const Layout& layout() const { return lay_; }

  Vec pack(const PotentialGrid& s) const {
    Vec x(lay_.size());
    for (int a = 0; a < lay_.k; ++a) x.segment(lay_.phi(a, 0), lay_.nodes) = s.phi[a];
    for (int a = 0; a < lay_.k; ++a) x(lay_.sigma(a)) = s.log_volume(a);
    x(lay_.c()) = s.c;
    if (lay_.aug)
      for (int j = 0; j < lay_.m; ++j) x(lay_.eps(j)) = s.weight_correction(j);
    return x;
  }

  PotentialGrid unpack(const Vec& x) const {
    PotentialGrid s = st_;
    for (int a = 0; a < lay_.k; ++a) s.phi[a] = x.segment(lay_.phi(a, 0), lay_.nodes);
    for (int a = 0; a < lay_.k; ++a) s.log_volume(a) = x(lay_.sigma(a));
    s.c = x(lay_.c());
    if (lay_.aug)
      for (int j = 0; j < lay_.m; ++j) s.weight_correction(j) = x(lay_.eps(j));
    return s;
  }

  Eval evaluate(const Vec& x, bool want_jac) const;

 private:
  Grid grid_;
  const PotentialGrid& st_;
  Layout lay_;
  Vec sum_h_;
  std::vector<Vec> face_target_;
};

Eval System::evaluate(const Vec& x, bool want_jac) const {
  const int k = lay_.k, nn = lay_.nodes, m = lay_.m;
  const double h = grid_.spacing();
  const double t = st_.t;
  const double tau = st_.paper_sign ? -t : t;
  const double c = x(lay_.c());
  Vec eps = Vec::Zero(m);
  if (lay_.aug)
    for (int j = 0; j < m; ++j) eps(j) = x(lay_.eps(j));

  Eval ev;
  ev.f = Vec::Zero(lay_.size());
  ev.fields.assign(k, Vec::Zero(nn));
  ev.pde_sup = Vec::Zero(k);
  ev.boundary_by_summand = Vec::Zero(k);
  ev.constraint_by_summand = Vec::Zero(k);

  Vec phisum = Vec::Zero(nn);
  for (int a = 0; a < k; ++a) phisum += x.segment(lay_.phi(a, 0), nn);
  Vec log_e(nn);
  for (int i = 0; i < nn; ++i) {
    double base = st_.paper_sign ? (2.0 * t - 1.0) * sum_h_(i) : -sum_h_(i);
    log_e(i) = base - tau * phisum(i) - c;
  }
  Vec e = log_e.array().exp();
  if (!e.allFinite()) {
    ev.status = EvalStatus::NonFinite;
    return ev;
  }

  auto add_log_e = [&](std::vector<Triplet>& out, int row, int node, double coef) {
    for (int b = 0; b < k; ++b) out.emplace_back(row, lay_.phi(b, node), -tau * coef);
    out.emplace_back(row, lay_.c(), -coef);
  };

  // Node equations, chunked over a fixed partition for reproducible assembly.
  const std::size_t chunk = 512;
  const std::size_t nchunks = (static_cast<std::size_t>(k) * nn + chunk - 1) / chunk;
  std::vector<std::vector<Triplet>> part_jac(nchunks);
  std::vector<EvalStatus> part_status(nchunks, EvalStatus::Ok);
  std::vector<double> part_conv(nchunks, std::numeric_limits<double>::infinity());

  parallel_chunks(static_cast<std::size_t>(k) * nn, chunk, [&](std::size_t lo, std::size_t hi) {
    const std::size_t ci = lo / chunk;
    auto& out = part_jac[ci];
    for (std::size_t flat = lo; flat < hi; ++flat) {
      const int a = static_cast<int>(flat / nn);
      const int i = static_cast<int>(flat % nn);
      const auto& ref = (*st_.refs)[a];
      const int off = lay_.phi(a, 0);
      auto f = [&](int node) { return ref.h(node) + x(off + node); };
      const int row = lay_.phi(a, i);
      const Vec weff = st_.weights[a] + eps;
      const NodeKind kind = grid_.kind(i);

      if (kind == NodeKind::Interior) {
        Mat d2(m, m);
        Vec g(m);
        int nb[2][2];
        for (int d = 0; d < m; ++d) {
          nb[d][0] = grid_.neighbor(i, d, -1);
          nb[d][1] = grid_.neighbor(i, d, 1);
          d2(d, d) = (f(nb[d][1]) - 2.0 * f(i) + f(nb[d][0])) / (h * h);
          g(d) = (f(nb[d][1]) - f(nb[d][0])) / (2.0 * h);
        }
        int diag[2][2] = {{0, 0}, {0, 0}};
        if (m == 2) {
          for (int sx = 0; sx < 2; ++sx)
            for (int sy = 0; sy < 2; ++sy) diag[sx][sy] = grid_.neighbor(nb[0][sx], 1, sy ? 1 : -1);
          d2(0, 1) = d2(1, 0) = (f(diag[1][1]) - f(diag[1][0]) - f(diag[0][1]) + f(diag[0][0])) / (4.0 * h * h);
        }
        double det = m == 1 ? d2(0, 0) : d2.determinant();
        bool convex = d2(0, 0) > 0.0 && det > 0.0 && (m == 1 || d2(1, 1) > 0.0);
        if (!convex) {
          part_status[ci] = EvalStatus::NonConvex;
          continue;
        }
        part_conv[ci] = std::min(part_conv[ci], det);
        const double r = std::log(det) + weff.dot(g) - x(lay_.sigma(a)) - log_e(i);
        ev.f(row) = r;
        ev.fields[a](i) = e(i) * std::expm1(r);
        if (!want_jac) continue;
        if (m == 1) {
          const double cd = 1.0 / (d2(0, 0) * h * h);
          out.emplace_back(row, off + nb[0][0], cd - weff(0) / (2.0 * h));
          out.emplace_back(row, off + i, -2.0 * cd);
          out.emplace_back(row, off + nb[0][1], cd + weff(0) / (2.0 * h));
        } else {
          // d log det = (D_yy dD_xx + D_xx dD_yy - 2 D_xy dD_xy) / det
          const double cxx = d2(1, 1) / det / (h * h);
          const double cyy = d2(0, 0) / det / (h * h);
          const double cxy = -2.0 * d2(0, 1) / det / (4.0 * h * h);
          out.emplace_back(row, off + i, -2.0 * cxx - 2.0 * cyy);
          out.emplace_back(row, off + nb[0][0], cxx - weff(0) / (2.0 * h));
          out.emplace_back(row, off + nb[0][1], cxx + weff(0) / (2.0 * h));
          out.emplace_back(row, off + nb[1][0], cyy - weff(1) / (2.0 * h));
          out.emplace_back(row, off + nb[1][1], cyy + weff(1) / (2.0 * h));
          out.emplace_back(row, off + diag[1][1], cxy);
          out.emplace_back(row, off + diag[0][0], cxy);
          out.emplace_back(row, off + diag[1][0], -cxy);
          out.emplace_back(row, off + diag[0][1], -cxy);
        }
        for (int b = 0; b < k; ++b) out.emplace_back(row, lay_.phi(b, i), tau);
        out.emplace_back(row, lay_.c(), 1.0);
        out.emplace_back(row, lay_.sigma(a), -1.0);
        if (lay_.aug)
          for (int j = 0; j < m; ++j) out.emplace_back(row, lay_.eps(j), g(j));
      } else if (kind == NodeKind::Face) {
        const auto [d, sgn] = grid_.boundary_axes(i).front();
        const int inner = grid_.neighbor(i, d, -sgn);
        const double slope = (f(i) - f(inner)) / h;
        const double kappa = (log_e(inner) - log_e(i)) / h;
        if (!(kappa > 0.0)) {
          part_status[ci] = EvalStatus::TailDiverges;
          continue;
        }
        const double len = 0.5 * h + 1.0 / kappa;
        double tang = 1.0;
        int tl = -1, tr = -1;
        if (m == 2) {
          const int ta = 1 - d;
          tl = grid_.neighbor(i, ta, -1);
          tr = grid_.neighbor(i, ta, 1);
          tang = ref.hessian(ta * m + ta, i) + (x(off + tr) - 2.0 * x(off + i) + x(off + tl)) / (h * h);
          if (!(tang > 0.0)) {
            part_status[ci] = EvalStatus::NonConvex;
            continue;
          }
        }
        const Vec p = ref.gradient.col(i);
        const double delta = std::exp(x(lay_.sigma(a)) - weff.dot(p) + log_e(i)) * len / tang;
        const double bres = slope - face_target_[a](i) + delta;
        ev.f(row) = bres;
        if (!want_jac) continue;
        out.emplace_back(row, off + i, 1.0 / h);
        out.emplace_back(row, off + inner, -1.0 / h);
        const double q = 1.0 / (kappa * kappa * h * len);
        add_log_e(out, row, i, delta * (1.0 + q));
        add_log_e(out, row, inner, -delta * q);
        out.emplace_back(row, lay_.sigma(a), delta);
        if (lay_.aug)
          for (int j = 0; j < m; ++j) out.emplace_back(row, lay_.eps(j), -delta * p(j));
        if (m == 2) {
          const double s = -delta / tang / (h * h);
          out.emplace_back(row, off + tl, s);
          out.emplace_back(row, off + tr, s);
          out.emplace_back(row, off + i, -2.0 * s);
        }
      } else {
        // Corners extrapolate bilinearly from the adjacent cell.
        const auto axes = grid_.boundary_axes(i);
        const int cx = grid_.neighbor(i, 0, -axes[0].second);
        const int cy = grid_.neighbor(i, 1, -axes[1].second);
        const int cd = grid_.neighbor(cx, 1, -axes[1].second);
        ev.f(row) = x(off + i) - x(off + cx) - x(off + cy) + x(off + cd);
        if (!want_jac) continue;
        out.emplace_back(row, off + i, 1.0);
        out.emplace_back(row, off + cx, -1.0);
        out.emplace_back(row, off + cy, -1.0);
        out.emplace_back(row, off + cd, 1.0);
      }
    }
  });
  for (std::size_t ci = 0; ci < nchunks; ++ci) {
    if (part_status[ci] != EvalStatus::Ok) {
      ev.status = part_status[ci];
      return ev;
    }
    ev.min_convexity = std::min(ev.min_convexity, part_conv[ci]);
  }
  if (want_jac) {
    std::size_t total = 0;
    for (const auto& p : part_jac) total += p.size();
    ev.jac.reserve(total + 4 * nn * k + 64);
    for (auto& p : part_jac) ev.jac.insert(ev.jac.end(), p.begin(), p.end());
  }

  for (int a = 0; a < k; ++a) {
    for (int i = 0; i < nn; ++i) {
      NodeKind kind = grid_.kind(i);
      double v = ev.f(lay_.phi(a, i));
      if (kind == NodeKind::Interior) ev.pde_sup(a) = std::max(ev.pde_sup(a), std::abs(ev.fields[a](i)));
      else if (kind == NodeKind::Face) ev.boundary_by_summand(a) = std::max(ev.boundary_by_summand(a), std::abs(v));
      else ev.constraint_by_summand(a) = std::max(ev.constraint_by_summand(a), std::abs(v));
    }
  }

  // Pins.
  const int center = grid_.center();
  for (int a = 0; a < k; ++a) {
    const int row = lay_.sigma(a);
    ev.f(row) = x(lay_.phi(a, center));
    ev.constraint_by_summand(a) = std::max(ev.constraint_by_summand(a), std::abs(ev.f(row)));
    if (want_jac) ev.jac.emplace_back(row, lay_.phi(a, center), 1.0);
  }

  // Mass: trapezoid sum plus exponential tails beyond the box.
  {
    const int row = lay_.c();
    double mass = 0.0;
    for (int i = 0; i < nn; ++i) {
      double wi = grid_.trapezoid_weight(i) * e(i);
      mass += wi;
      if (want_jac) add_log_e(ev.jac, row, i, wi);
    }
    auto tail = [&](int node, double coef, std::initializer_list<int> inward) -> bool {
      double term = coef * e(node);
      double sum_inv = 0.0;
      std::vector<double> kap;
      for (int nb : inward) {
        double kp = (log_e(nb) - log_e(node)) / h;
        if (!(kp > 0.0)) return false;
        kap.push_back(kp);
        term /= kp;
        sum_inv += 1.0 / (kp * h);
      }
      ev.tail_mass += term;
      if (want_jac) {
        add_log_e(ev.jac, row, node, term * (1.0 + sum_inv));
        int j = 0;
        for (int nb : inward) add_log_e(ev.jac, row, nb, -term / (kap[j++] * h));
      }
      return true;
    };
    bool ok = true;
    for (int i = 0; i < nn && ok; ++i) {
      NodeKind kind = grid_.kind(i);
      if (kind == NodeKind::Interior) continue;
      auto axes = grid_.boundary_axes(i);
      if (m == 1) {
        ok = tail(i, 1.0, {grid_.neighbor(i, 0, -axes[0].second)});
      } else if (kind == NodeKind::Face) {
        ok = tail(i, h, {grid_.neighbor(i, axes[0].first, -axes[0].second)});
      } else {
        int nx = grid_.neighbor(i, 0, -axes[0].second);
        int ny = grid_.neighbor(i, 1, -axes[1].second);
        ok = tail(i, 0.5 * h, {nx}) && tail(i, 0.5 * h, {ny}) && tail(i, 1.0, {nx, ny});
      }
    }
    if (!ok) {
      ev.status = EvalStatus::TailDiverges;
      return ev;
    }
    mass += ev.tail_mass;
    ev.f(row) = mass - 1.0;
    ev.mass = mass - 1.0;
    if (mass > 0.0) ev.tail_mass /= mass;
  }

  if (lay_.aug) {
    for (int j = 0; j < m; ++j) {
      const int row = lay_.eps(j);
      const int up = grid_.neighbor(center, j, 1), dn = grid_.neighbor(center, j, -1);
      double gsum = 0.0;
      for (int a = 0; a < k; ++a) {
        gsum += (x(lay_.phi(a, up)) - x(lay_.phi(a, dn))) / (2.0 * h);
        if (want_jac) {
          ev.jac.emplace_back(row, lay_.phi(a, up), 1.0 / (2.0 * h));
          ev.jac.emplace_back(row, lay_.phi(a, dn), -1.0 / (2.0 * h));
        }
      }
      ev.f(row) = gsum;
      ev.constraint_sup = std::max(ev.constraint_sup, std::abs(gsum));
    }
  }

  if (!ev.f.allFinite()) {
    ev.status = EvalStatus::NonFinite;
    return ev;
  }
  ev.boundary_sup = ev.boundary_by_summand.maxCoeff();
  ev.constraint_sup = std::max(ev.constraint_sup, ev.constraint_by_summand.maxCoeff());
  ev.merit = std::max({ev.pde_sup.maxCoeff(), ev.boundary_sup, std::abs(ev.mass), ev.constraint_sup});
  return ev;
}

[[noreturn]] void throw_status(EvalStatus s) {
  if (s == EvalStatus::NonConvex) throw Error(ErrorCode::NonConvexIterate, status_text(s));
  throw Error(ErrorCode::NewtonStall, status_text(s));
}

// Unknown mask for a solve restricted to one summand (t = 0 only).
std::vector<int> active_map(const Layout& lay, int active, int* count) {
  std::vector<int> map(lay.size(), -1);
  int n = 0;
  for (int u = 0; u < lay.size(); ++u) {
    bool on = true;
    if (active >= 0) {
      on = false;
      if (u >= lay.phi(active, 0) && u < lay.phi(active, 0) + lay.nodes) on = true;
      if (u == lay.sigma(active)) on = true;
    }
    if (on) map[u] = n++;
  }
  *count = n;
  return map;
}

double merit_restricted(const Eval& ev, int active) {
  if (active < 0) return ev.merit;
  return std::max({ev.pde_sup(active), ev.boundary_by_summand(active), ev.constraint_by_summand(active)});
}

struct StepResult {
  Vec x;
  Eval ev;
};

StepResult damped_step(const System& sys, const Vec& x, const Eval& ev, const MaOptions& opts, int active) {
  const Layout& lay = sys.layout();
  int nact = 0;
  std::vector<int> map = active_map(lay, active, &nact);
  std::vector<Triplet> trip;
  trip.reserve(ev.jac.size());
  for (const auto& tr : ev.jac) {
    int r = map[tr.row()], c = map[tr.col()];
    if (r >= 0 && c >= 0) trip.emplace_back(r, c, tr.value());
  }
  SpMat jac(nact, nact);
  jac.setFromTriplets(trip.begin(), trip.end());
  jac.makeCompressed();
  Vec rhs(nact);
  for (int u = 0; u < lay.size(); ++u)
    if (map[u] >= 0) rhs(map[u]) = -ev.f(u);

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(jac);
  lu.factorize(jac);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularLinearization, "linearized system is singular");
  Vec dx_act = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !dx_act.allFinite())
    throw Error(ErrorCode::SingularLinearization, "linear solve failed");
  Vec dx = Vec::Zero(lay.size());
  for (int u = 0; u < lay.size(); ++u)
    if (map[u] >= 0) dx(u) = dx_act(map[u]);

  double lambda = 1.0;
  bool any_convex = false;
  for (int it = 0; it <= opts.max_halvings; ++it, lambda *= 0.5) {
    Vec trial = x + lambda * dx;
    Eval te = sys.evaluate(trial, false);
    if (te.status == EvalStatus::NonConvex) continue;
    any_convex = true;
    if (te.status != EvalStatus::Ok) continue;
    if (merit_restricted(te, active) < (1.0 - 1e-4 * lambda) * merit_restricted(ev, active)) return {trial, std::move(te)};
  }
  if (!any_convex) throw Error(ErrorCode::ConvexityLost, "no convex iterate along the Newton direction");
  throw Error(ErrorCode::NewtonStall, "damped Newton step failed to reduce the residual");
}

}  // namespace

double PotentialGrid::additive_constant(int /*alpha*/) const {
  if (t <= 0.0) return 0.0;
  if (paper_sign) return 0.0;
  return (c - (1.0 - t) * c0) / (t * arity());
}

Vec PotentialGrid::potential(int alpha) const {
  return (*refs)[alpha].h + phi[alpha] + Vec::Constant(phi[alpha].size(), additive_constant(alpha));
}

Vec PotentialGrid::effective_weight(int alpha) const {
  if (augmented && weight_correction.size() == weights[alpha].size()) return weights[alpha] + weight_correction;
  return weights[alpha];
}

namespace {

double log_weighted_volume(const Polytope& p, const Vec& w) {
  MomentOptions mo;
  mo.shifted = true;
  MomentResult r = polytope_exp_moments(p, w, mo);
  return r.log_shift + std::log(r.i0);
}

// Trapezoid weights plus the exponential tail beyond the box, lumped onto boundary nodes.
Vec effective_node_weights(const Grid& grid, const Vec& log_e) {
  const int nn = grid.size(), m = grid.dim();
  const double h = grid.spacing();
  Vec w(nn);
  for (int i = 0; i < nn; ++i) w(i) = grid.trapezoid_weight(i);
  auto kappa = [&](int node, int nb) { return (log_e(nb) - log_e(node)) / h; };
  for (int i = 0; i < nn; ++i) {
    NodeKind kind = grid.kind(i);
    if (kind == NodeKind::Interior) continue;
    auto axes = grid.boundary_axes(i);
    if (m == 1) {
      w(i) += 1.0 / kappa(i, grid.neighbor(i, 0, -axes[0].second));
    } else if (kind == NodeKind::Face) {
      w(i) += h / kappa(i, grid.neighbor(i, axes[0].first, -axes[0].second));
    } else {
      double kx = kappa(i, grid.neighbor(i, 0, -axes[0].second));
      double ky = kappa(i, grid.neighbor(i, 1, -axes[1].second));
      w(i) += 0.5 * h / kx + 0.5 * h / ky + 1.0 / (kx * ky);
    }
  }
  return w;
}

Vec state_log_e(const PotentialGrid& s) {
  const double tau = s.paper_sign ? -s.t : s.t;
  Vec sum_h = Vec::Zero(s.phi[0].size()), sum_phi = Vec::Zero(s.phi[0].size());
  for (int a = 0; a < s.arity(); ++a) {
    sum_h += (*s.refs)[a].h;
    sum_phi += s.phi[a];
  }
  Vec base = s.paper_sign ? Vec((2.0 * s.t - 1.0) * sum_h) : Vec(-sum_h);
  return base - tau * sum_phi - Vec::Constant(sum_h.size(), s.c);
}

// Central-difference gradient and Hessian of f at an interior node.
void local_derivatives(const Grid& grid, const Vec& f, int i, Vec& g, Mat& d2) {
  const int m = grid.dim();
  const double h = grid.spacing();
  g.resize(m);
  d2.resize(m, m);
  for (int d = 0; d < m; ++d) {
    int lo = grid.neighbor(i, d, -1), hi = grid.neighbor(i, d, 1);
    g(d) = (f(hi) - f(lo)) / (2.0 * h);
    d2(d, d) = (f(hi) - 2.0 * f(i) + f(lo)) / (h * h);
  }
  if (m == 2) {
    int xp = grid.neighbor(i, 0, 1), xm = grid.neighbor(i, 0, -1);
    double v = f(grid.neighbor(xp, 1, 1)) - f(grid.neighbor(xp, 1, -1)) - f(grid.neighbor(xm, 1, 1)) +
               f(grid.neighbor(xm, 1, -1));
    d2(0, 1) = d2(1, 0) = v / (4.0 * h * h);
  }
}

void check_state(const PotentialGrid& s) {
  if (!s.refs || static_cast<int>(s.refs->size()) != s.arity() || s.arity() == 0)
    throw Error(ErrorCode::DegenerateInput, "potential grid is missing reference potentials");
}

}  // namespace

Vec matched_facet_weights(const Polytope& target, const Polytope& summand) {
  const auto& hs = summand.halfspaces();
  Vec w(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double len = hs[i].normal.norm();
    const double reach = support(target, -hs[i].normal / len);
    w(i) = reach > 0.0 ? 1.0 / (len * reach) : 0.5;
  }
  return w;
}

PotentialGrid initial_state(const Decomposition& d, const std::vector<Vec>& weights, const GridSpec& spec,
                            const MaOptions& opts) {
  validate(d);
  if (static_cast<int>(weights.size()) != d.arity()) throw Error(ErrorCode::ArityMismatch, "expected one weight per summand");
  if (spec.dim != d.dim()) throw Error(ErrorCode::DimensionMismatch, "grid dimension differs from decomposition dimension");
  for (const auto& w : weights)
    if (w.size() != d.dim()) throw Error(ErrorCode::DimensionMismatch, "weight length differs from decomposition dimension");
  Grid grid(spec);
  PotentialGrid s;
  s.grid = spec;
  s.polytopes = d.summands;
  s.weights = weights;
  s.paper_sign = opts.paper_sign;
  auto refs = std::make_shared<std::vector<GuilleminReference>>();
  for (const auto& p : d.summands) {
    GuilleminOptions g = opts.guillemin;
    if (opts.matched_reference && g.facet_weights.size() == 0) g.facet_weights = matched_facet_weights(d.target, p);
    refs->push_back(guillemin_reference(p, spec, g));
  }
  s.refs = refs;
  s.phi.assign(d.arity(), Vec::Zero(grid.size()));
  s.log_volume.resize(d.arity());
  for (int a = 0; a < d.arity(); ++a) s.log_volume(a) = log_weighted_volume(d.summands[a], weights[a]);
  s.weight_correction = Vec::Zero(d.dim());
  s.c = 0.0;
  Vec log_e = state_log_e(s);
  Vec w = effective_node_weights(grid, log_e);
  double mass = 0.0;
  for (int i = 0; i < grid.size(); ++i) mass += w(i) * std::exp(log_e(i));
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorCode::BoxTooSmall, "reference mass is not finite");
  s.c = std::log(mass);
  s.c0 = s.c;
  return s;
}

ResidualReport residual(const PotentialGrid& state) {
  check_state(state);
  System sys(state);
  Eval ev = sys.evaluate(sys.pack(state), false);
  if (ev.status != EvalStatus::Ok) throw_status(ev.status);
  ResidualReport r;
  r.fields = std::move(ev.fields);
  r.pde_sup = ev.pde_sup;
  r.boundary_sup = ev.boundary_sup;
  r.mass = ev.mass;
  r.constraint_sup = ev.constraint_sup;
  r.merit = ev.merit;
  r.min_convexity = ev.min_convexity;
  r.tail_mass = ev.tail_mass;
  r.volume_defect.resize(state.arity());
  for (int a = 0; a < state.arity(); ++a)
    r.volume_defect(a) = state.log_volume(a) - log_weighted_volume(state.polytopes[a], state.effective_weight(a));
  return r;
}

PotentialGrid newton_step(const PotentialGrid& state, const MaOptions& opts) {
  check_state(state);
  System sys(state);
  Vec x = sys.pack(state);
  Eval ev = sys.evaluate(x, true);
  if (ev.status != EvalStatus::Ok) throw_status(ev.status);
  StepResult sr = damped_step(sys, x, ev, opts, -1);
  return sys.unpack(sr.x);
}

PotentialGrid newton_solve(const PotentialGrid& state, const MaOptions& opts, NewtonRecord* record, int active) {
  check_state(state);
  if (active >= 0 && (state.t != 0.0 || active >= state.arity()))
    throw Error(ErrorCode::DegenerateInput, "single-summand solves are only decoupled at t = 0");
  System sys(state);
  Vec x = sys.pack(state);
  for (int it = 0; it <= opts.max_newton; ++it) {
    Eval ev = sys.evaluate(x, true);
    if (ev.status != EvalStatus::Ok) throw_status(ev.status);
    double merit = merit_restricted(ev, active);
    if (record) {
      record->iterations = it;
      record->merits.push_back(merit);
    }
    if (merit < opts.tol) return sys.unpack(x);
    if (it == opts.max_newton) break;
    x = damped_step(sys, x, ev, opts, active).x;
  }
  throw Error(ErrorCode::MaxIterationsExceeded, "Newton did not converge within the iteration budget");
}

double min_gradient_slack(const PotentialGrid& state) {
  check_state(state);
  Grid grid(state.grid);
  double best = std::numeric_limits<double>::infinity();
  Vec g;
  Mat d2;
  for (int a = 0; a < state.arity(); ++a) {
    Vec f = (*state.refs)[a].h + state.phi[a];
    for (int i = 0; i < grid.size(); ++i) {
      if (grid.kind(i) != NodeKind::Interior) continue;
      local_derivatives(grid, f, i, g, d2);
      best = std::min(best, min_slack(state.polytopes[a], g));
    }
  }
  return best;
}

PathState continuity_solve(const Decomposition& d, const std::vector<Vec>& weights, const GridSpec& grid,
                           const MaOptions& opts) {
  PotentialGrid start = initial_state(d, weights, grid, opts);
  NewtonRecord rec0;
  start = newton_solve(start, opts, &rec0);
  start.c0 = start.c;

  auto path = std::make_shared<PathState>();
  path->t = 0.0;
  path->state = start;
  path->residual = rec0.merits.empty() ? 0.0 : rec0.merits.back();
  path->min_gradient_slack = min_gradient_slack(start);
  path->history.push_back({0.0, 0.0, true, rec0.iterations, path->residual, ""});

  double dt = opts.dt0;
  while (path->t < 1.0) {
    double tn = std::min(1.0, path->t + dt);
    if (tn > 1.0 - 1e-9) tn = 1.0;
    PotentialGrid trial = path->state;
    trial.t = tn;
    trial.augmented = tn == 1.0;
    NewtonRecord rec;
    PathStep step{tn, dt, false, 0, 0.0, ""};
    try {
      PotentialGrid res = newton_solve(trial, opts, &rec);
      double slack = min_gradient_slack(res);
      if (slack < -opts.confinement_tol) throw Error(ErrorCode::NotConverged, "gradient image leaves the polytope");
      if (res.augmented && res.weight_correction.norm() > opts.weight_correction_tol)
        throw Error(ErrorCode::NotConverged, "t = 1 needs a translation correction of norm " +
                                                 std::to_string(res.weight_correction.norm()));
      step.accepted = true;
      step.newton_iterations = rec.iterations;
      step.merit = rec.merits.back();
      path->state = std::move(res);
      path->t = tn;
      path->residual = step.merit;
      path->min_gradient_slack = slack;
      path->history.push_back(step);
      if (opts.regrow) dt = std::min(opts.dt0, 2.0 * dt);
    } catch (const Error& e) {
      step.newton_iterations = rec.iterations;
      step.merit = rec.merits.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.merits.back();
      step.failure = e.what();
      path->history.push_back(step);
      dt *= 0.5;
      if (dt < opts.dt_min)
        throw PathStuckError("continuation step fell below the minimum at t = " + std::to_string(path->t), path);
    }
  }
  return *path;
}

PushforwardReport verify_pushforward(const PotentialGrid& state) {
  check_state(state);
  Grid grid(state.grid);
  const int m = grid.dim();
  Vec log_e = state_log_e(state);
  Vec w = effective_node_weights(grid, log_e);
  PushforwardReport rep;
  rep.solvability_mass = 0.0;
  for (int i = 0; i < grid.size(); ++i) rep.solvability_mass += w(i) * std::exp(log_e(i));

  Vec g;
  Mat d2;
  for (int a = 0; a < state.arity(); ++a) {
    const Polytope& poly = state.polytopes[a];
    const auto& ref = (*state.refs)[a];
    const Vec weff = state.effective_weight(a);
    Vec f = ref.h + state.phi[a];
    double i0 = 0.0;
    Vec i1 = Vec::Zero(m);
    Mat i2 = Mat::Zero(m, m);
    SummandPushforward sp;
    sp.min_gradient_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i) {
      double mu;
      Vec p;
      if (grid.kind(i) == NodeKind::Interior) {
        local_derivatives(grid, f, i, g, d2);
        mu = std::exp(weff.dot(g)) * d2.determinant() * grid.trapezoid_weight(i);
        p = g;
        sp.min_gradient_slack = std::min(sp.min_gradient_slack, min_slack(poly, g));
      } else {
        mu = std::exp(state.log_volume(a) + log_e(i)) * w(i);
        p = ref.gradient.col(i);
      }
      i0 += mu;
      i1 += mu * p;
      i2 += mu * p * p.transpose();
    }
    MomentResult ex = polytope_exp_moments(poly, weff);
    const double len = std::max(1.0, poly.circumradius());
    sp.i0_rel = std::abs(i0 - ex.i0) / ex.i0;
    sp.i1_rel = (i1 - ex.i1).norm() / (ex.i0 * len);
    sp.i2_rel = (i2 - ex.i2).norm() / (ex.i0 * len * len);
    sp.barycenter = i1 / i0;
    sp.exact_barycenter = ex.barycenter();
    sp.volume_defect = state.log_volume(a) - std::log(ex.i0);
    rep.max_rel_deviation = std::max({rep.max_rel_deviation, sp.i0_rel, sp.i1_rel, sp.i2_rel});
    rep.summands.push_back(std::move(sp));
  }
  return rep;
}

namespace detail {

Linearization linearize(const PotentialGrid& state) {
  check_state(state);
  System sys(state);
  Eval ev = sys.evaluate(sys.pack(state), true);
  if (ev.status != EvalStatus::Ok) throw_status(ev.status);
  Linearization lin;
  lin.residual = ev.f;
  lin.jacobian.resize(sys.layout().size(), sys.layout().size());
  lin.jacobian.setFromTriplets(ev.jac.begin(), ev.jac.end());
  return lin;
}

Vec pack(const PotentialGrid& state) { return System(state).pack(state); }

PotentialGrid unpack(const PotentialGrid& like, const Vec& x) { return System(like).unpack(x); }

}  // namespace detail

}  // namespace csol
