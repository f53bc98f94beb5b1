#include <doctest.h>

#include "oracles.hpp"

using namespace csol;
using oracle::vec;

namespace {

Decomposition ke_baseline() { return {oracle::interval(-1, 1), {oracle::interval(-1, 1)}}; }
Decomposition coupled_baseline() {
  return {oracle::interval(-1, 1), {oracle::interval(-0.5, 0.5), oracle::interval(-0.5, 0.5)}};
}
std::vector<Vec> zeros(int k, int m) { return std::vector<Vec>(k, Vec::Zero(m)); }

// Sup-norm distance modulo an additive constant.
double sup_error(const Vec& f, const GridSpec& spec, double (*exact)(double)) {
  Grid g(spec);
  double hi = -INFINITY, lo = INFINITY;
  for (int i = 0; i < g.size(); ++i) {
    double d = f(i) - exact(g.coord(i));
    hi = std::max(hi, d);
    lo = std::min(lo, d);
  }
  return 0.5 * (hi - lo);
}

double ke_exact(double x) { return 2 * std::log(std::cosh(x / 2)) + 2 * std::log(2.0); }
double coupled_exact(double x) { return std::log(std::cosh(x / 2)) + std::log(2.0); }

// Largest relative column error of the assembled Jacobian against fourth-order central
// differences; far-field log det terms are too curved for the second-order formula.
double jacobian_fd_error(const PotentialGrid& s) {
  detail::Linearization lin = detail::linearize(s);
  Mat jac = Mat(lin.jacobian);
  Vec x = detail::pack(s);
  auto res = [&](const Vec& y) { return detail::linearize(detail::unpack(s, y)).residual; };
  double worst = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double eps = 1e-7 * std::max(1.0, std::abs(x(j)));
    Vec e = Vec::Unit(x.size(), j) * eps;
    Vec fd = (8 * (res(x + e) - res(x - e)) - (res(x + 2 * e) - res(x - 2 * e))) / (12 * eps);
    double scale = std::max(1.0, jac.col(j).norm());
    worst = std::max(worst, (fd - jac.col(j)).norm() / scale);
  }
  return worst;
}

// Smooth perturbation scaled by the reference curvature, which keeps far-field nodes convex.
PotentialGrid perturbed(PotentialGrid s, double amplitude) {
  Grid g(s.grid);
  for (int a = 0; a < s.arity(); ++a) {
    const GuilleminReference& ref = (*s.refs)[a];
    for (int i = 0; i < g.size(); ++i) {
      Vec x = g.coords(i);
      s.phi[a](i) += amplitude * ref.hessian_at(i).trace() * std::sin(0.7 * x.sum() + 0.3);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("state construction validates its inputs") {
  CHECK_THROWS_AS(initial_state(ke_baseline(), zeros(2, 1), {1, 64, 12.0}), Error);
  CHECK_THROWS_AS(initial_state(ke_baseline(), zeros(1, 1), {2, 16, 8.0}), Error);
  PotentialGrid s = initial_state(ke_baseline(), zeros(1, 1), {1, 64, 12.0});
  CHECK(s.t == 0.0);
  CHECK(s.phi[0].norm() == 0.0);
  CHECK(s.log_volume(0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("Jacobian matches finite differences") {
  SUBCASE("1-D coupled, intermediate t") {
    PotentialGrid s = initial_state(coupled_baseline(), zeros(2, 1), {1, 24, 8.0});
    s = perturbed(s, 0.05);
    s.t = 0.6;
    s.c += 0.1;
    CHECK(jacobian_fd_error(s) < 1e-6);
  }
  SUBCASE("1-D, t = 1 with the translation correction") {
    Decomposition d{oracle::interval(-1, 1), {oracle::interval(-1, 0.3), oracle::interval(0, 0.7)}};
    PotentialGrid s = initial_state(d, {vec({0.2}), vec({-0.1})}, {1, 20, 8.0});
    s = perturbed(s, 0.05);
    s.t = 1.0;
    s.augmented = true;
    s.weight_correction = vec({0.03});
    CHECK(jacobian_fd_error(s) < 1e-6);
  }
  SUBCASE("2-D square") {
    Decomposition d{oracle::box2(-1, 1), {oracle::box2(-1, 1)}};
    PotentialGrid s = initial_state(d, zeros(1, 2), {2, 8, 6.0});
    s = perturbed(s, 0.02);
    s.t = 1.0;
    s.augmented = true;
    CHECK(jacobian_fd_error(s) < 1e-6);
  }
}

TEST_CASE("t = 0 decouples the summands") {
  Decomposition d{oracle::interval(-1, 1), {oracle::interval(-1, 0.2), oracle::interval(0, 0.8)}};
  PotentialGrid s = initial_state(d, zeros(2, 1), {1, 128, 12.0});
  detail::Linearization lin = detail::linearize(s);
  const int nodes = static_cast<int>(s.phi[0].size());
  // No phi_0 row depends on phi_1 and vice versa.
  for (int k = 0; k < lin.jacobian.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(lin.jacobian, k); it; ++it) {
      bool r0 = it.row() < nodes, r1 = it.row() >= nodes && it.row() < 2 * nodes;
      bool c0 = it.col() < nodes, c1 = it.col() >= nodes && it.col() < 2 * nodes;
      if ((r0 && c1) || (r1 && c0)) CHECK(it.value() == 0.0);
    }

  MaOptions opts;
  opts.tol = 1e-12;
  PotentialGrid one = newton_solve(newton_solve(s, opts, nullptr, 0), opts, nullptr, 1);
  PotentialGrid joint = newton_solve(s, opts);
  for (int a = 0; a < 2; ++a) CHECK((one.phi[a] - joint.phi[a]).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(one.c - joint.c) < 1e-10);
  s.t = 0.5;
  CHECK_THROWS_AS(newton_solve(s, opts, nullptr, 0), Error);
}

TEST_CASE("Newton on a perturbed baseline solution") {
  GridSpec spec{1, 256, 12.0};
  PathState ps = continuity_solve(ke_baseline(), zeros(1, 1), spec);
  PotentialGrid start = perturbed(ps.state, 1e-3);
  double before = residual(start).merit;
  double after = residual(newton_step(start)).merit;
  CHECK(after <= before / 10);

  MaOptions opts;
  opts.tol = 1e-13;
  NewtonRecord rec;
  try {
    newton_solve(perturbed(ps.state, 3e-2), opts, &rec);
  } catch (const Error&) {
    // Rounding may stop the last iteration short of 1e-13; the first ones are what matter.
  }
  REQUIRE(rec.merits.size() >= 3);
  // Observed order log(r2 / r1) / log(r1 / r0) over the first three iterates.
  double order = std::log(rec.merits[2] / rec.merits[1]) / std::log(rec.merits[1] / rec.merits[0]);
  MESSAGE("merits " << rec.merits[0] << " " << rec.merits[1] << " " << rec.merits[2] << " order " << order);
  CHECK(order > 1.6);
  CHECK(rec.merits[2] < 1e-3 * rec.merits[1]);
}

TEST_CASE("non-convex iterates are refused") {
  PotentialGrid s = initial_state(ke_baseline(), zeros(1, 1), {1, 64, 12.0});
  Grid g(s.grid);
  for (int i = 0; i < g.size(); ++i) s.phi[0](i) -= 0.5 * g.coord(i) * g.coord(i);
  try {
    newton_step(s);
    FAIL("expected NonConvexIterate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvexIterate);
  }
  CHECK_THROWS_AS(residual(s), Error);
}

TEST_CASE("KE baseline converges at second order") {
  std::vector<double> err;
  for (int n : {256, 512, 1024, 2048}) {
    GridSpec spec{1, n, 12.0};
    PathState ps = continuity_solve(ke_baseline(), zeros(1, 1), spec);
    CHECK(ps.t == 1.0);
    CHECK(ps.residual < 1e-8);
    err.push_back(sup_error(ps.state.potential(0), spec, ke_exact));
    ResidualReport r = residual(ps.state);
    CHECK(r.min_convexity > 0);
    CHECK(std::abs(r.volume_defect(0)) < 1e-6);
    PushforwardReport pf = verify_pushforward(ps.state);
    CHECK(pf.summands[0].i0_rel < 1e-3);
    CHECK(pf.summands[0].min_gradient_slack >= -1e-8);
    CHECK(std::abs(pf.summands[0].barycenter(0)) < 1e-6);
    if (n == 2048) {
      CHECK(err.back() < 5e-4);
      CHECK(pf.max_rel_deviation < 1e-4);
      // Both sides of the solvability identity carry the same mass, which is one here.
      CHECK(std::abs(pf.solvability_mass - 1.0) < 1e-6);
      CHECK(pf.summands[0].i0_rel < 1e-5);
    }
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    double order = std::log2(err[i - 1] / err[i]);
    CHECK(order > 1.8);
    CHECK(order < 2.2);
  }
}

TEST_CASE("coupled baseline converges at second order") {
  std::vector<double> err;
  for (int n : {256, 512, 1024, 2048}) {
    GridSpec spec{1, n, 12.0};
    PathState ps = continuity_solve(coupled_baseline(), zeros(2, 1), spec);
    CHECK(ps.t == 1.0);
    double e = std::max(sup_error(ps.state.potential(0), spec, coupled_exact),
                        sup_error(ps.state.potential(1), spec, coupled_exact));
    err.push_back(e);
    CHECK((ps.state.potential(0) - ps.state.potential(1)).cwiseAbs().maxCoeff() < 1e-9);
    PushforwardReport pf = verify_pushforward(ps.state);
    CHECK(pf.max_rel_deviation < 1e-4);
    CHECK(residual(ps.state).volume_defect.cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(err.back() < 5e-4);
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) > 1.8);
}

TEST_CASE("gradient confinement along the path") {
  PathState ps = continuity_solve(coupled_baseline(), zeros(2, 1), {1, 512, 12.0});
  CHECK(ps.min_gradient_slack >= -1e-8);
  CHECK(min_gradient_slack(ps.state) >= -1e-8);
  for (const PathStep& step : ps.history)
    if (step.accepted) CHECK(step.merit < 1e-9);
}

TEST_CASE("obstructed interval gets stuck before t = 1, reproducibly") {
  Decomposition d{oracle::interval(-1, 0.5), {oracle::interval(-1, 0.5)}};
  double reached[2];
  for (double& t : reached) {
    try {
      continuity_solve(d, zeros(1, 1), {1, 512, 12.0});
      FAIL("expected PathStuck");
    } catch (const PathStuckError& e) {
      CHECK(e.code() == ErrorCode::PathStuck);
      t = e.reached_t();
      CHECK(e.last_good().state.t == t);
    }
  }
  CHECK(reached[0] < 1.0);
  CHECK(reached[0] > 0.0);
  CHECK(reached[0] == reached[1]);
}

TEST_CASE("soliton weights unblock the obstructed interval") {
  Decomposition d{oracle::interval(-1, 0.5), {oracle::interval(-1, 0.5)}};
  SolitonSolution sol = soliton_field(d);
  PathState ps = continuity_solve(d, {sol.w}, {1, 1024, 12.0});
  CHECK(ps.t == 1.0);
  CHECK(ps.state.weight_correction.norm() < 1e-3);
  CHECK(verify_pushforward(ps.state).max_rel_deviation < 1e-4);
}

TEST_CASE("the positive exponent sign does not reach t = 1") {
  MaOptions opts;
  opts.paper_sign = true;
  CHECK_THROWS_AS(continuity_solve(ke_baseline(), zeros(1, 1), {1, 256, 12.0}, opts), PathStuckError);
}

TEST_CASE("truncation mass shrinks as the box grows") {
  double prev = INFINITY;
  for (double r : {6.0, 9.0, 12.0}) {
    PathState ps = continuity_solve(ke_baseline(), zeros(1, 1), {1, static_cast<int>(64 * r), r});
    double tail = residual(ps.state).tail_mass;
    CHECK(tail < prev);
    prev = tail;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("2-D square reaches t = 1") {
  Decomposition d{oracle::box2(-1, 1), {oracle::box2(-1, 1)}};
  GridSpec spec{2, 64, 8.0};
  PathState ps = continuity_solve(d, zeros(1, 2), spec);
  CHECK(ps.t == 1.0);
  ResidualReport r = residual(ps.state);
  CHECK(r.min_convexity > 0);
  PushforwardReport pf = verify_pushforward(ps.state);
  CHECK(pf.max_rel_deviation < 2e-3);
  CHECK(pf.summands[0].barycenter.norm() < 1e-6);
  // The square solution is the sum of two 1-D KE potentials.
  Grid g(spec);
  Vec f = ps.state.potential(0);
  double hi = -INFINITY, lo = INFINITY;
  for (int i = 0; i < g.size(); ++i) {
    if (g.kind(i) != NodeKind::Interior) continue;
    Vec x = g.coords(i);
    if (x.cwiseAbs().maxCoeff() > 4.0) continue;
    double dd = f(i) - ke_exact(x(0)) - ke_exact(x(1));
    hi = std::max(hi, dd);
    lo = std::min(lo, dd);
  }
  MESSAGE("2-D core error " << 0.5 * (hi - lo));
  CHECK(0.5 * (hi - lo) < 1e-2);
}
