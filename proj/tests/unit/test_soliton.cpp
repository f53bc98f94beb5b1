#include <doctest.h>

#include "oracles.hpp"

using namespace csol;
using oracle::vec;

namespace {

Polytope bl1cp2() { return canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, -1}), vec({1, 1})}); }

// Diagonal soliton constant of Bl1CP2 from bisection on the reduced one-variable integral.
constexpr double kBl1cp2Diagonal = -0.52761951989696282;

Decomposition random_decomposition(std::mt19937_64& rng) {
  Polytope a = oracle::random_polytope(rng, 2, 5);
  Polytope b = oracle::random_polytope(rng, 2, 5);
  return {minkowski_sum(a, b), {a, b}};
}

}  // namespace

TEST_CASE("bisection oracle reproduces the frozen diagonal constant") {
  double c = oracle::bisect(oracle::bl1cp2_diagonal_moment, -3.0, 0.0);
  CHECK(std::abs(c - kBl1cp2Diagonal) < 1e-12);
}

TEST_CASE("G and its derivatives") {
  Decomposition sym{oracle::interval(-1, 1), {oracle::interval(-0.5, 0.5), oracle::interval(-0.5, 0.5)}};
  CHECK(std::abs(g_eval(sym, vec({0})).gradient(0)) < 1e-15);

  Decomposition one{oracle::interval(-1, 1), {oracle::interval(-1, 1)}};
  GValue g = g_eval(one, vec({1}));
  CHECK(g.gradient(0) == doctest::Approx(1 / std::tanh(1.0) - 1).epsilon(1e-14));
  CHECK(g.value == doctest::Approx(std::log(2 * std::sinh(1.0))).epsilon(1e-14));

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Decomposition d = trial == 0 ? Decomposition{bl1cp2(), {bl1cp2()}} : random_decomposition(rng);
    Vec w = oracle::random_vec(rng, 2, 1.5);
    GValue gv = g_eval(d, w);
    const double eps = 1e-5;
    for (int j = 0; j < 2; ++j) {
      Vec e = Vec::Unit(2, j) * eps;
      double fd = (g_eval(d, w + e).value - g_eval(d, w - e).value) / (2 * eps);
      CHECK(std::abs(fd - gv.gradient(j)) < 1e-6 * std::max(1.0, std::abs(gv.gradient(j))));
      Vec fdh = (g_eval(d, w + e).gradient - g_eval(d, w - e).gradient) / (2 * eps);
      CHECK((fdh - gv.hessian.col(j)).norm() < 1e-6 * std::max(1.0, gv.hessian.norm()));
    }
    CHECK((gv.hessian - gv.hessian.transpose()).norm() < 1e-14 * gv.hessian.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(gv.hessian).eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("G is convex along random segments") {
  std::mt19937_64 rng(42);
  Decomposition d{bl1cp2(), {bl1cp2()}};
  for (int seg = 0; seg < 50; ++seg) {
    Vec a = oracle::random_vec(rng, 2, 3), b = oracle::random_vec(rng, 2, 3);
    const int n = 16;
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = g_eval(d, a + (b - a) * (double(i) / n)).value;
    for (int i = 1; i < n; ++i) CHECK(g[i - 1] - 2 * g[i] + g[i + 1] >= -1e-10);
  }
}

TEST_CASE("symmetric decompositions have W = 0 after one evaluation") {
  Polytope sq = canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, 0}), vec({0, -1})});
  Polytope half = linear_image(sq, 0.5 * Mat::Identity(2, 2));
  SolitonSolution s = soliton_field({sq, {half, half}});
  CHECK(s.w.norm() == 0.0);
  CHECK(s.iterations == 1);
}

TEST_CASE("Bl1CP2 soliton field") {
  Decomposition d{bl1cp2(), {bl1cp2()}};
  SolitonSolution s = soliton_field(d);
  CHECK(std::abs(s.w(0) - s.w(1)) < 1e-12);
  CHECK(s.residual < 1e-10);
  CHECK(std::abs(s.w(0) - kBl1cp2Diagonal) < 1e-9);
  CHECK(s.iterations <= 15);
  CHECK(futaki_twisted(d, {s.w}).norm < 1e-9);
  MomentResult q = quadrature_oracle(bl1cp2(), s.w, MomentOrder::First);
  CHECK((q.i1 / q.i0).norm() < 1e-9);
}

TEST_CASE("Newton residuals decrease monotonically") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    Decomposition d = trial == 0 ? Decomposition{bl1cp2(), {bl1cp2()}} : random_decomposition(rng);
    if (min_slack(d.target, Vec::Zero(2)) <= 0.05) continue;
    SolitonOptions opts;
    opts.start = oracle::random_vec(rng, 2, 2);
    SolitonSolution s = soliton_field(d, opts);
    for (std::size_t i = 2; i < s.trace.size(); ++i)
      CHECK(s.trace[i].gradient_norm < s.trace[i - 1].gradient_norm);
  }
}

TEST_CASE("equivariance under linear maps") {
  Decomposition d{bl1cp2(), {bl1cp2()}};
  Vec w = soliton_field(d).w;
  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  Mat scale = vec({2.0, 0.5}).asDiagonal();
  for (const Mat& l : {swap, scale}) {
    Polytope t = linear_image(d.target, l);
    SolitonSolution s = soliton_field({t, {t}});
    Vec expect = l.transpose().inverse() * w;
    CHECK((s.w - expect).norm() < 1e-9);
  }
}

TEST_CASE("the soliton field does not depend on the start") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 6; ++trial) {
    Decomposition d = trial == 0 ? Decomposition{bl1cp2(), {bl1cp2()}} : random_decomposition(rng);
    if (min_slack(d.target, Vec::Zero(2)) <= 0.05) continue;
    SolitonOptions opts;
    opts.start = oracle::random_vec(rng, 2, 3);
    CHECK((soliton_field(d).w - soliton_field(d, opts).w).norm() < 1e-9);
  }
}

TEST_CASE("two-summand splits of Bl1CP2 have a soliton field that balances the twisted vector") {
  Polytope bl = bl1cp2();
  Polytope half = translate(linear_image(bl, 0.5 * Mat::Identity(2, 2)), vec({0.25, -0.1}));
  Polytope other = translate(linear_image(bl, 0.5 * Mat::Identity(2, 2)), vec({-0.25, 0.1}));
  Decomposition d{bl, {half, other}};
  SolitonSolution s = soliton_field(d);
  CHECK(s.residual < 1e-10);
  CHECK(std::abs(s.w(0) - s.w(1)) < 1e-10);
  CHECK(futaki_twisted(d, {s.w, s.w}).norm < 1e-9);
}

TEST_CASE("origin outside the target") {
  Decomposition d{oracle::interval(0.2, 1), {oracle::interval(0.2, 1)}};
  try {
    soliton_field(d);
    FAIL("expected OriginNotInterior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OriginNotInterior);
  }
}

TEST_CASE("iteration budget") {
  SolitonOptions opts;
  opts.max_iter = 1;
  try {
    soliton_field({bl1cp2(), {bl1cp2()}}, opts);
    FAIL("expected MaxIterationsExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MaxIterationsExceeded);
  }
}
