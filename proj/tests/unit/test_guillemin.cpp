#include <doctest.h>

#include "oracles.hpp"

using namespace csol;
using oracle::vec;

TEST_CASE("grid geometry") {
  Grid g({2, 4, 2.0});
  CHECK(g.size() == 25);
  CHECK(g.spacing() == 1.0);
  CHECK(g.kind(g.center()) == NodeKind::Interior);
  CHECK(g.kind(0) == NodeKind::Corner);
  CHECK(g.kind(2) == NodeKind::Face);
  CHECK(g.coords(g.center()).norm() == 0.0);
  CHECK(g.neighbor(0, 0, -1) == -1);
  double total = 0;
  for (int i = 0; i < g.size(); ++i) total += g.trapezoid_weight(i);
  CHECK(total == doctest::Approx(16.0).epsilon(1e-15));
  auto axes = g.boundary_axes(g.size() - 1);
  CHECK(axes.size() == 2);
  CHECK(axes[0].second == 1);
}

TEST_CASE("reference on [-1, 1] is log cosh") {
  // u = 1/2 sum l log l gives u'(p) = artanh(p), so h = log cosh and p = tanh.
  GridSpec spec{1, 96, 12.0};
  GuilleminReference r = guillemin_reference(oracle::interval(-1, 1), spec);
  Grid g(spec);
  for (int i = 0; i < g.size(); ++i) {
    double x = g.coord(i);
    CHECK(std::abs(r.h(i) - std::log(std::cosh(x))) < 1e-12 * std::max(1.0, std::abs(x)));
    CHECK(std::abs(r.gradient(0, i) - std::tanh(x)) < 1e-13);
    CHECK(std::abs(r.hessian(0, i) - 1 / (std::cosh(x) * std::cosh(x))) < 1e-12);
    CHECK(std::abs(r.h(i) - std::abs(x)) <= std::log(2.0) + 1e-12);
  }
  CHECK(r.gradient(0, 0) < -1 + 1e-9);
  CHECK(r.gradient(0, g.size() - 1) > 1 - 1e-9);
  CHECK(r.max_support_gap == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(r.max_facet_gap < 1e-9);
}

TEST_CASE("unit facet weights give 2 log cosh(x / 2)") {
  GridSpec spec{1, 64, 12.0};
  GuilleminOptions opts;
  opts.facet_weights = vec({1.0, 1.0});
  GuilleminReference r = guillemin_reference(oracle::interval(-1, 1), spec, opts);
  Grid g(spec);
  for (int i = 0; i < g.size(); ++i) {
    double x = g.coord(i);
    CHECK(std::abs(r.h(i) - 2 * std::log(std::cosh(x / 2))) < 1e-12 * std::max(1.0, std::abs(x)));
  }
  opts.facet_weights = vec({1.0, -1.0});
  CHECK_THROWS_AS(guillemin_reference(oracle::interval(-1, 1), spec, opts), Error);
  opts.facet_weights = vec({1.0});
  CHECK_THROWS_AS(guillemin_reference(oracle::interval(-1, 1), spec, opts), Error);
}

TEST_CASE("reference on [0, 1] is centred at p = 1/2") {
  LegendrePoint lp = guillemin_dual(oracle::interval(0, 1), vec({0}), vec({0.2}));
  CHECK(lp.p(0) == doctest::Approx(0.5).epsilon(1e-14));
  GridSpec spec{1, 32, 16.0};
  GuilleminReference r = guillemin_reference(oracle::interval(0, 1), spec);
  CHECK(r.gradient(0, Grid(spec).center()) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("reference on the square is separable") {
  GridSpec s1{1, 32, 10.0}, s2{2, 32, 10.0};
  GuilleminReference one = guillemin_reference(oracle::interval(-1, 1), s1);
  GuilleminReference two = guillemin_reference(oracle::box2(-1, 1), s2);
  Grid g(s2);
  for (int idx = 0; idx < g.size(); ++idx) {
    auto ij = g.multi_index(idx);
    CHECK(std::abs(two.h(idx) - one.h(ij[0]) - one.h(ij[1])) < 1e-12);
    CHECK(std::abs(two.gradient(0, idx) - one.gradient(0, ij[0])) < 1e-13);
  }
}

TEST_CASE("reference invariants on a 2-D polytope") {
  Polytope p = canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, -1})});
  GridSpec spec{2, 64, 6.0};
  GuilleminOptions opts;
  opts.facet_weights = matched_facet_weights(p, p);
  GuilleminReference r = guillemin_reference(p, spec, opts);
  Grid g(spec);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(min_slack(p, r.gradient.col(i)) > 0);
    Eigen::SelfAdjointEigenSolver<Mat> es(r.hessian_at(i));
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
  CHECK(std::isfinite(r.max_support_gap));
  CHECK(r.max_support_gap < 5.0);

  // The Legendre relation: h(x) = <x, p> - u(p) with x = Du(p), checked through a derivative.
  const double eps = 1e-6;
  Vec x = vec({0.7, -1.3});
  LegendrePoint a = guillemin_dual(p, x, p.vertex_mean());
  for (int j = 0; j < 2; ++j) {
    Vec e = Vec::Unit(2, j) * eps;
    double fd = (guillemin_dual(p, x + e, a.p).value - guillemin_dual(p, x - e, a.p).value) / (2 * eps);
    CHECK(std::abs(fd - a.p(j)) < 1e-8);
  }
}

TEST_CASE("references that fail discrete convexity are rejected") {
  // The 1/2 weights on a fan that is not aligned with the grid axes flatten too unevenly.
  Polytope p = canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, -1})});
  try {
    guillemin_reference(p, {2, 64, 6.0});
    FAIL("expected GridTooCoarse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridTooCoarse);
  }
}

TEST_CASE("small boxes are rejected") {
  try {
    guillemin_reference(oracle::interval(-1, 1), {1, 32, 1.0});
    FAIL("expected BoxTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoxTooSmall);
  }
}

TEST_CASE("matched facet weights") {
  Polytope target = canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, -1}), vec({1, 1})});
  Polytope half = linear_image(target, 0.5 * Mat::Identity(2, 2));
  Vec w = matched_facet_weights(target, half);
  REQUIRE(w.size() == static_cast<Eigen::Index>(half.halfspaces().size()));
  for (std::size_t i = 0; i < half.halfspaces().size(); ++i) {
    const Vec& n = half.halfspaces()[i].normal;
    double reach = oracle::support_of(target.vertices(), -n / n.norm());
    CHECK(w(i) == doctest::Approx(1 / (n.norm() * reach)).epsilon(1e-14));
  }
  // Canonical facets sit at distance 1 / |n| from the origin, so the weights are all one.
  CHECK((matched_facet_weights(oracle::interval(-1, 1), oracle::interval(-1, 1)).array() - 1).abs().maxCoeff() < 1e-15);
}
