#include <doctest.h>

#include "oracles.hpp"

using namespace csol;
using oracle::vec;

namespace {

bool same_point_set(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (const Vec& p : a) {
    bool hit = false;
    for (const Vec& q : b) hit = hit || (p - q).norm() < tol;
    if (!hit) return false;
  }
  return true;
}

std::vector<Vec> fan_cp2() { return {vec({1, 0}), vec({0, 1}), vec({-1, -1})}; }

}  // namespace

TEST_CASE("canonical polytope of the CP1 fan is [-1, 1]") {
  Polytope p = canonical_polytope({vec({1}), vec({-1})});
  REQUIRE(p.vertices().size() == 2);
  CHECK(same_point_set(p.vertices(), {vec({-1}), vec({1})}, 1e-12));
}

TEST_CASE("canonical polytope of the CP2 fan matches facet intersection") {
  Polytope p = canonical_polytope(fan_cp2());
  std::vector<Vec> expected = oracle::brute_force_vertices(fan_cp2(), {1, 1, 1});
  CHECK(expected.size() == 3);
  CHECK(same_point_set(p.vertices(), expected, 1e-12));
  CHECK(same_point_set(p.vertices(), {vec({-1, -1}), vec({2, -1}), vec({-1, 2})}, 1e-12));
  CHECK(p.halfspaces().size() == 3);
}

TEST_CASE("canonical polytope rejects fans that do not bound") {
  CHECK_THROWS_AS(canonical_polytope({vec({1, 0})}), Error);
  try {
    canonical_polytope({vec({1, 0})});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundedPolytope);
  }
  try {
    canonical_polytope({vec({1, 0}), vec({0, 1}), vec({1, 1})});
    FAIL("expected UnboundedPolytope");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundedPolytope);
  }
}

TEST_CASE("canonical polytopes contain the origin strictly") {
  std::vector<std::vector<Vec>> fans = {
      {vec({1}), vec({-1})},
      fan_cp2(),
      {vec({1, 0}), vec({0, 1}), vec({-1, -1}), vec({1, 1})},
      {vec({1, 0}), vec({0, 1}), vec({-1, 0}), vec({0, -1})},
      {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1}), vec({-1, -1, -1})},
  };
  for (const auto& fan : fans) {
    Polytope p = canonical_polytope(fan);
    CHECK(min_slack(p, Vec::Zero(p.dim())) > 0.1);
    CHECK(p.halfspaces().size() == fan.size());
  }
}

TEST_CASE("Reeb slices of the quadrant") {
  MomentCone cone{{vec({1, 0}), vec({0, 1})}};
  ReebSlice s = reeb_slice(cone, vec({1, 1}));
  CHECK(s.dropped_axis == 1);
  CHECK(same_point_set(s.polytope.vertices(), {vec({0}), vec({1})}, 1e-12));

  // Edge points (1, 0) and (0, 1/sqrt 2) both project onto the kept first coordinate.
  ReebSlice r = reeb_slice(cone, vec({1, std::sqrt(2.0)}));
  CHECK(r.dropped_axis == 1);
  CHECK(same_point_set(r.polytope.vertices(), {vec({0}), vec({1})}, 1e-12));
  Vec top = r.lift(vec({0}));
  CHECK(top(1) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r.lift(vec({0.3})).dot(r.xi) == doctest::Approx(1.0).epsilon(1e-14));

  try {
    reeb_slice(cone, vec({1, -1}));
    FAIL("expected UnboundedSlice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundedSlice);
  }
}

TEST_CASE("Reeb slice facets are projected cone facets") {
  MomentCone cone{{vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1}), vec({1, 1, -0.5})}};
  Vec xi = vec({std::sqrt(2.0), M_PI / 3, 1.0});
  ReebSlice s = reeb_slice(cone, xi);
  CHECK(s.polytope.dim() == 2);
  for (const Vec& v : s.polytope.vertices()) {
    Vec p = s.lift(v);
    CHECK(p.dot(xi) == doctest::Approx(1.0).epsilon(1e-12));
    for (const Vec& n : cone.normals) CHECK(n.dot(p) >= -1e-12);
  }
}

TEST_CASE("vertex and halfspace conversions") {
  std::vector<Halfspace> square = {{vec({1, 0}), 1}, {vec({-1, 0}), 1}, {vec({0, 1}), 1}, {vec({0, -1}), 1}};
  CHECK(same_point_set(vertices_from_halfspaces(square),
                       {vec({1, 1}), vec({1, -1}), vec({-1, 1}), vec({-1, -1})}, 1e-12));

  auto hs = halfspaces_from_vertices({vec({0, 0}), vec({1, 0}), vec({0, 1})});
  REQUIRE(hs.size() == 3);
  // Each facet is tight at exactly two of the three vertices and positive at the third.
  for (const auto& h : hs) {
    int tight = 0;
    for (const Vec& v : {vec({0, 0}), vec({1, 0}), vec({0, 1})}) {
      CHECK(h.slack(v) > -1e-12);
      tight += std::abs(h.slack(v)) < 1e-12;
    }
    CHECK(tight == 2);
  }
  CHECK(hs[0].slack(vec({0.2, 0.2})) > 0);

  CHECK_THROWS_AS(halfspaces_from_vertices({vec({0, 0}), vec({1, 1}), vec({2, 2})}), Error);
}

TEST_CASE("random 7-facet polygons survive H -> V -> H") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(0, 2 * M_PI), off(0.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a;
    for (int i = 0; i < 7; ++i) a.push_back(ang(rng));
    std::sort(a.begin(), a.end());
    // Reject fans with a gap of pi or more (unbounded) and near-parallel facet pairs.
    bool ok = a.front() + 2 * M_PI - a.back() < 2.8;
    for (int i = 1; i < 7; ++i) ok = ok && a[i] - a[i - 1] < 2.8 && a[i] - a[i - 1] > 0.15;
    if (!ok) continue;
    std::vector<Vec> normals;
    std::vector<double> offsets;
    std::vector<Halfspace> hs;
    for (double t : a) {
      normals.push_back(vec({std::cos(t), std::sin(t)}));
      offsets.push_back(off(rng));
      hs.push_back({normals.back(), offsets.back()});
    }
    std::vector<Vec> verts = oracle::brute_force_vertices(normals, offsets);
    Polytope p = Polytope::from_halfspaces(hs);
    CHECK(same_point_set(p.vertices(), verts, 1e-9));
    Polytope q = Polytope::from_vertices(p.vertices());
    CHECK(q.halfspaces().size() == p.halfspaces().size());
    Polytope r = Polytope::from_halfspaces(q.halfspaces());
    CHECK(same_point_set(r.vertices(), p.vertices(), 1e-9));
  }
}

TEST_CASE("round trips preserve support functions") {
  std::mt19937_64 rng(11);
  for (int m = 2; m <= 3; ++m) {
    for (int trial = 0; trial < 5; ++trial) {
      Polytope p = oracle::random_polytope(rng, m, 12);
      Polytope hv = Polytope::from_halfspaces(p.halfspaces());
      Polytope vh = Polytope::from_vertices(hv.vertices());
      for (int k = 0; k < 200; ++k) {
        Vec u = oracle::random_vec(rng, m, 1.0);
        double s = oracle::support_of(p.vertices(), u);
        CHECK(std::abs(support(hv, u) - s) < 1e-9);
        CHECK(std::abs(support(vh, u) - s) < 1e-9);
      }
    }
  }
}

TEST_CASE("Minkowski sums") {
  Polytope s = minkowski_sum(oracle::interval(-1, 0), oracle::interval(0, 1));
  CHECK(same_point_set(s.vertices(), {vec({-1}), vec({1})}, 1e-12));

  Polytope sq = minkowski_sum(oracle::box2(-1, 1), oracle::box2(-1, 1));
  CHECK(same_point_set(sq.vertices(), oracle::box2(-2, 2).vertices(), 1e-12));

  CHECK_THROWS_AS(minkowski_sum(oracle::interval(0, 1), oracle::box2(0, 1)), Error);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Polytope a = oracle::random_polytope(rng, 2, 3);
    Polytope b = oracle::random_polytope(rng, 2, 3);
    Polytope sum = minkowski_sum(a, b);
    std::vector<Vec> hull = oracle::convex_hull_2d(oracle::vertex_sums(a.vertices(), b.vertices()));
    CHECK(same_point_set(sum.vertices(), hull, 1e-10));
    for (int k = 0; k < 100; ++k) {
      Vec u = oracle::random_vec(rng, 2, 1.0);
      CHECK(std::abs(support(sum, u) - support(a, u) - support(b, u)) < 1e-10);
    }
  }
}

TEST_CASE("Minkowski sums in three dimensions match vertex sums") {
  std::mt19937_64 rng(5);
  Polytope a = oracle::random_polytope(rng, 3, 6);
  Polytope b = oracle::random_polytope(rng, 3, 6);
  Polytope sum = minkowski_sum(a, b);
  std::vector<Vec> sums = oracle::vertex_sums(a.vertices(), b.vertices());
  for (int k = 0; k < 100; ++k) {
    Vec u = oracle::random_vec(rng, 3, 1.0);
    CHECK(std::abs(support(sum, u) - oracle::support_of(sums, u)) < 1e-10);
  }
}

TEST_CASE("decomposition checks") {
  DecompositionCheck ok = check_decomposition({oracle::interval(-1, 0), oracle::interval(0, 1)},
                                              oracle::interval(-1, 1), 1e-9);
  CHECK(ok.pass);
  CHECK(ok.max_deviation < 1e-12);
  CHECK(ok.facets_parallel);

  DecompositionCheck bad = check_decomposition({oracle::interval(-1, 0), oracle::interval(0, 0.9)},
                                               oracle::interval(-1, 1), 1e-9);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_deviation == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(bad.worst_direction(0) > 0);
  CHECK(bad.worst_signed_deviation == doctest::Approx(0.1).epsilon(1e-12));

  Polytope cp2 = canonical_polytope(fan_cp2());
  Polytope half = linear_image(cp2, 0.5 * Mat::Identity(2, 2));
  DecompositionCheck homothets = check_decomposition({half, half}, cp2, 1e-9);
  CHECK(homothets.pass);
  CHECK(homothets.facets_parallel);
  std::vector<Vec> hull = oracle::convex_hull_2d(oracle::vertex_sums(half.vertices(), half.vertices()));
  CHECK(same_point_set(hull, cp2.vertices(), 1e-12));

  DecompositionCheck skew = check_decomposition({oracle::box2(-0.5, 0.5), half}, cp2, 1e-9);
  CHECK_FALSE(skew.pass);
  CHECK_FALSE(skew.facets_parallel);
  CHECK_FALSE(skew.non_parallel_facets.empty());

  DecompositionCheck mixed = check_decomposition({oracle::interval(0, 1)}, cp2, 1e-9);
  CHECK(mixed.dimension_mismatch);
  CHECK_FALSE(mixed.pass);
}

TEST_CASE("triangulation, volume and containment") {
  Polytope sq = oracle::box2(0, 1);
  auto simplices = triangulate(sq);
  CHECK(simplices.size() == 2);
  double total = 0;
  for (const auto& s : simplices) total += s.volume();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

  Polytope cp2 = canonical_polytope(fan_cp2());
  oracle::PolygonMoments sh = oracle::shoelace(cp2.vertices());
  CHECK(sh.area == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(volume(cp2) == doctest::Approx(sh.area).epsilon(1e-14));
  CHECK(volume(translate(cp2, vec({3.5, -2}))) == doctest::Approx(4.5).epsilon(1e-13));

  CHECK(contains(oracle::interval(-1, 1), vec({1.0001}), 1e-3));
  CHECK_FALSE(contains(oracle::interval(-1, 1), vec({1.0001}), 1e-6));

  CHECK_THROWS_AS(Polytope::from_vertices({vec({0, 0}), vec({1, 1})}), Error);
}

TEST_CASE("triangulations partition random polytopes") {
  std::mt19937_64 rng(13);
  for (int m = 1; m <= 3; ++m) {
    for (int trial = 0; trial < 6; ++trial) {
      Polytope p = oracle::random_polytope(rng, m, 4 + 3 * m);
      double ref = 0;
      if (m == 2) ref = oracle::shoelace(p.vertices()).area;
      double first = 0;
      for (int apex = 0; apex < static_cast<int>(p.vertices().size()); ++apex) {
        double sum = 0;
        for (const auto& s : triangulate(p, apex)) sum += s.volume();
        if (apex == 0) first = sum;
        CHECK(std::abs(sum - first) <= 1e-12 * first);
      }
      CHECK(std::abs(volume(p) - first) <= 1e-12 * first);
      if (m == 2) CHECK(std::abs(first - ref) <= 1e-12 * ref);
      if (m == 1) CHECK(first == doctest::Approx(std::abs(p.vertices()[0](0) - p.vertices()[1](0))));
    }
  }
}

TEST_CASE("irrational data is accepted everywhere") {
  Vec n1 = vec({1, std::sqrt(2.0)}), n2 = vec({-M_PI / 4, 1}), n3 = vec({-0.1, -std::exp(1.0)});
  Polytope p = canonical_polytope({n1, n2, n3});
  CHECK(p.vertices().size() == 3);
  CHECK(same_point_set(p.vertices(), oracle::brute_force_vertices({n1, n2, n3}, {1, 1, 1}), 1e-12));
}
