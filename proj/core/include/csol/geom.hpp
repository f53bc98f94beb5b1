#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace csol {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Affine halfspace <normal, p> + offset >= 0.
struct Halfspace {
  Vec normal;
  double offset = 0.0;

  double slack(const Vec& p) const { return normal.dot(p) + offset; }
};

struct GeomTolerance {
  double relative = 1e-9;
};

// Full-dimensional convex polytope carrying both representations.
class Polytope {
 public:
  Polytope() = default;

  // Redundant halfspaces are dropped; the surviving ones keep their input scaling.
  static Polytope from_halfspaces(const std::vector<Halfspace>& halfspaces, GeomTolerance tol = {});
  // Facet normals come out unit length; interior points are discarded.
  static Polytope from_vertices(const std::vector<Vec>& points, GeomTolerance tol = {});

  int dim() const { return dim_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const Vec& vertex_mean() const { return center_; }
  double circumradius() const { return radius_; }
  // Absolute tolerance for predicates: relative * max(1, circumradius).
  double tolerance() const { return tol_.relative * std::max(1.0, radius_); }
  GeomTolerance geom_tolerance() const { return tol_; }

 private:
  void finish();

  int dim_ = 0;
  std::vector<Halfspace> halfspaces_;
  std::vector<Vec> vertices_;
  Vec center_;
  double radius_ = 0.0;
  GeomTolerance tol_;
};

struct Simplex {
  std::vector<Vec> vertices;

  int dim() const { return static_cast<int>(vertices.size()) - 1; }
  // det[v1 - v0, ..., vm - v0] / m!
  double signed_volume() const;
  double volume() const { return std::abs(signed_volume()); }
};

struct MomentCone {
  std::vector<Vec> normals;  // <normal, p> >= 0

  int dim() const { return normals.empty() ? 0 : static_cast<int>(normals.front().size()); }
};

// Slice {p in cone : <p, xi> = 1} written in the chart that drops coordinate `dropped_axis`.
struct ReebSlice {
  Polytope polytope;
  Vec xi;
  int dropped_axis = 0;

  // Point of the slice in R^{m+1} over chart coordinates q.
  Vec lift(const Vec& q) const;
};

Polytope canonical_polytope(const std::vector<Vec>& normals, GeomTolerance tol = {});
ReebSlice reeb_slice(const MomentCone& cone, const Vec& xi, GeomTolerance tol = {});

std::vector<Vec> vertices_from_halfspaces(const std::vector<Halfspace>& halfspaces,
                                          GeomTolerance tol = {});
std::vector<Halfspace> halfspaces_from_vertices(const std::vector<Vec>& points,
                                                GeomTolerance tol = {});

double support(const Polytope& p, const Vec& u);
Polytope minkowski_sum(const Polytope& p, const Polytope& q);
Polytope minkowski_sum(const std::vector<Polytope>& summands);

struct DecompositionCheck {
  bool pass = false;
  double max_deviation = 0.0;
  // Signed deviation sigma_target - sum sigma_summands at the worst direction.
  double worst_signed_deviation = 0.0;
  Vec worst_direction;
  int directions_tested = 0;
  bool facets_parallel = false;
  // (summand index, facet index) pairs whose normal matches no target facet normal.
  std::vector<std::pair<int, int>> non_parallel_facets;
  double tolerance = 0.0;
  bool dimension_mismatch = false;
};

DecompositionCheck check_decomposition(const std::vector<Polytope>& summands, const Polytope& target,
                                       double tol);

// Fan triangulation from the lexicographically smallest vertex, or from vertices()[apex].
std::vector<Simplex> triangulate(const Polytope& p, std::optional<int> apex = std::nullopt);
double volume(const Polytope& p);
Polytope translate(const Polytope& p, const Vec& v);
// Image under p -> L p for invertible L.
Polytope linear_image(const Polytope& p, const Mat& l);
bool contains(const Polytope& p, const Vec& x, double tol);
// Smallest halfspace slack, normalized by the normal length.
double min_slack(const Polytope& p, const Vec& x);
int lexicographic_min_vertex(const Polytope& p);

}  // namespace csol
