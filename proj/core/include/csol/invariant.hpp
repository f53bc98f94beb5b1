#pragma once

#include <vector>

#include "csol/geom.hpp"

namespace csol {

struct Decomposition {
  Polytope target;
  std::vector<Polytope> summands;

  int dim() const { return target.dim(); }
  int arity() const { return static_cast<int>(summands.size()); }
};

// Throws InvalidDecomposition unless the summands add up to the target within `tol` and
// every summand facet is parallel to a target facet. A negative tol selects the default.
void validate(const Decomposition& d, double tol = -1.0);
double default_decomposition_tolerance(const Decomposition& d);

struct FutakiReport {
  Vec vector;
  std::vector<Vec> per_summand;
  bool vanishes = false;
  double norm = 0.0;
  double tolerance = 0.0;
};

double default_vanishing_tolerance(const Decomposition& d);

double futaki(const Decomposition& d, const Vec& v);
FutakiReport futaki_twisted(const Decomposition& d, const std::vector<Vec>& weights, double tol = -1.0);

struct NormalizationReport {
  double support_deviation = 0.0;
  bool support_pass = false;
  bool facets_parallel = false;
  Vec first_moment_sum;  // sum over summands of the integral of p
  bool first_moment_pass = false;
  // Barycenter of the Minkowski sum of the summands, reported alongside the first-moment sum.
  Vec minkowski_barycenter;
  double tolerance = 0.0;
};

NormalizationReport check_normalizations(const Decomposition& d, double tol = -1.0);

struct ExistenceResult {
  bool exists = false;
  FutakiReport report;
};

ExistenceResult coupled_ke_exists(const Decomposition& d, double tol = -1.0);

}  // namespace csol
