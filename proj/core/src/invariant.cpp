#include "csol/invariant.hpp"

#include <cmath>

#include "csol/errors.hpp"
#include "csol/moments.hpp"

namespace csol {

double default_decomposition_tolerance(const Decomposition& d) {
  return 1e-9 * std::max(1.0, d.target.circumradius());
}

double default_vanishing_tolerance(const Decomposition& d) {
  return 1e-9 * std::max(1.0, d.target.circumradius());
}

void validate(const Decomposition& d, double tol) {
  if (d.summands.empty()) throw Error(ErrorCode::InvalidDecomposition, "decomposition has no summands");
  if (tol < 0.0) tol = default_decomposition_tolerance(d);
  DecompositionCheck c = check_decomposition(d.summands, d.target, tol);
  if (c.dimension_mismatch) throw Error(ErrorCode::InvalidDecomposition, "summand dimension differs from target");
  if (!c.pass)
    throw Error(ErrorCode::InvalidDecomposition,
                "summands do not add up to the target (support deviation " + std::to_string(c.max_deviation) + ")");
  if (!c.facets_parallel) throw Error(ErrorCode::InvalidDecomposition, "a summand facet is not parallel to any target facet");
}

double futaki(const Decomposition& d, const Vec& v) {
  validate(d);
  if (v.size() != d.dim()) throw Error(ErrorCode::DimensionMismatch, "V length differs from decomposition dimension");
  Vec sum = Vec::Zero(d.dim());
  for (const auto& p : d.summands) sum += weighted_barycenter(p, Vec::Zero(d.dim()));
  return sum.dot(v);
}

FutakiReport futaki_twisted(const Decomposition& d, const std::vector<Vec>& weights, double tol) {
  validate(d);
  if (static_cast<int>(weights.size()) != d.arity())
    throw Error(ErrorCode::ArityMismatch, "expected one weight per summand");
  for (const auto& w : weights)
    if (w.size() != d.dim()) throw Error(ErrorCode::DimensionMismatch, "weight length differs from decomposition dimension");
  FutakiReport r;
  r.tolerance = tol < 0.0 ? default_vanishing_tolerance(d) : tol;
  r.vector = Vec::Zero(d.dim());
  for (int a = 0; a < d.arity(); ++a) {
    r.per_summand.push_back(weighted_barycenter(d.summands[a], weights[a]));
    r.vector += r.per_summand.back();
  }
  r.norm = r.vector.norm();
  r.vanishes = r.norm < r.tolerance;
  return r;
}

NormalizationReport check_normalizations(const Decomposition& d, double tol) {
  NormalizationReport r;
  r.tolerance = tol < 0.0 ? default_decomposition_tolerance(d) : tol;
  DecompositionCheck c = check_decomposition(d.summands, d.target, r.tolerance);
  r.support_deviation = c.max_deviation;
  r.support_pass = c.pass;
  r.facets_parallel = c.facets_parallel;
  int m = d.dim();
  r.first_moment_sum = Vec::Zero(m);
  r.minkowski_barycenter = Vec::Zero(m);
  if (c.dimension_mismatch) return r;
  for (const auto& p : d.summands) r.first_moment_sum += polytope_exp_moments(p, Vec::Zero(m)).i1;
  r.first_moment_pass = r.first_moment_sum.norm() < r.tolerance;
  if (!d.summands.empty()) r.minkowski_barycenter = weighted_barycenter(minkowski_sum(d.summands), Vec::Zero(m));
  return r;
}

ExistenceResult coupled_ke_exists(const Decomposition& d, double tol) {
  ExistenceResult e;
  e.report = futaki_twisted(d, std::vector<Vec>(d.arity(), Vec::Zero(d.dim())), tol);
  e.exists = e.report.vanishes;
  return e;
}

}  // namespace csol
