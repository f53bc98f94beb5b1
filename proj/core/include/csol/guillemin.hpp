#pragma once

#include "csol/grid.hpp"

namespace csol {

struct GuilleminOptions {
  // Largest admissible distance from the far-boundary gradient image to each facet.
  double box_tol = 1e-4;
  // Coefficients w_i of u(p) = sum w_i l_i(p) log l_i(p), one per facet in halfspace order;
  // empty means w_i = 1/2.
  Vec facet_weights;
};

// Legendre dual of u(p) = 1/2 sum l_i(p) log l_i(p), sampled on a grid.
struct GuilleminReference {
  Polytope polytope;
  GridSpec grid;
  Vec h;         // per node
  Mat gradient;  // m x nodes, the dual point p(x)
  Mat hessian;   // (m*m) x nodes, column-major blocks of (D^2 u)^{-1}
  double max_support_gap = 0.0;  // max |h(x) - support(P, x)| over the grid
  double max_facet_gap = 0.0;    // max over facets of the closest boundary-node slack

  Mat hessian_at(int node) const;
};

struct LegendrePoint {
  Vec p;
  double value = 0.0;  // h(x)
  Mat hessian;
  int iterations = 0;
};

// Solves grad u(p) = x; `start` must lie in the interior of P.
LegendrePoint guillemin_dual(const Polytope& p, const Vec& x, const Vec& start);

GuilleminReference guillemin_reference(const Polytope& p, const GridSpec& grid, const GuilleminOptions& opts = {});

}  // namespace csol
