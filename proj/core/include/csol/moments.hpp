#pragma once

#include <optional>
#include <span>

#include "csol/geom.hpp"

namespace csol {

struct DividedDiffConfig {
  // Node spreads up to this value are summed directly from the Taylor series; wider
  // spreads are rescaled by powers of two and recovered by repeated squaring.
  double taylor_spread = 0.5;
};

// exp[a_0, ..., a_n], symmetric in its arguments and continuous as nodes coalesce.
double divided_diff_exp(std::span<const double> nodes, const DividedDiffConfig& cfg = {});

// Exponential moments. The true integrals are exp(log_shift) * (i0, i1, i2); log_shift is
// zero unless a shifted evaluation was requested.
struct MomentResult {
  double i0 = 0.0;
  Vec i1;
  Mat i2;
  double log_shift = 0.0;

  Vec barycenter() const { return i1 / i0; }
  Mat covariance() const;
  MomentResult& operator+=(const MomentResult& other);
};

struct MomentOptions {
  DividedDiffConfig divided_diff;
  std::optional<int> apex;
  // Factor out exp(support(P, w)) so the integrand never exceeds one.
  bool shifted = false;
};

MomentResult simplex_exp_moments(const Simplex& s, const Vec& w, const DividedDiffConfig& cfg = {});
MomentResult polytope_exp_moments(const Polytope& p, const Vec& w, const MomentOptions& opts = {});
Vec weighted_barycenter(const Polytope& p, const Vec& w);

enum class MomentOrder { Zeroth = 0, First = 1, Second = 2 };

struct QuadratureOptions {
  double rel_tol = 1e-12;
  int base_order = 8;
  int max_depth = 40;
  long max_cells = 2'000'000;
};

// Independent check: adaptive longest-edge bisection with collapsed Gauss-Legendre rules.
// Moments up to `order` are controlled by the error estimate; higher ones are filled in
// from the same rule without control.
MomentResult quadrature_oracle(const Polytope& p, const Vec& w, MomentOrder order = MomentOrder::Second,
                               const QuadratureOptions& opts = {});

}  // namespace csol
