#pragma once

#include <optional>
#include <vector>

#include "csol/ma_solver.hpp"

namespace csol {

// -(rho u')' = lambda rho m u on a uniform 1-D grid with Neumann ends.
struct SturmLiouvilleProblem {
  Vec x;
  double h = 0.0;
  Vec rho;     // twisting weight e^F, normalized to 1 at the centre node
  Vec metric;  // f''
  // Decay rates of rho * m beyond each end; the tail mass is lumped onto the end nodes.
  double decay_left = 0.0;
  double decay_right = 0.0;
};

// From samples of a convex potential f on x, with F = -log f'' - f.
SturmLiouvilleProblem make_sturm_liouville(const Vec& x, const Vec& f);
// From a solved state: F_alpha = -log f_alpha'' - sum_beta f_beta.
SturmLiouvilleProblem make_sturm_liouville(const PotentialGrid& state, int alpha);

struct TridiagonalOperator {
  Vec diag;
  Vec upper;
  Vec lower;
  Vec mass;  // B = rho m w
  double symmetry_defect = 0.0;  // max relative |upper - lower|
};

// Similarity-scaled operator B^{1/2} (B^{-1} A) B^{-1/2}.
TridiagonalOperator assemble(const SturmLiouvilleProblem& p);

struct EigenResult {
  double lambda = 0.0;
  Vec vector;          // B-normalized, positive at the right end
  double lambda0 = 0.0;  // eigenvalue of the constant mode, zero up to rounding
  double symmetry_defect = 0.0;
};

EigenResult first_eigenvalue(const SturmLiouvilleProblem& p);

// Correlation of a and b in the mass inner product after removing their weighted means.
double mass_correlation(const SturmLiouvilleProblem& p, const Vec& a, const Vec& b);

struct IdentityReport {
  std::vector<Vec> residual;  // per summand, on nodes 2 .. n-2 (zero elsewhere)
  Vec sup;                    // per summand over all evaluated nodes
  Vec sup_window;             // per summand over |x| <= window
  double window = 0.0;
  Vec constants;
};

// Residual of Delta_{alpha,F} u_alpha + sum_beta u_beta with u_alpha = f_alpha' - c_alpha.
// Constants default to the equal split of the mean-zero normalization.
IdentityReport verify_holomorphic_identity(const PotentialGrid& state, double window = -1.0,
                                           const std::optional<Vec>& constants = std::nullopt);

}  // namespace csol
