#pragma once

#include <Eigen/SparseCore>
#include <memory>
#include <string>
#include <vector>

#include "csol/errors.hpp"
#include "csol/guillemin.hpp"
#include "csol/invariant.hpp"

namespace csol {

struct MaOptions {
  // Newton stops when the difference-form residual, boundary and mass rows drop below tol.
  double tol = 1e-9;
  double dt0 = 0.1;
  double dt_min = 1e-4;
  bool regrow = true;
  int max_newton = 40;
  int max_halvings = 30;
  double confinement_tol = 1e-8;
  // Admissible size of the translation correction solved for at t = 1.
  double weight_correction_tol = 1e-3;
  // Use the exponent t*sum f - (1-t)*sum h instead; its total mass is infinite.
  bool paper_sign = false;
  // Reference potentials whose Hessians decay at the rate of the t = 0 right side
  // (facet weights 1 / (|n_i| support(P, -n_i/|n_i|))) instead of the weight 1/2.
  bool matched_reference = true;
  GuilleminOptions guillemin;
};

// f_alpha = h_alpha + phi_alpha + C_alpha on a box grid, plus the scalar unknowns of the
// discrete system: sigma_alpha (log of the discrete weighted volume) and the mass constant c.
struct PotentialGrid {
  GridSpec grid;
  std::vector<Polytope> polytopes;
  std::vector<Vec> weights;
  double t = 0.0;
  std::vector<Vec> phi;
  Vec log_volume;
  double c = 0.0;
  double c0 = 0.0;
  // Translation correction added to every weight; only solved for when `augmented`.
  Vec weight_correction;
  bool augmented = false;
  bool paper_sign = false;
  std::shared_ptr<const std::vector<GuilleminReference>> refs;

  int arity() const { return static_cast<int>(phi.size()); }
  int dim() const { return grid.dim; }
  // Equal split of the normalization constant among summands.
  double additive_constant(int alpha) const;
  Vec potential(int alpha) const;
  Vec effective_weight(int alpha) const;
};

// Facet weights for which the summand's reference Hessian decays like exp(-sum_beta h_beta).
Vec matched_facet_weights(const Polytope& target, const Polytope& summand);

PotentialGrid initial_state(const Decomposition& d, const std::vector<Vec>& weights, const GridSpec& grid,
                            const MaOptions& opts = {});

struct ResidualReport {
  // Difference form e^{sigma} * (e^{r} - 1) * E on interior nodes, zero elsewhere.
  std::vector<Vec> fields;
  Vec pde_sup;
  double boundary_sup = 0.0;
  double mass = 0.0;
  double constraint_sup = 0.0;
  double merit = 0.0;
  Vec volume_defect;  // sigma_alpha - log Vol_W(P_alpha)
  double min_convexity = 0.0;
  double tail_mass = 0.0;
};

ResidualReport residual(const PotentialGrid& state);

struct NewtonRecord {
  int iterations = 0;
  std::vector<double> merits;
};

// One damped Newton step on the full coupled system.
PotentialGrid newton_step(const PotentialGrid& state, const MaOptions& opts = {});

// Newton iteration at the state's t. `active` restricts the solve to one summand at t = 0
// (the others and the mass constant stay fixed); -1 solves everything.
PotentialGrid newton_solve(const PotentialGrid& state, const MaOptions& opts, NewtonRecord* record = nullptr,
                           int active = -1);

struct PathStep {
  double t = 0.0;
  double dt = 0.0;
  bool accepted = false;
  int newton_iterations = 0;
  double merit = 0.0;
  std::string failure;
};

struct PathState {
  double t = 0.0;
  PotentialGrid state;
  double residual = 0.0;
  double min_gradient_slack = 0.0;
  std::vector<PathStep> history;
};

class PathStuckError : public Error {
 public:
  PathStuckError(const std::string& message, std::shared_ptr<PathState> last)
      : Error(ErrorCode::PathStuck, message), last_(std::move(last)) {}
  double reached_t() const { return last_->t; }
  const PathState& last_good() const { return *last_; }

 private:
  std::shared_ptr<PathState> last_;
};

PathState continuity_solve(const Decomposition& d, const std::vector<Vec>& weights, const GridSpec& grid,
                           const MaOptions& opts = {});

struct SummandPushforward {
  double i0_rel = 0.0;
  double i1_rel = 0.0;
  double i2_rel = 0.0;
  Vec barycenter;
  Vec exact_barycenter;
  double min_gradient_slack = 0.0;
  double volume_defect = 0.0;
};

struct PushforwardReport {
  std::vector<SummandPushforward> summands;
  double solvability_mass = 0.0;  // discrete integral of exp(-sum f) over R^m
  double max_rel_deviation = 0.0;
};

PushforwardReport verify_pushforward(const PotentialGrid& state);

namespace detail {

// Residual vector and Jacobian of the discrete system in its internal unknown ordering:
// phi blocks, log volumes, mass constant, then the translation correction when augmented.
struct Linearization {
  Vec residual;
  Eigen::SparseMatrix<double> jacobian;
};

Linearization linearize(const PotentialGrid& state);
Vec pack(const PotentialGrid& state);
PotentialGrid unpack(const PotentialGrid& like, const Vec& x);

}  // namespace detail

// Smallest facet slack of the central-difference gradients over interior nodes.
double min_gradient_slack(const PotentialGrid& state);

}  // namespace csol
