#pragma once

#include <optional>
#include <vector>

#include "csol/invariant.hpp"

namespace csol {

// G(W) = sum over summands of log i0(P_alpha, W) with derivatives.
struct GValue {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

GValue g_eval(const Decomposition& d, const Vec& w);

struct SolitonOptions {
  double tol = 1e-11;
  int max_iter = 50;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-12;
  std::optional<Vec> start;
};

struct IterationRecord {
  int iteration = 0;
  Vec w;
  double g_value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct SolitonSolution {
  Vec w;
  double residual = 0.0;
  // Number of gradient evaluations in the Newton loop, counting the final converged one.
  int iterations = 0;
  double g_value = 0.0;
  std::vector<IterationRecord> trace;
};

SolitonSolution soliton_field(const Decomposition& d, const SolitonOptions& opts = {});

}  // namespace csol
