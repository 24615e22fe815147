#pragma once

#include <span>
#include <vector>

#include "stackbench/matrix.hpp"

namespace stackbench {

/// Superlearner combination weights: non-negative, summing to one, one per
/// base learner.
struct MetaWeights {
  std::vector<double> weights;
};

struct SimplexFit {
  std::vector<double> weights;
  double rss = 0.0;
  /// Largest violation of the KKT conditions at the returned point, scaled
  /// by the problem size; below 1e-10 on convergence.
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// min ||y - Z w||^2 subject to w >= 0 and sum(w) = 1, by a Lawson-Hanson
/// style active-set method on the normal equations. Returns the exact
/// minimizer over the simplex, so its residual is never above any convex
/// combination of the columns (in particular any single column).
SimplexFit simplex_least_squares(const Matrix& z, std::span<const double> y);

/// Meta-combination weights for out-of-fold predictions Z (n x L) and labels
/// y. Throws InvalidArgument on non-finite input or shape mismatch.
MetaWeights nnls_solve(const Matrix& z, std::span<const double> y);

/// ||y - Z w||^2.
double combination_rss(const Matrix& z, std::span<const double> y, std::span<const double> w);

}  // namespace stackbench
