#pragma once

#include "robustalloc/ambiguity.hpp"
#include "robustalloc/geometry.hpp"
#include "robustalloc/types.hpp"

namespace robustalloc {

/// First two moments of a return regime. The covariance must be symmetric
/// (within 1e-10) and positive definite (smallest eigenvalue above
/// 1e-10 times the largest).
struct MomentSpec {
  Vector mean;
  Matrix cov;

  static MomentSpec make(Vector mean, Matrix cov);

  int dim() const { return static_cast<int>(mean.size()); }

  /// E||R||^2 = trace(cov) + ||mean||^2.
  double second_moment_trace() const;
};

/// Robust mean-variance allocation problem: a moment-determined normal
/// regime, a stress reference regime whose distribution may move within a
/// radius-r(q) transport ball, and a mixture weight q ranging over the
/// ambiguity interval. gamma > 0 trades expected return against variance.
struct MeanVarProblem {
  double gamma = 0.1;
  MomentSpec normal;
  MomentSpec stress;
  AmbiguitySpec ambiguity;

  // Cached normal-regime second moment, cov + mean mean'.
  Matrix normal_second_moment;

  static MeanVarProblem make(double gamma, MomentSpec normal,
                             MomentSpec stress, AmbiguitySpec ambiguity);

  int dim() const { return normal.dim(); }
};

/// (y - anchor)^2 - gamma * y.
double anchored_quadratic(double y, double anchor, double gamma);

/// Normal-regime expected disutility, evaluated exactly from moments:
/// x'Cov x + (x'mean - anchor)^2 - gamma x'mean.
double normal_disutility(const MeanVarProblem& p, const Vector& x,
                         double anchor);

/// sqrt(x'Cov_S x + (x'mean_S - (2 anchor + gamma)/2)^2); strictly positive
/// on the simplex for a positive definite stress covariance.
double stress_deviation(const MeanVarProblem& p, const Vector& x,
                        double anchor);

/// Closed-form worst case of the stress expectation over the radius-r(q)
/// transport ball: (r(q)||x|| + stress_deviation)^2 - anchor*gamma - gamma^2/4.
double worst_stress_disutility(const MeanVarProblem& p, double q,
                               const Vector& x, double anchor);

/// (1-q) * normal_disutility + q * worst_stress_disutility.
double mixture_disutility(const MeanVarProblem& p, double q, const Vector& x,
                          double anchor);

/// Compact interval [-B, B] guaranteed to contain every optimal anchor,
/// B = sqrt(max(2 (E_S||R||^2 + M^2), E_N||R||^2)) with M the radius maximum
/// over the weight interval.
Interval anchor_interval(const MeanVarProblem& p);

struct WorstWeight {
  double q = 0.0;
  double value = 0.0;
};

/// Maximizer of q -> mixture_disutility over the weight interval (512-point
/// grid plus golden-section refinement to 1e-10; ties go to the smallest q).
WorstWeight worst_weight(const MeanVarProblem& p, const Vector& x,
                         double anchor);

/// Objective of the outer minimization: mixture disutility at the worst
/// weight.
double robust_disutility(const MeanVarProblem& p, const Vector& x,
                         double anchor);

struct SubgradientXA {
  Vector x;
  double aux = 0.0;

  double norm() const { return std::sqrt(x.squaredNorm() + aux * aux); }
};

/// Gradient of the mixture disutility in (x, anchor) at a fixed weight q.
/// Evaluated at the worst weight this is a subgradient of the robust
/// objective.
SubgradientXA robust_subgradient_at(const MeanVarProblem& p, double q,
                                    const Vector& x, double anchor);

SubgradientXA robust_subgradient(const MeanVarProblem& p, const Vector& x,
                                 double anchor);

/// The (d+1)x(d+1) symmetric block matrix [[Cov + mean mean', -mean],
/// [-mean', 1]] of a regime.
Matrix moment_block_matrix(const MomentSpec& m);

/// Smallest eigenvalue of the normal-regime block matrix; the strong
/// convexity of the robust objective scales with it.
double strong_convexity_eigenvalue(const MeanVarProblem& p);

}  // namespace robustalloc
