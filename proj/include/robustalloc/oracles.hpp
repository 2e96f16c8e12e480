#pragma once

#include <functional>

#include "robustalloc/types.hpp"

// Independent brute-force references for the fast paths. Deliberately slow
// and simple, and sharing no code with the closed forms they validate.

namespace robustalloc::oracles {

/// Simplex projection by enumerating every nonempty support set and solving
/// the equality-constrained projection on it in closed form. d <= 12.
Vector projection_by_enumeration(const Vector& y);

/// Numeric infimum over lambda > x_norm^2 of
/// lambda r^2 + lambda/(lambda - x_norm^2) * base, the dual form behind the
/// closed-form worst case. Golden-section on a bracket around the analytic
/// minimizer. r = 0 returns base (the lambda -> infinity limit).
double dual_worst_case_value(double radius, double x_norm, double base);

struct GridSpec {
  int simplex_resolution = 64;  // barycentric lattice steps, >= 2
  int aux_resolution = 65;      // uniform auxiliary grid points, >= 2
  double aux_lo = -1.0;
  double aux_hi = 1.0;
};

struct GridPoint {
  Vector x;
  double aux = 0.0;
  double value = 0.0;
};

/// Exhaustive minimization over the simplex lattice x the auxiliary grid,
/// followed by one local refinement pass with halved spacing around the best
/// point. d <= 3. The lattice is built from integer compositions so the
/// points are exactly feasible.
GridPoint grid_minimize(const std::function<double(const Vector&, double)>& f,
                        int d, const GridSpec& spec);

/// Max over coordinates of the relative deviation between grad and the
/// central finite difference of f at point (step h). The deviation is
/// normalized by max(1, |grad_i|, |fd_i|).
double finite_difference_check(const std::function<double(const Vector&)>& f,
                               const Vector& grad, const Vector& point,
                               double h);

}  // namespace robustalloc::oracles
