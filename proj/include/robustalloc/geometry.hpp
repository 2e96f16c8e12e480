#pragma once

#include "robustalloc/types.hpp"

namespace robustalloc {

/// Long-only portfolio weights: nonnegative entries summing to one.
struct SimplexPoint {
  Vector weights;

  int dim() const { return static_cast<int>(weights.size()); }

  /// Validates the simplex invariants (entries >= 0, sum within 1e-12 of 1)
  /// and throws InvalidInputError on violation.
  static SimplexPoint checked(Vector w);
};

SimplexPoint equal_weights(int d);

/// Exact Euclidean projection onto the probability simplex via the
/// sort-and-threshold closed form, O(d log d).
SimplexPoint project_simplex(const Vector& y);

/// An element of the subdifferential of the max norm at x: the uniform
/// average of sign(x_i) e_i over the coordinates attaining |x_i| = max|x|,
/// with ties at tolerance 1e-12. Returns the zero vector at x = 0.
Vector inf_norm_subgradient(const Vector& x);

}  // namespace robustalloc
