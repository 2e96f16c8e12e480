#pragma once

#include <utility>

#include "robustalloc/types.hpp"

namespace robustalloc {

/// Beta-shaped ambiguity radius r(q) = c * q^(alpha-1) * (1-q)^(beta-1)
/// on [0,1], with the endpoint convention 0^0 = 1.
struct RadiusFunction {
  double scale = 0.0;  // c >= 0
  double alpha = 2.0;
  double beta = 2.0;

  /// Exponents derived so the mode sits at q0: alpha = M*q0 + 1,
  /// beta = M*(1-q0) + 1 with concentration M > 0.
  static RadiusFunction beta_shaped(double c, double concentration, double q0);

  /// Direct exponents; alpha = beta = 1 gives a constant radius. Used for
  /// degenerate and test radii (the SAA path passes c = 0).
  static RadiusFunction powers(double c, double alpha, double beta);

  double operator()(double q) const;

  /// Exact first and second derivatives at interior q.
  std::pair<double, double> derivatives(double q) const;

  /// Interior mode (alpha-1)/(alpha+beta-2); NaN when the exponents do not
  /// produce one.
  double mode() const;

  double max_on(double lo, double hi) const;
};

/// Mixture-weight interval [q0 - eps, q0 + eps] plus the radius map q -> r(q)
/// for the stress ball. The interval is clamped to [0,1] where it protrudes;
/// protrusion voids the concavity-based rate guarantees and is reported as a
/// warning, not an error, since the reference experiments rely on it.
struct AmbiguitySpec {
  double q0 = 0.1;
  double epsilon = 0.0;
  RadiusFunction radius;

  static AmbiguitySpec make(double q0, double epsilon, RadiusFunction radius);

  double lo() const { return std::max(0.0, q0 - epsilon); }
  double hi() const { return std::min(1.0, q0 + epsilon); }

  /// True when epsilon >= min(q0, 1-q0), i.e. the weight interval reaches or
  /// crosses an endpoint of [0,1].
  bool exceeds_concavity_assumption() const;

  /// max of r over the (clamped) weight interval.
  double radius_max() const { return radius.max_on(lo(), hi()); }
};

/// Curvature constant -q0 r(q0) r''(q0) / d of the geometric-rate step size;
/// requires r''(q0) < 0.
double geometric_rate_constant(const AmbiguitySpec& spec, int dim);

}  // namespace robustalloc
