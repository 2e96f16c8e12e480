#include "robustalloc/ambiguity.hpp"

#include <cmath>
#include <limits>

namespace robustalloc {

RadiusFunction RadiusFunction::beta_shaped(double c, double concentration,
                                           double q0) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw InvalidInputError("RadiusFunction: scale must be >= 0");
  }
  if (!(concentration > 0.0)) {
    throw InvalidInputError("RadiusFunction: concentration must be > 0");
  }
  if (!(q0 > 0.0 && q0 < 1.0)) {
    throw InvalidInputError("RadiusFunction: q0 must lie in (0,1)");
  }
  return RadiusFunction{c, concentration * q0 + 1.0,
                        concentration * (1.0 - q0) + 1.0};
}

RadiusFunction RadiusFunction::powers(double c, double alpha, double beta) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw InvalidInputError("RadiusFunction: scale must be >= 0");
  }
  if (!(alpha >= 1.0 && beta >= 1.0)) {
    throw InvalidInputError("RadiusFunction: exponents must be >= 1");
  }
  return RadiusFunction{c, alpha, beta};
}

double RadiusFunction::operator()(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw InvalidInputError("RadiusFunction: q outside [0,1]");
  }
  if (scale == 0.0) return 0.0;
  // std::pow(0,0) = 1, which is exactly the endpoint convention needed here.
  return scale * std::pow(q, alpha - 1.0) * std::pow(1.0 - q, beta - 1.0);
}

std::pair<double, double> RadiusFunction::derivatives(double q) const {
  if (!(q > 0.0 && q < 1.0)) {
    throw InvalidInputError("RadiusFunction::derivatives: q must be interior");
  }
  if (scale == 0.0) return {0.0, 0.0};
  const double r = (*this)(q);
  const double e1 = alpha - 1.0;
  const double e2 = beta - 1.0;
  // Log-derivative form: with L = log r, r' = r L' and r'' = r (L'^2 + L'').
  const double lp = e1 / q - e2 / (1.0 - q);
  const double lpp = -e1 / (q * q) - e2 / ((1.0 - q) * (1.0 - q));
  return {r * lp, r * (lp * lp + lpp)};
}

double RadiusFunction::mode() const {
  const double denom = alpha + beta - 2.0;
  if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (alpha - 1.0) / denom;
}

double RadiusFunction::max_on(double lo, double hi) const {
  if (!(lo <= hi)) throw InvalidInputError("RadiusFunction::max_on: lo > hi");
  if (scale == 0.0) return 0.0;
  double best = std::max((*this)(lo), (*this)(hi));
  const double m = mode();
  if (std::isfinite(m) && m > lo && m < hi) {
    best = std::max(best, (*this)(m));
  }
  if (alpha < 1.0 || beta < 1.0) {
    // Outside the unimodal family; fall back to a dense scan.
    constexpr int kGrid = 10000;
    for (int i = 1; i < kGrid; ++i) {
      const double q = lo + (hi - lo) * i / kGrid;
      best = std::max(best, (*this)(q));
    }
  }
  return best;
}

AmbiguitySpec AmbiguitySpec::make(double q0, double epsilon,
                                  RadiusFunction radius) {
  if (!(q0 > 0.0 && q0 < 1.0)) {
    throw InvalidInputError("AmbiguitySpec: q0 must lie in (0,1)");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInputError("AmbiguitySpec: epsilon must be >= 0");
  }
  return AmbiguitySpec{q0, epsilon, radius};
}

bool AmbiguitySpec::exceeds_concavity_assumption() const {
  return epsilon >= std::min(q0, 1.0 - q0);
}

double geometric_rate_constant(const AmbiguitySpec& spec, int dim) {
  if (dim < 1) throw InvalidInputError("geometric_rate_constant: dim < 1");
  const auto [rp, rpp] = spec.radius.derivatives(spec.q0);
  (void)rp;
  if (!(rpp < 0.0)) {
    throw NotApplicableError(
        "geometric_rate_constant: radius not strictly concave at q0");
  }
  return -spec.q0 * spec.radius(spec.q0) * rpp / static_cast<double>(dim);
}

}  // namespace robustalloc
