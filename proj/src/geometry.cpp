#include "robustalloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace robustalloc {

SimplexPoint SimplexPoint::checked(Vector w) {
  if (w.size() < 1) throw InvalidInputError("SimplexPoint: dimension < 1");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw InvalidInputError("SimplexPoint: negative or non-finite weight");
    }
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidInputError("SimplexPoint: weights sum to " + std::to_string(sum));
  }
  return SimplexPoint{std::move(w)};
}

SimplexPoint equal_weights(int d) {
  if (d < 1) throw InvalidInputError("equal_weights: dimension < 1");
  return SimplexPoint{Vector::Constant(d, 1.0 / d)};
}

SimplexPoint project_simplex(const Vector& y) {
  const Eigen::Index d = y.size();
  if (d < 1) throw InvalidInputError("project_simplex: dimension < 1");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(y[i])) {
      throw InvalidInputError("project_simplex: non-finite input");
    }
  }

  // Sort descending; the stable comparator keeps the threshold path
  // deterministic under permutations of equal entries.
  std::vector<double> sorted(y.data(), y.data() + d);
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());

  // Largest m with y_(m) - (sum of top m - 1)/m > 0; extended precision for
  // the running sum so large-magnitude inputs keep the threshold accurate.
  long double cumulative = 0.0L;
  long double threshold = 0.0L;
  for (Eigen::Index m = 1; m <= d; ++m) {
    cumulative += sorted[static_cast<std::size_t>(m - 1)];
    const long double candidate = (cumulative - 1.0L) / static_cast<long double>(m);
    if (static_cast<long double>(sorted[static_cast<std::size_t>(m - 1)]) - candidate > 0.0L) {
      threshold = candidate;
    }
  }

  Vector x(d);
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < d; ++i) {
    const long double v = static_cast<long double>(y[i]) - threshold;
    const double clipped = v > 0.0L ? static_cast<double>(v) : 0.0;
    x[i] = clipped;
    sum += clipped;
  }
  // The clipped coordinates sum to 1 up to rounding; rescale the residual
  // away so the simplex invariant holds exactly at the 1e-12 gate.
  const double scale = static_cast<double>(sum);
  if (scale > 0.0 && scale != 1.0) x /= scale;
  return SimplexPoint{std::move(x)};
}

Vector inf_norm_subgradient(const Vector& x) {
  const Eigen::Index d = x.size();
  if (d < 1) throw InvalidInputError("inf_norm_subgradient: dimension < 1");
  double m = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(x[i])) {
      throw InvalidInputError("inf_norm_subgradient: non-finite input");
    }
    m = std::max(m, std::abs(x[i]));
  }
  Vector g = Vector::Zero(d);
  if (m == 0.0) return g;  // 0 is a valid subgradient at the origin

  constexpr double kTieTol = 1e-12;
  int ties = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(x[i]) >= m - kTieTol) ++ties;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(x[i]) >= m - kTieTol) {
      g[i] = (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0)) / ties;
    }
  }
  return g;
}

}  // namespace robustalloc
