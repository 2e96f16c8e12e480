#include "robustalloc/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "robustalloc/parallel.hpp"

namespace robustalloc::oracles {

namespace {

constexpr double kInvGolden = 0.61803398874989484820;

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double tol) {
  double best = std::numeric_limits<double>::infinity();
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  best = std::min({best, f1, f2});
  while (b - a > tol) {
    if (f1 > f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = f(x1);
    }
    best = std::min({best, f1, f2});
  }
  return best;
}

}  // namespace

Vector projection_by_enumeration(const Vector& y) {
  const int d = static_cast<int>(y.size());
  if (d < 1) throw InvalidInputError("projection_by_enumeration: d < 1");
  if (d > 12) {
    throw OracleScaleError("projection_by_enumeration: d > 12");
  }
  for (int i = 0; i < d; ++i) {
    if (!std::isfinite(y[i])) {
      throw InvalidInputError("projection_by_enumeration: non-finite input");
    }
  }

  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  const unsigned masks = 1u << d;
  for (unsigned mask = 1; mask < masks; ++mask) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        sum += y[i];
        ++count;
      }
    }
    const double shift = (sum - 1.0) / count;
    Vector candidate = Vector::Zero(d);
    bool feasible = true;
    double obj = 0.0;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        const double v = y[i] - shift;
        if (v < 0.0) {
          feasible = false;
          break;
        }
        candidate[i] = v;
        obj += shift * shift;
      } else {
        obj += y[i] * y[i];
      }
    }
    if (feasible && obj < best_obj) {
      best_obj = obj;
      best = candidate;
    }
  }
  return best;
}

double dual_worst_case_value(double radius, double x_norm, double base) {
  if (!(radius >= 0.0) || !(x_norm > 0.0) || !(base >= 0.0)) {
    throw InvalidInputError("dual_worst_case_value: bad arguments");
  }
  if (radius == 0.0) return base;
  const double xsq = x_norm * x_norm;
  if (base == 0.0) return xsq * radius * radius;  // infimum at lambda -> xsq

  const double offset = x_norm * std::sqrt(base) / radius;
  const double lo = xsq + offset / 64.0;
  const double hi = xsq + offset * 64.0;
  const auto penalty = [&](double lambda) {
    return lambda * radius * radius + lambda / (lambda - xsq) * base;
  };
  return golden_min(penalty, lo, hi, 1e-13 * (hi - lo));
}

GridPoint grid_minimize(const std::function<double(const Vector&, double)>& f,
                        int d, const GridSpec& spec) {
  if (d < 1 || d > 3) throw OracleScaleError("grid_minimize: d must be 1..3");
  if (spec.simplex_resolution < 2 || spec.aux_resolution < 2) {
    throw InvalidInputError("grid_minimize: resolution must be >= 2");
  }
  const int n = spec.simplex_resolution;
  const int m = spec.aux_resolution;
  const double aux_step = (spec.aux_hi - spec.aux_lo) / (m - 1);

  // Barycentric lattice: compositions k_1 + ... + k_d = n.
  std::vector<Vector> lattice;
  if (d == 1) {
    lattice.push_back(Vector::Constant(1, 1.0));
  } else if (d == 2) {
    for (int k = 0; k <= n; ++k) {
      Vector x(2);
      x << static_cast<double>(k) / n, static_cast<double>(n - k) / n;
      lattice.push_back(x);
    }
  } else {
    for (int k1 = 0; k1 <= n; ++k1) {
      for (int k2 = 0; k2 + k1 <= n; ++k2) {
        Vector x(3);
        x << static_cast<double>(k1) / n, static_cast<double>(k2) / n,
            static_cast<double>(n - k1 - k2) / n;
        lattice.push_back(x);
      }
    }
  }

  const auto total = static_cast<std::ptrdiff_t>(lattice.size()) * m;
  const par::ArgMin best = par::argmin_map(total, [&](std::ptrdiff_t idx) {
    const auto ci = static_cast<std::size_t>(idx / m);
    const auto ai = static_cast<int>(idx % m);
    const double aux = spec.aux_lo + ai * aux_step;
    return f(lattice[ci], aux);
  });

  GridPoint out;
  out.x = lattice[static_cast<std::size_t>(best.index / m)];
  out.aux = spec.aux_lo + static_cast<int>(best.index % m) * aux_step;
  out.value = best.value;

  // One refinement pass with halved spacing. Offsets keep the lattice sum
  // intact; candidates landing outside the simplex are skipped.
  const double hx = 0.5 / n;
  const double ha = 0.5 * aux_step;
  std::vector<Vector> offsets;
  if (d >= 2) {
    std::array<int, 3> delta{};
    const int span = 2;
    for (delta[0] = -span; delta[0] <= span; ++delta[0]) {
      for (delta[1] = -span; delta[1] <= span; ++delta[1]) {
        if (d == 2) {
          if (delta[0] + delta[1] != 0) continue;
          Vector v(2);
          v << delta[0], delta[1];
          offsets.push_back(v);
        } else {
          for (delta[2] = -span; delta[2] <= span; ++delta[2]) {
            if (delta[0] + delta[1] + delta[2] != 0) continue;
            Vector v(3);
            v << delta[0], delta[1], delta[2];
            offsets.push_back(v);
          }
        }
      }
    }
  } else {
    offsets.push_back(Vector::Zero(1));
  }

  GridPoint refined = out;
  for (const Vector& off : offsets) {
    Vector cand = out.x + hx * off;
    if ((cand.array() < -1e-12).any()) continue;
    cand = cand.cwiseMax(0.0);
    const double sum = cand.sum();
    if (sum <= 0.0) continue;
    cand /= sum;
    for (int da = -2; da <= 2; ++da) {
      const double aux = std::min(std::max(out.aux + da * ha, spec.aux_lo),
                                  spec.aux_hi);
      const double v = f(cand, aux);
      if (v < refined.value) refined = GridPoint{cand, aux, v};
    }
  }
  return refined;
}

double finite_difference_check(const std::function<double(const Vector&)>& f,
                               const Vector& grad, const Vector& point,
                               double h) {
  if (!(h > 0.0)) throw InvalidInputError("finite_difference_check: h <= 0");
  if (grad.size() != point.size()) {
    throw InvalidInputError("finite_difference_check: size mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    Vector p_hi = point;
    Vector p_lo = point;
    p_hi[i] += h;
    p_lo[i] -= h;
    const long double fd =
        (static_cast<long double>(f(p_hi)) - static_cast<long double>(f(p_lo))) /
        (2.0L * static_cast<long double>(h));
    const double denom =
        std::max({1.0, std::abs(grad[i]), std::abs(static_cast<double>(fd))});
    worst = std::max(worst, std::abs(static_cast<double>(fd) - grad[i]) / denom);
  }
  return worst;
}

}  // namespace robustalloc::oracles
