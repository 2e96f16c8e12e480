#include "robustalloc/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "robustalloc/types.hpp"

namespace robustalloc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt_a,
                          std::uint64_t salt_b) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (salt_a + 0x9e3779b97f4a7c15ull));
  h = splitmix64(h ^ (salt_b + 0xd1b54a32d192ed03ull));
  return h;
}

double percentile(std::vector<double> values, double level) {
  if (values.empty()) throw InvalidInputError("percentile: empty sample");
  if (level < 0.0 || level > 1.0)
    throw InvalidInputError("percentile: level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

constexpr double kInvGolden = 0.61803398874989484820;

}  // namespace

ScalarMax maximize_on_interval(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points,
                               double tol, double tie_tol) {
  if (!(hi >= lo)) throw InvalidInputError("maximize_on_interval: hi < lo");
  if (hi == lo) return {lo, f(lo)};
  if (grid_points < 2) grid_points = 2;

  // Grid pass.
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::vector<double> vals(static_cast<std::size_t>(grid_points));
  double vmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double q = (i == grid_points - 1) ? hi : lo + i * step;
    vals[static_cast<std::size_t>(i)] = f(q);
    vmax = std::max(vmax, vals[static_cast<std::size_t>(i)]);
  }
  int best = 0;
  while (best < grid_points - 1 &&
         vals[static_cast<std::size_t>(best)] < vmax - tie_tol) {
    ++best;
  }

  ScalarMax out{(best == grid_points - 1) ? hi : lo + best * step,
                vals[static_cast<std::size_t>(best)]};

  // Golden-section refinement on the bracket around the best grid point.
  double a = (best > 0) ? lo + (best - 1) * step : lo;
  double b = (best < grid_points - 1) ? lo + (best + 1) * step : hi;
  auto consider = [&](double q, double v) {
    if (v > out.value) out = {q, v};
  };
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  consider(x1, f1);
  consider(x2, f2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    }
  }
  return out;
}

}  // namespace robustalloc
