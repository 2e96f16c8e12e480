#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace robustalloc {

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic per-task seed from a master seed and two salt words.
/// Independent of scheduling, so parallel runs reproduce serial ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt_a,
                          std::uint64_t salt_b);

/// Linear-interpolation percentile, level in [0,1]. Copies and sorts.
double percentile(std::vector<double> values, double level);

/// Shortest text that still round-trips a double: 17 significant digits.
std::string format_g17(double v);

struct ScalarMax {
  double arg = 0.0;
  double value = 0.0;
};

/// Maximizes f on [lo, hi]: a uniform grid pass guards against multiple local
/// maxima, then golden-section refinement around the best grid point down to
/// an argument width of `tol`. Grid values within `tie_tol` of the maximum are
/// ties and the smallest argument wins.
ScalarMax maximize_on_interval(const std::function<double(double)>& f,
                               double lo, double hi, int grid_points = 512,
                               double tol = 1e-10, double tie_tol = 1e-10);

}  // namespace robustalloc
