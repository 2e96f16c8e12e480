// Timing comparison of the serial reference kernels against their OpenMP
// counterparts, plus one end-to-end solve at benchmark scale. Results print
// as a table; correctness of the pairs is asserted bit-for-bit first.

#include <omp.h>

#include <cstdio>
#include <random>
#include <vector>

#include "robustalloc/meancvar.hpp"
#include "robustalloc/parallel.hpp"
#include "robustalloc/simulation.hpp"
#include "robustalloc/solver.hpp"

using namespace robustalloc;

namespace {

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

void row(const char* name, std::ptrdiff_t n, double serial, double parallel) {
  std::printf("%-24s %10td %12.3f %12.3f %8.2fx\n", name, n, serial * 1e3,
              parallel * 1e3, serial / parallel);
}

volatile double sink = 0.0;

}  // namespace

int main() {
  std::printf("threads: %d\n", par::jobs());
  std::printf("%-24s %10s %12s %12s %8s\n", "kernel", "n", "serial ms",
              "parallel ms", "speedup");

  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const std::ptrdiff_t n : {100000l, 1000000l, 4000000l}) {
    const int d = 10;
    RowMatrix returns(n, d);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) returns(i, j) = 0.05 * gauss(rng);
    }
    Vector x = Vector::Constant(d, 1.0 / d);
    std::vector<double> losses(static_cast<std::size_t>(n));

    par::portfolio_losses_serial(returns, x, losses.data());
    std::vector<double> check(losses.size());
    par::portfolio_losses_parallel(returns, x, check.data());
    if (check != losses) {
      std::fprintf(stderr, "portfolio_losses parity violated\n");
      return 1;
    }

    row("portfolio_losses", n,
        time_best_of(5, [&] { par::portfolio_losses_serial(returns, x, losses.data()); }),
        time_best_of(5, [&] { par::portfolio_losses_parallel(returns, x, losses.data()); }));

    if (par::block_sum_serial(losses.data(), n) !=
        par::block_sum_parallel(losses.data(), n)) {
      std::fprintf(stderr, "block_sum parity violated\n");
      return 1;
    }
    row("block_sum", n,
        time_best_of(5, [&] { sink = par::block_sum_serial(losses.data(), n); }),
        time_best_of(5, [&] { sink = par::block_sum_parallel(losses.data(), n); }));

    row("tail_stats", n,
        time_best_of(5, [&] {
          sink = par::tail_stats_serial(returns, losses.data(), 0.0).hinge_sum;
        }),
        time_best_of(5, [&] {
          sink = par::tail_stats_parallel(returns, losses.data(), 0.0).hinge_sum;
        }));
  }

  // End-to-end: one robust CVaR solve on a large fitted sample, serial
  // against the default worker pool.
  {
    const RegimeModel model = RegimeModel::standard(10);
    const GeneratedDataset data = sample_mixture(model, 200000, 99);
    const AmbiguitySpec ambiguity = AmbiguitySpec::make(
        0.024, 0.03, RadiusFunction::beta_shaped(0.1, 10.0, 0.024));
    const MeanCVaRProblem problem = fit_meancvar(data, 10.0, 0.95, ambiguity);
    SolverConfig cfg;
    cfg.iterations = 200;
    cfg.schedule = StepSchedule::lipschitz();
    cfg.record_trace = false;

    const int full = par::jobs();
    par::set_jobs(1);
    const double serial = time_best_of(2, [&] { sink = solve(problem, cfg).objective; });
    par::set_jobs(full);
    const double parallel = time_best_of(2, [&] { sink = solve(problem, cfg).objective; });
    row("cvar_solve_T200", 200000, serial, parallel);
  }

  return 0;
}
