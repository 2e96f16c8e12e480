#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "robustalloc/types.hpp"

// Data-parallel kernels behind the sample-expectation and grid-scan paths.
// Every kernel comes in a serial reference flavour and an OpenMP flavour that
// produce bit-identical results: work is split into fixed-size chunks, each
// chunk is accumulated left to right, and chunk partials are combined in
// index order. The result therefore never depends on the thread count, which
// is what makes `--jobs 1` and `--jobs 8` runs byte-identical.

namespace robustalloc::par {

/// Chunk length shared by all blocked reductions. Fixed so that the serial
/// and parallel paths perform the same arithmetic in the same order.
inline constexpr std::ptrdiff_t kChunk = 2048;

/// Worker cap for the OpenMP paths (default: all hardware threads).
int jobs();
void set_jobs(int n);

// ── Blocked sum ─────────────────────────────────────────────────────

double block_sum_serial(const double* v, std::ptrdiff_t n);
double block_sum_parallel(const double* v, std::ptrdiff_t n);
double block_sum(const double* v, std::ptrdiff_t n);

// ── Portfolio losses ────────────────────────────────────────────────
// out[i] = -returns.row(i) . x

void portfolio_losses_serial(const RowMatrix& returns, const Vector& x,
                             double* out);
void portfolio_losses_parallel(const RowMatrix& returns, const Vector& x,
                               double* out);
void portfolio_losses(const RowMatrix& returns, const Vector& x, double* out);

// ── Tail statistics ─────────────────────────────────────────────────
// Single pass over (row, loss) pairs collecting everything the CVaR
// objective and its subgradient need at a given threshold. Rows enter the
// tail on a strict losses[i] > tau.

struct TailStats {
  double loss_sum = 0.0;    // sum_i losses[i]
  double hinge_sum = 0.0;   // sum_i max(losses[i] - tau, 0)
  std::int64_t tail_count = 0;
  Vector tail_row_sum;      // sum over tail rows of returns.row(i)
};

TailStats tail_stats_serial(const RowMatrix& returns, const double* losses,
                            double tau);
TailStats tail_stats_parallel(const RowMatrix& returns, const double* losses,
                              double tau);
TailStats tail_stats(const RowMatrix& returns, const double* losses,
                     double tau);

// ── Column sums ─────────────────────────────────────────────────────

Vector column_sums_serial(const RowMatrix& rows);
Vector column_sums_parallel(const RowMatrix& rows);
Vector column_sums(const RowMatrix& rows);

// ── Index-ordered argmin ────────────────────────────────────────────
// Minimizes f over [0, n); ties resolve to the lowest index regardless of
// how chunks are scheduled.

struct ArgMin {
  std::ptrdiff_t index = -1;
  double value = 0.0;
};

ArgMin argmin_map_serial(std::ptrdiff_t n,
                         const std::function<double(std::ptrdiff_t)>& f);
ArgMin argmin_map_parallel(std::ptrdiff_t n,
                           const std::function<double(std::ptrdiff_t)>& f);
ArgMin argmin_map(std::ptrdiff_t n,
                  const std::function<double(std::ptrdiff_t)>& f);

}  // namespace robustalloc::par
