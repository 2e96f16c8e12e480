#include "robustalloc/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <limits>
#include <vector>

namespace robustalloc::par {

namespace {

std::atomic<int> g_jobs{0};  // 0 = not set, fall back to omp_get_max_threads

std::ptrdiff_t chunk_count(std::ptrdiff_t n) { return (n + kChunk - 1) / kChunk; }

double sum_chunk(const double* v, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  double s = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) s += v[i];
  return s;
}

double row_loss(const RowMatrix& returns, const Vector& x, std::ptrdiff_t i) {
  const double* row = returns.data() + i * returns.cols();
  double s = 0.0;
  for (Eigen::Index j = 0; j < returns.cols(); ++j) s += row[j] * x[j];
  return -s;
}

struct TailChunk {
  double loss_sum = 0.0;
  double hinge_sum = 0.0;
  std::int64_t tail_count = 0;
};

void tail_chunk(const RowMatrix& returns, const double* losses, double tau,
                std::ptrdiff_t lo, std::ptrdiff_t hi, TailChunk& acc,
                double* row_acc) {
  const Eigen::Index d = returns.cols();
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    const double l = losses[i];
    acc.loss_sum += l;
    if (l > tau) {
      acc.hinge_sum += l - tau;
      ++acc.tail_count;
      const double* row = returns.data() + i * d;
      for (Eigen::Index j = 0; j < d; ++j) row_acc[j] += row[j];
    }
  }
}

void col_chunk(const RowMatrix& rows, std::ptrdiff_t lo, std::ptrdiff_t hi,
               double* acc) {
  const Eigen::Index d = rows.cols();
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    const double* row = rows.data() + i * d;
    for (Eigen::Index j = 0; j < d; ++j) acc[j] += row[j];
  }
}

void argmin_chunk(std::ptrdiff_t lo, std::ptrdiff_t hi,
                  const std::function<double(std::ptrdiff_t)>& f,
                  ArgMin& best) {
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    const double v = f(i);
    if (best.index < 0 || v < best.value) best = {i, v};
  }
}

bool go_parallel(std::ptrdiff_t n) {
  return jobs() > 1 && n > kChunk && !omp_in_parallel();
}

}  // namespace

int jobs() {
  const int j = g_jobs.load(std::memory_order_relaxed);
  return j > 0 ? j : omp_get_max_threads();
}

void set_jobs(int n) { g_jobs.store(n > 0 ? n : 0, std::memory_order_relaxed); }

// ── Blocked sum ─────────────────────────────────────────────────────

double block_sum_serial(const double* v, std::ptrdiff_t n) {
  const std::ptrdiff_t nc = chunk_count(n);
  double total = 0.0;
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    total += sum_chunk(v, c * kChunk, std::min(n, (c + 1) * kChunk));
  }
  return total;
}

double block_sum_parallel(const double* v, std::ptrdiff_t n) {
  const std::ptrdiff_t nc = chunk_count(n);
  std::vector<double> partial(static_cast<std::size_t>(nc), 0.0);
#pragma omp parallel for schedule(static) num_threads(jobs())
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    partial[static_cast<std::size_t>(c)] =
        sum_chunk(v, c * kChunk, std::min(n, (c + 1) * kChunk));
  }
  double total = 0.0;
  for (std::ptrdiff_t c = 0; c < nc; ++c) total += partial[static_cast<std::size_t>(c)];
  return total;
}

double block_sum(const double* v, std::ptrdiff_t n) {
  return go_parallel(n) ? block_sum_parallel(v, n) : block_sum_serial(v, n);
}

// ── Portfolio losses ────────────────────────────────────────────────

void portfolio_losses_serial(const RowMatrix& returns, const Vector& x,
                             double* out) {
  const std::ptrdiff_t n = returns.rows();
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = row_loss(returns, x, i);
}

void portfolio_losses_parallel(const RowMatrix& returns, const Vector& x,
                               double* out) {
  const std::ptrdiff_t n = returns.rows();
#pragma omp parallel for schedule(static) num_threads(jobs())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = row_loss(returns, x, i);
}

void portfolio_losses(const RowMatrix& returns, const Vector& x, double* out) {
  if (go_parallel(returns.rows())) {
    portfolio_losses_parallel(returns, x, out);
  } else {
    portfolio_losses_serial(returns, x, out);
  }
}

// ── Tail statistics ─────────────────────────────────────────────────

TailStats tail_stats_serial(const RowMatrix& returns, const double* losses,
                            double tau) {
  const std::ptrdiff_t n = returns.rows();
  const Eigen::Index d = returns.cols();
  const std::ptrdiff_t nc = chunk_count(n);
  TailStats out;
  out.tail_row_sum = Vector::Zero(d);
  std::vector<double> row_acc(static_cast<std::size_t>(d), 0.0);
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    TailChunk acc;
    std::fill(row_acc.begin(), row_acc.end(), 0.0);
    tail_chunk(returns, losses, tau, c * kChunk, std::min(n, (c + 1) * kChunk),
               acc, row_acc.data());
    out.loss_sum += acc.loss_sum;
    out.hinge_sum += acc.hinge_sum;
    out.tail_count += acc.tail_count;
    for (Eigen::Index j = 0; j < d; ++j) out.tail_row_sum[j] += row_acc[j];
  }
  return out;
}

TailStats tail_stats_parallel(const RowMatrix& returns, const double* losses,
                              double tau) {
  const std::ptrdiff_t n = returns.rows();
  const Eigen::Index d = returns.cols();
  const std::ptrdiff_t nc = chunk_count(n);
  std::vector<TailChunk> partial(static_cast<std::size_t>(nc));
  std::vector<double> rows(static_cast<std::size_t>(nc * d), 0.0);
#pragma omp parallel for schedule(static) num_threads(jobs())
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    tail_chunk(returns, losses, tau, c * kChunk, std::min(n, (c + 1) * kChunk),
               partial[static_cast<std::size_t>(c)],
               rows.data() + static_cast<std::size_t>(c * d));
  }
  TailStats out;
  out.tail_row_sum = Vector::Zero(d);
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    out.loss_sum += partial[static_cast<std::size_t>(c)].loss_sum;
    out.hinge_sum += partial[static_cast<std::size_t>(c)].hinge_sum;
    out.tail_count += partial[static_cast<std::size_t>(c)].tail_count;
    const double* acc = rows.data() + static_cast<std::size_t>(c * d);
    for (Eigen::Index j = 0; j < d; ++j) out.tail_row_sum[j] += acc[j];
  }
  return out;
}

TailStats tail_stats(const RowMatrix& returns, const double* losses,
                     double tau) {
  return go_parallel(returns.rows()) ? tail_stats_parallel(returns, losses, tau)
                                     : tail_stats_serial(returns, losses, tau);
}

// ── Column sums ─────────────────────────────────────────────────────

Vector column_sums_serial(const RowMatrix& rows) {
  const std::ptrdiff_t n = rows.rows();
  const Eigen::Index d = rows.cols();
  const std::ptrdiff_t nc = chunk_count(n);
  Vector out = Vector::Zero(d);
  std::vector<double> acc(static_cast<std::size_t>(d));
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    col_chunk(rows, c * kChunk, std::min(n, (c + 1) * kChunk), acc.data());
    for (Eigen::Index j = 0; j < d; ++j) out[j] += acc[j];
  }
  return out;
}

Vector column_sums_parallel(const RowMatrix& rows) {
  const std::ptrdiff_t n = rows.rows();
  const Eigen::Index d = rows.cols();
  const std::ptrdiff_t nc = chunk_count(n);
  std::vector<double> partial(static_cast<std::size_t>(nc * d), 0.0);
#pragma omp parallel for schedule(static) num_threads(jobs())
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    col_chunk(rows, c * kChunk, std::min(n, (c + 1) * kChunk),
              partial.data() + static_cast<std::size_t>(c * d));
  }
  Vector out = Vector::Zero(d);
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const double* acc = partial.data() + static_cast<std::size_t>(c * d);
    for (Eigen::Index j = 0; j < d; ++j) out[j] += acc[j];
  }
  return out;
}

Vector column_sums(const RowMatrix& rows) {
  return go_parallel(rows.rows()) ? column_sums_parallel(rows)
                                  : column_sums_serial(rows);
}

// ── Index-ordered argmin ────────────────────────────────────────────

ArgMin argmin_map_serial(std::ptrdiff_t n,
                         const std::function<double(std::ptrdiff_t)>& f) {
  const std::ptrdiff_t nc = chunk_count(n);
  ArgMin best;
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    ArgMin local;
    argmin_chunk(c * kChunk, std::min(n, (c + 1) * kChunk), f, local);
    if (local.index >= 0 && (best.index < 0 || local.value < best.value)) {
      best = local;
    }
  }
  return best;
}

ArgMin argmin_map_parallel(std::ptrdiff_t n,
                           const std::function<double(std::ptrdiff_t)>& f) {
  const std::ptrdiff_t nc = chunk_count(n);
  std::vector<ArgMin> partial(static_cast<std::size_t>(nc));
#pragma omp parallel for schedule(static) num_threads(jobs())
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    argmin_chunk(c * kChunk, std::min(n, (c + 1) * kChunk), f,
                 partial[static_cast<std::size_t>(c)]);
  }
  ArgMin best;
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const ArgMin& local = partial[static_cast<std::size_t>(c)];
    if (local.index >= 0 && (best.index < 0 || local.value < best.value)) {
      best = local;
    }
  }
  return best;
}

ArgMin argmin_map(std::ptrdiff_t n,
                  const std::function<double(std::ptrdiff_t)>& f) {
  return go_parallel(n) ? argmin_map_parallel(n, f) : argmin_map_serial(n, f);
}

}  // namespace robustalloc::par
