#include "robustalloc/simulation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "robustalloc/oracles.hpp"
#include "robustalloc/parallel.hpp"
#include "robustalloc/util.hpp"

namespace robustalloc {

RegimeModel RegimeModel::standard(int d, double q_true) {
  if (d < 1) throw InvalidInputError("RegimeModel: d < 1");
  if (!(q_true > 0.0 && q_true < 1.0)) {
    throw InvalidInputError("RegimeModel: q_true must lie in (0,1)");
  }
  RegimeModel m;
  m.d = d;
  m.q_true = q_true;
  return m;
}

Vector RegimeModel::normal_mean() const {
  Vector mu(d);
  for (int i = 1; i <= d; ++i) mu[i - 1] = 0.03 * i;
  return mu;
}

Matrix RegimeModel::normal_cov() const {
  Matrix cov = Matrix::Constant(d, d, 0.02 * 0.02);
  for (int i = 1; i <= d; ++i) {
    cov(i - 1, i - 1) += 0.025 * 0.025 * i * i;
  }
  return cov;
}

Vector RegimeModel::stress_location() const {
  Vector mu(d);
  for (int i = 1; i <= d; ++i) mu[i - 1] = -0.05 * (i + 1);
  return mu;
}

Matrix RegimeModel::stress_scale() const {
  Matrix cov(d, d);
  for (int i = 1; i <= d; ++i) {
    for (int j = 1; j <= d; ++j) {
      const double vol = (0.1 + 0.03 * i) * (0.1 + 0.03 * j);
      cov(i - 1, j - 1) = vol * (i == j ? 1.0 : 0.7);
    }
  }
  return cov;
}

MomentSpec RegimeModel::normal_moments() const {
  return MomentSpec::make(normal_mean(), normal_cov());
}

MomentSpec RegimeModel::stress_moments() const {
  if (!(dof > 2.0)) {
    throw InvalidInputError("RegimeModel: stress covariance needs dof > 2");
  }
  Matrix cov = stress_scale();
  if (stress_par == StressParameterization::Scale) {
    cov *= dof / (dof - 2.0);
  }
  return MomentSpec::make(stress_location(), std::move(cov));
}

int GeneratedDataset::stress_count() const {
  int c = 0;
  for (const auto s : stress) c += s;
  return c;
}

GeneratedDataset sample_mixture(const RegimeModel& model, int n,
                                std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample_mixture: n < 1");
  const int d = model.d;

  Matrix normal_chol;
  {
    Eigen::LLT<Matrix> llt(model.normal_cov());
    if (llt.info() != Eigen::Success) {
      throw InvalidInputError("sample_mixture: normal covariance not PD");
    }
    normal_chol = llt.matrixL();
  }
  Matrix stress_chol;
  {
    Matrix scale = model.stress_scale();
    if (model.stress_par == StressParameterization::Covariance) {
      // Rule matrix is the covariance; the sampler needs the t scale.
      scale *= (model.dof - 2.0) / model.dof;
    }
    Eigen::LLT<Matrix> llt(scale);
    if (llt.info() != Eigen::Success) {
      throw InvalidInputError("sample_mixture: stress scale not PD");
    }
    stress_chol = llt.matrixL();
  }
  const Vector mu_n = model.normal_mean();
  const Vector mu_s = model.stress_location();

  GeneratedDataset data;
  data.returns.resize(n, d);
  data.stress.resize(static_cast<std::size_t>(n));
  data.seed = seed;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution regime(model.q_true);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(model.dof);

  Vector z(d);
  for (int row = 0; row < n; ++row) {
    const bool stressed = regime(rng);
    data.stress[static_cast<std::size_t>(row)] = stressed ? 1 : 0;
    if (stressed) {
      const double w = chi2(rng);
      for (int j = 0; j < d; ++j) z[j] = gauss(rng);
      data.returns.row(row) =
          (mu_s + (stress_chol * z) / std::sqrt(w / model.dof)).transpose();
    } else {
      for (int j = 0; j < d; ++j) z[j] = gauss(rng);
      data.returns.row(row) = (mu_n + normal_chol * z).transpose();
    }
  }
  return data;
}

namespace {

RowMatrix select_rows(const GeneratedDataset& data, bool stressed) {
  const int n = data.size();
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if ((data.stress[static_cast<std::size_t>(i)] != 0) == stressed) ++count;
  }
  RowMatrix rows(count, data.dim());
  int at = 0;
  for (int i = 0; i < n; ++i) {
    if ((data.stress[static_cast<std::size_t>(i)] != 0) == stressed) {
      rows.row(at++) = data.returns.row(i);
    }
  }
  return rows;
}

MomentSpec sample_moments(const RowMatrix& rows, const char* regime) {
  const Eigen::Index n = rows.rows();
  if (n < 2) {
    throw InsufficientDataError(std::string("fit: regime '") + regime +
                                "' has fewer than 2 observations");
  }
  const Vector mean = par::column_sums(rows) / static_cast<double>(n);
  Matrix centered = rows;
  centered.rowwise() -= mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  try {
    return MomentSpec::make(mean, std::move(cov));
  } catch (const InvalidInputError& e) {
    throw InsufficientDataError(std::string("fit: regime '") + regime +
                                "' produced a degenerate covariance: " +
                                e.what());
  }
}

AmbiguitySpec degenerate_ambiguity() {
  return AmbiguitySpec::make(0.5, 0.0, RadiusFunction::powers(0.0, 2.0, 2.0));
}

}  // namespace

MeanVarProblem fit_meanvar(const GeneratedDataset& data, double gamma,
                           const AmbiguitySpec& ambiguity) {
  const RowMatrix normal_rows = select_rows(data, false);
  const RowMatrix stress_rows = select_rows(data, true);
  return MeanVarProblem::make(gamma, sample_moments(normal_rows, "normal"),
                              sample_moments(stress_rows, "stress"), ambiguity);
}

MeanCVaRProblem fit_meancvar(const GeneratedDataset& data, double rho,
                             double p, const AmbiguitySpec& ambiguity) {
  const RowMatrix normal_rows = select_rows(data, false);
  const RowMatrix stress_rows = select_rows(data, true);
  if (normal_rows.rows() < 1 || stress_rows.rows() < 1) {
    throw InsufficientDataError("fit: a regime has no observations");
  }
  return MeanCVaRProblem::make(rho, p, SampleSet::make(normal_rows),
                               SampleSet::make(stress_rows), ambiguity);
}

SolveResult saa_meanvar(const GeneratedDataset& data, double gamma,
                        const SolverConfig& config) {
  if (data.size() < 2) throw InsufficientDataError("saa: fewer than 2 rows");
  MomentSpec pooled = sample_moments(data.returns, "pooled");
  MeanVarProblem problem =
      MeanVarProblem::make(gamma, pooled, pooled, degenerate_ambiguity());
  return solve(problem, config);
}

SolveResult saa_meancvar(const GeneratedDataset& data, double rho, double p,
                         const SolverConfig& config) {
  SampleSet pooled = SampleSet::make(data.returns);
  MeanCVaRProblem problem = MeanCVaRProblem::make(rho, p, pooled, pooled,
                                                  degenerate_ambiguity());
  return solve(problem, config);
}

MeanVarProblem pooled_meanvar_from_moments(const MomentSpec& moments,
                                           double gamma) {
  return MeanVarProblem::make(gamma, moments, moments, degenerate_ambiguity());
}

double evaluate_oos_meanvar(const Vector& x, const GeneratedDataset& test,
                            double gamma) {
  const Eigen::Index n = test.returns.rows();
  if (n < 1) throw InvalidInputError("evaluate_oos: empty test set");
  std::vector<double> ret(static_cast<std::size_t>(n));
  par::portfolio_losses(test.returns, x, ret.data());
  for (auto& r : ret) r = -r;  // portfolio returns, not losses
  const double mean = par::block_sum(ret.data(), n) / static_cast<double>(n);
  for (auto& r : ret) {
    const double dev = r - mean;
    r = dev * dev;
  }
  const double var = par::block_sum(ret.data(), n) / static_cast<double>(n);
  return var - gamma * mean;
}

double evaluate_oos_meancvar(const Vector& x, const GeneratedDataset& test,
                             double rho, double p) {
  const Eigen::Index n = test.returns.rows();
  if (n < 1) throw InvalidInputError("evaluate_oos: empty test set");
  std::vector<double> losses(static_cast<std::size_t>(n));
  par::portfolio_losses(test.returns, x, losses.data());
  const double mean = par::block_sum(losses.data(), n) / static_cast<double>(n);
  return mean + rho * cvar_empirical(losses, p);
}

namespace {

struct TrueBest {
  Vector weights;
  double value = 0.0;
};

TrueBest solve_true_best(const ExperimentGrid& grid,
                         const GeneratedDataset& test,
                         std::uint64_t master_seed) {
  TrueBest out;
  if (grid.disutility.kind == DisutilityParams::Kind::MeanVar) {
    // Grid-free: exact mixture moments of the generative model.
    const MomentSpec mn = grid.model.normal_moments();
    const MomentSpec ms = grid.model.stress_moments();
    const double q = grid.model.q_true;
    const Vector mean = (1.0 - q) * mn.mean + q * ms.mean;
    const Matrix second =
        (1.0 - q) * (mn.cov + mn.mean * mn.mean.transpose()) +
        q * (ms.cov + ms.mean * ms.mean.transpose());
    const Matrix cov = second - mean * mean.transpose();
    const MeanVarProblem problem = pooled_meanvar_from_moments(
        MomentSpec::make(mean, cov), grid.disutility.gamma);
    SolverConfig cfg = grid.solver;
    cfg.record_trace = false;
    const SolveResult r = solve(problem, cfg);
    out.weights = r.x.weights;
    out.value = evaluate_oos_meanvar(out.weights, test, grid.disutility.gamma);
  } else {
    const GeneratedDataset big = sample_mixture(
        grid.model, grid.true_best_n, derive_seed(master_seed, 0x7B35Cull, 1));
    SolverConfig cfg = grid.solver;
    cfg.record_trace = false;
    const SolveResult r =
        saa_meancvar(big, grid.disutility.rho, grid.disutility.p, cfg);
    out.weights = r.x.weights;
    out.value = evaluate_oos_meancvar(out.weights, test, grid.disutility.rho,
                                      grid.disutility.p);
  }
  return out;
}

ReplicationRecord run_replication(const ExperimentGrid& grid,
                                  const GeneratedDataset& test,
                                  std::uint64_t master_seed,
                                  std::size_t cell_index, int rep,
                                  double epsilon, double c) {
  ReplicationRecord rec;
  rec.rep = rep;
  rec.seed = derive_seed(master_seed, cell_index,
                         static_cast<std::uint64_t>(rep));
  try {
    const GeneratedDataset train =
        sample_mixture(grid.model, grid.train_n, rec.seed);
    const AmbiguitySpec ambiguity = AmbiguitySpec::make(
        grid.q0, epsilon,
        RadiusFunction::beta_shaped(c, grid.concentration, grid.q0));
    SolverConfig cfg = grid.solver;
    cfg.record_trace = false;

    if (grid.disutility.kind == DisutilityParams::Kind::MeanVar) {
      const MeanVarProblem dro =
          fit_meanvar(train, grid.disutility.gamma, ambiguity);
      const SolveResult dro_result = solve(dro, cfg);
      const SolveResult saa_result =
          saa_meanvar(train, grid.disutility.gamma, cfg);
      rec.dro_weights = dro_result.x.weights;
      rec.saa_weights = saa_result.x.weights;
      rec.dro_oos =
          evaluate_oos_meanvar(rec.dro_weights, test, grid.disutility.gamma);
      rec.saa_oos =
          evaluate_oos_meanvar(rec.saa_weights, test, grid.disutility.gamma);
    } else {
      const MeanCVaRProblem dro = fit_meancvar(train, grid.disutility.rho,
                                               grid.disutility.p, ambiguity);
      const SolveResult dro_result = solve(dro, cfg);
      const SolveResult saa_result =
          saa_meancvar(train, grid.disutility.rho, grid.disutility.p, cfg);
      rec.dro_weights = dro_result.x.weights;
      rec.saa_weights = saa_result.x.weights;
      rec.dro_oos = evaluate_oos_meancvar(rec.dro_weights, test,
                                          grid.disutility.rho, grid.disutility.p);
      rec.saa_oos = evaluate_oos_meancvar(rec.saa_weights, test,
                                          grid.disutility.rho, grid.disutility.p);
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

SweepResult run_sweep(const ExperimentGrid& grid, std::uint64_t master_seed) {
  if (grid.cs.empty()) throw ConfigError("run_sweep: empty c grid");
  if (grid.epsilons.empty()) throw ConfigError("run_sweep: empty epsilon grid");
  if (grid.replications < 1 || grid.train_n < 1 || grid.test_n < 1 ||
      grid.true_best_n < 1) {
    throw ConfigError("run_sweep: all sizes must be >= 1");
  }

  SweepResult result;
  result.test_seed = derive_seed(master_seed, 0x7E57ull, 0);
  const GeneratedDataset test =
      sample_mixture(grid.model, grid.test_n, result.test_seed);

  const TrueBest best = solve_true_best(grid, test, master_seed);
  result.true_best = best.value;
  result.true_best_weights = best.weights;

  const std::size_t n_cells = grid.epsilons.size() * grid.cs.size();
  const std::size_t n_tasks = n_cells * static_cast<std::size_t>(grid.replications);
  std::vector<ReplicationRecord> records(n_tasks);

  const auto tasks = static_cast<std::ptrdiff_t>(n_tasks);
#pragma omp parallel for schedule(dynamic) num_threads(par::jobs())
  for (std::ptrdiff_t t = 0; t < tasks; ++t) {
    const std::size_t cell = static_cast<std::size_t>(t) /
                             static_cast<std::size_t>(grid.replications);
    const int rep = static_cast<int>(static_cast<std::size_t>(t) %
                                     static_cast<std::size_t>(grid.replications));
    const std::size_t ei = cell / grid.cs.size();
    const std::size_t ci = cell % grid.cs.size();
    records[static_cast<std::size_t>(t)] =
        run_replication(grid, test, master_seed, cell, rep, grid.epsilons[ei],
                        grid.cs[ci]);
  }

  result.cells.reserve(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const std::size_t ei = cell / grid.cs.size();
    const std::size_t ci = cell % grid.cs.size();
    CellSummary summary;
    summary.epsilon = grid.epsilons[ei];
    summary.c = grid.cs[ci];
    summary.dro_mean_weights = Vector::Zero(grid.model.d);
    summary.saa_mean_weights = Vector::Zero(grid.model.d);

    std::vector<double> dro_vals;
    std::vector<double> saa_vals;
    for (int rep = 0; rep < grid.replications; ++rep) {
      const ReplicationRecord& rec =
          records[cell * static_cast<std::size_t>(grid.replications) +
                  static_cast<std::size_t>(rep)];
      summary.replications.push_back(rec);
      if (!rec.ok) continue;
      ++summary.completed;
      dro_vals.push_back(rec.dro_oos);
      saa_vals.push_back(rec.saa_oos);
      summary.dro_mean_weights += rec.dro_weights;
      summary.saa_mean_weights += rec.saa_weights;
    }
    if (summary.completed > 0) {
      const double inv = 1.0 / summary.completed;
      summary.dro_mean = inv * std::accumulate(dro_vals.begin(), dro_vals.end(), 0.0);
      summary.saa_mean = inv * std::accumulate(saa_vals.begin(), saa_vals.end(), 0.0);
      summary.dro_p20 = percentile(dro_vals, 0.20);
      summary.dro_p80 = percentile(dro_vals, 0.80);
      summary.saa_p20 = percentile(saa_vals, 0.20);
      summary.saa_p80 = percentile(saa_vals, 0.80);
      summary.dro_mean_weights *= inv;
      summary.saa_mean_weights *= inv;
    }
    result.cells.push_back(std::move(summary));
  }
  return result;
}

namespace {

template <class Problem>
struct ReferencePolicy;

template <>
struct ReferencePolicy<MeanVarProblem> {
  static std::vector<SolverConfig> candidates(const MeanVarProblem& p,
                                              const SolverConfig& subject,
                                              int factor) {
    std::vector<SolverConfig> out;
    SolverConfig sc = subject;
    sc.iterations = subject.iterations * factor;
    sc.schedule = StepSchedule::strongly_convex();
    sc.averaging = Averaging::WeightedK;
    sc.x0.reset();
    sc.aux0.reset();
    sc.record_trace = true;
    out.push_back(sc);
    // The geometric step converges far below the 1/k schedule whenever the
    // radius admits it, which the gap floor of a fixed-step subject needs.
    try {
      geometric_rate_constant(p.ambiguity, p.dim());
      SolverConfig gc = sc;
      gc.schedule = StepSchedule::smooth_geometric();
      gc.averaging = Averaging::LastIterate;
      out.push_back(gc);
    } catch (const NotApplicableError&) {
    }
    return out;
  }

  static double grid_value(const MeanVarProblem& p) {
    if (p.dim() > 3) return std::numeric_limits<double>::infinity();
    const Interval anchor = anchor_interval(p);
    oracles::GridSpec spec;
    spec.simplex_resolution = 96;
    spec.aux_resolution = 97;
    spec.aux_lo = anchor.lo;
    spec.aux_hi = anchor.hi;
    return oracles::grid_minimize(
               [&](const Vector& x, double a) {
                 return robust_disutility(p, x, a);
               },
               p.dim(), spec)
        .value;
  }
};

template <>
struct ReferencePolicy<MeanCVaRProblem> {
  static std::vector<SolverConfig> candidates(const MeanCVaRProblem&,
                                              const SolverConfig& subject,
                                              int factor) {
    SolverConfig sc = subject;
    sc.iterations = subject.iterations * factor;
    sc.schedule = StepSchedule::lipschitz();
    sc.averaging = Averaging::Uniform;
    sc.x0.reset();
    sc.aux0.reset();
    sc.record_trace = true;
    return {sc};
  }

  static double grid_value(const MeanCVaRProblem& p) {
    if (p.dim() > 3) return std::numeric_limits<double>::infinity();
    const Interval tau = threshold_interval(p);
    oracles::GridSpec spec;
    spec.simplex_resolution = 96;
    spec.aux_resolution = 97;
    spec.aux_lo = tau.lo;
    spec.aux_hi = tau.hi;
    return oracles::grid_minimize(
               [&](const Vector& x, double t) {
                 return robust_cvar_disutility(p, x, t).value;
               },
               p.dim(), spec)
        .value;
  }
};

template <class Problem>
GapTrace run_convergence_impl(const Problem& p, const SolverConfig& config,
                              int reference_factor) {
  if (reference_factor < 1) {
    throw InvalidInputError("run_convergence: reference factor < 1");
  }
  SolverConfig subject_cfg = config;
  subject_cfg.record_trace = true;
  const SolveResult subject = solve(p, subject_cfg);

  GapTrace out;
  out.warnings = subject.warnings;
  out.objective.reserve(subject.trace.size());
  for (const TracePoint& t : subject.trace) out.objective.push_back(t.objective);

  for (int attempt = 0; attempt < 2; ++attempt) {
    const int factor = reference_factor * (attempt == 0 ? 1 : 10);
    double reference = std::numeric_limits<double>::infinity();
    for (const SolverConfig& rc :
         ReferencePolicy<Problem>::candidates(p, config, factor)) {
      const SolveResult ref = solve(p, rc);
      reference = std::min(reference, ref.objective);
      for (const TracePoint& t : ref.trace) {
        reference = std::min(reference, t.objective);
      }
    }
    reference = std::min(reference, ReferencePolicy<Problem>::grid_value(p));

    double min_gap = std::numeric_limits<double>::infinity();
    for (const double j : out.objective) min_gap = std::min(min_gap, j - reference);
    if (min_gap >= -1e-8) {
      out.reference = reference;
      out.gap.clear();
      for (const double j : out.objective) out.gap.push_back(j - reference);
      return out;
    }
  }
  throw NumericalFailure(
      "run_convergence: reference run stayed above the subject trajectory",
      subject.trace);
}

}  // namespace

GapTrace run_convergence(const MeanVarProblem& p, const SolverConfig& config,
                         int reference_factor) {
  return run_convergence_impl(p, config, reference_factor);
}

GapTrace run_convergence(const MeanCVaRProblem& p, const SolverConfig& config,
                         int reference_factor) {
  return run_convergence_impl(p, config, reference_factor);
}

}  // namespace robustalloc
