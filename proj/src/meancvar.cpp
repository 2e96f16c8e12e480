#include "robustalloc/meancvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustalloc/geometry.hpp"
#include "robustalloc/parallel.hpp"
#include "robustalloc/util.hpp"

namespace robustalloc {

SampleSet SampleSet::make(RowMatrix returns) {
  const Eigen::Index n = returns.rows();
  const Eigen::Index d = returns.cols();
  if (n < 1 || d < 1) {
    throw InvalidInputError("SampleSet: needs at least one row and column");
  }
  if (!returns.allFinite()) {
    throw InvalidInputError("SampleSet: non-finite entry");
  }
  SampleSet s;
  s.returns_ = std::move(returns);
  s.mean_ = par::column_sums(s.returns_) / static_cast<double>(n);

  std::vector<double> l1(static_cast<std::size_t>(n));
  std::vector<double> l2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    l1[static_cast<std::size_t>(i)] = s.returns_.row(i).cwiseAbs().sum();
    l2[static_cast<std::size_t>(i)] = s.returns_.row(i).norm();
  }
  s.l1_norm_mean_ = par::block_sum(l1.data(), n) / static_cast<double>(n);
  s.l2_norm_mean_ = par::block_sum(l2.data(), n) / static_cast<double>(n);
  return s;
}

MeanCVaRProblem MeanCVaRProblem::make(double rho, double p, SampleSet normal,
                                      SampleSet stress,
                                      AmbiguitySpec ambiguity) {
  if (!(rho > 0.0)) throw InvalidInputError("MeanCVaRProblem: rho must be > 0");
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidInputError("MeanCVaRProblem: p must lie in (0,1)");
  }
  if (normal.dim() != stress.dim()) {
    throw InvalidInputError("MeanCVaRProblem: regime dimensions differ");
  }
  return MeanCVaRProblem{rho, p, std::move(normal), std::move(stress),
                         std::move(ambiguity)};
}

double cvar_loss(const Vector& x, double tau, const Vector& r, double rho,
                 double p) {
  const double l = -x.dot(r);
  return l + rho / (1.0 - p) * std::max(l - tau, 0.0);
}

namespace {

RegimeTailStats regime_stats(const SampleSet& samples, const Vector& x,
                             double tau) {
  const Eigen::Index n = samples.size();
  std::vector<double> losses(static_cast<std::size_t>(n));
  par::portfolio_losses(samples.returns(), x, losses.data());
  const par::TailStats t = par::tail_stats(samples.returns(), losses.data(), tau);
  const double inv_n = 1.0 / static_cast<double>(n);
  RegimeTailStats out;
  out.mean_loss = t.loss_sum * inv_n;
  out.mean_hinge = t.hinge_sum * inv_n;
  out.tail_fraction = static_cast<double>(t.tail_count) * inv_n;
  out.tail_mean = t.tail_row_sum * inv_n;
  return out;
}

}  // namespace

CvarEvaluation evaluate_samples(const MeanCVaRProblem& pb, const Vector& x,
                                double tau) {
  if (x.size() != pb.dim()) {
    throw InvalidInputError("evaluate_samples: dimension mismatch");
  }
  CvarEvaluation eval;
  eval.normal = regime_stats(pb.normal, x, tau);
  eval.stress = regime_stats(pb.stress, x, tau);
  eval.x_inf = x.lpNorm<Eigen::Infinity>();
  return eval;
}

CvarObjective robust_cvar_from(const MeanCVaRProblem& pb,
                               const CvarEvaluation& eval, double tau) {
  const double kappa = pb.hinge_weight();
  const double normal_term = eval.normal.mean_loss + kappa * eval.normal.mean_hinge;
  const double stress_term = eval.stress.mean_loss + kappa * eval.stress.mean_hinge;
  const double lip = (1.0 + kappa) * eval.x_inf;

  const double lo = pb.ambiguity.lo();
  const double hi = pb.ambiguity.hi();
  const auto inner = [&](double q) {
    return (1.0 - q) * normal_term +
           q * (stress_term + pb.ambiguity.radius(q) * lip);
  };
  if (hi <= lo) {
    const double q = std::min(std::max(pb.ambiguity.q0, lo), hi);
    return {pb.rho * tau + inner(q), q};
  }
  const ScalarMax m = maximize_on_interval(inner, lo, hi);
  return {pb.rho * tau + m.value, m.arg};
}

CvarObjective robust_cvar_disutility(const MeanCVaRProblem& pb,
                                     const Vector& x, double tau) {
  return robust_cvar_from(pb, evaluate_samples(pb, x, tau), tau);
}

SubgradientXA robust_cvar_subgradient_at(const MeanCVaRProblem& pb,
                                         const CvarEvaluation& eval, double q,
                                         const Vector& x) {
  const double kappa = pb.hinge_weight();
  Vector gx = -(1.0 - q) * (pb.normal.mean() + kappa * eval.normal.tail_mean);
  gx += q * (-(pb.stress.mean() + kappa * eval.stress.tail_mean) +
             pb.ambiguity.radius(q) * (1.0 + kappa) * inf_norm_subgradient(x));
  const double gtau =
      pb.rho - kappa * ((1.0 - q) * eval.normal.tail_fraction +
                        q * eval.stress.tail_fraction);
  return SubgradientXA{std::move(gx), gtau};
}

SubgradientXA robust_cvar_subgradient(const MeanCVaRProblem& pb,
                                      const Vector& x, double tau) {
  const CvarEvaluation eval = evaluate_samples(pb, x, tau);
  const CvarObjective obj = robust_cvar_from(pb, eval, tau);
  return robust_cvar_subgradient_at(pb, eval, obj.q, x);
}

Interval threshold_interval(const MeanCVaRProblem& pb) {
  const double m = pb.ambiguity.radius_max();
  const double level = std::max(1.0 / (1.0 - pb.p), 1.0 / pb.p);
  const double bound =
      level * std::max(pb.stress.l1_norm_mean() + m, pb.normal.l1_norm_mean());
  return Interval{-bound, bound};
}

double cvar_empirical(std::vector<double> losses, double p) {
  if (losses.empty()) throw InvalidInputError("cvar_empirical: empty sample");
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidInputError("cvar_empirical: p must lie in (0,1)");
  }
  std::sort(losses.begin(), losses.end());
  const std::size_t n = losses.size();

  // Suffix sums in extended precision; at tau = v[k] the hinge mass is
  // suffix[k] - (n-k) v[k].
  std::vector<long double> suffix(n + 1, 0.0L);
  for (std::size_t k = n; k-- > 0;) {
    suffix[k] = suffix[k + 1] + static_cast<long double>(losses[k]);
  }
  const long double scale = 1.0L / ((1.0L - static_cast<long double>(p)) *
                                    static_cast<long double>(n));
  long double best = std::numeric_limits<long double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const long double tau = losses[k];
    const long double hinge =
        suffix[k] - static_cast<long double>(n - k) * tau;
    best = std::min(best, tau + scale * hinge);
  }
  return static_cast<double>(best);
}

CvarConstants cvar_constants(const MeanCVaRProblem& pb) {
  CvarConstants c;
  c.normal_l2_mean = pb.normal.l2_norm_mean();
  c.stress_l2_mean = pb.stress.l2_norm_mean();
  c.radius_max_interval = pb.ambiguity.radius_max();
  c.radius_max_global = pb.ambiguity.radius.max_on(0.0, 1.0);
  const double kappa = pb.hinge_weight();
  const double gx = (1.0 + kappa) * (std::max(c.normal_l2_mean, c.stress_l2_mean) +
                                     c.radius_max_interval);
  const double gtau = pb.rho * std::max(pb.p / (1.0 - pb.p), 1.0);
  c.subgradient_bound = std::sqrt(gx * gx + gtau * gtau);
  return c;
}

}  // namespace robustalloc
