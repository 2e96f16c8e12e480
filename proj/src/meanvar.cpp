#include "robustalloc/meanvar.hpp"

#include <cmath>

#include "robustalloc/util.hpp"

namespace robustalloc {

MomentSpec MomentSpec::make(Vector mean, Matrix cov) {
  const Eigen::Index d = mean.size();
  if (d < 1) throw InvalidInputError("MomentSpec: dimension < 1");
  if (cov.rows() != d || cov.cols() != d) {
    throw InvalidInputError("MomentSpec: covariance shape mismatch");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(mean[i])) {
      throw InvalidInputError("MomentSpec: non-finite mean");
    }
  }
  const double max_abs = cov.cwiseAbs().maxCoeff();
  if (!std::isfinite(max_abs)) {
    throw InvalidInputError("MomentSpec: non-finite covariance");
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, max_abs)) {
    throw InvalidInputError("MomentSpec: covariance not symmetric");
  }
  Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw InvalidInputError("MomentSpec: eigen decomposition failed");
  }
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-10 * hi) || !(lo > 0.0)) {
    throw InvalidInputError("MomentSpec: covariance not positive definite");
  }
  return MomentSpec{std::move(mean), std::move(sym)};
}

double MomentSpec::second_moment_trace() const {
  return cov.trace() + mean.squaredNorm();
}

MeanVarProblem MeanVarProblem::make(double gamma, MomentSpec normal,
                                    MomentSpec stress,
                                    AmbiguitySpec ambiguity) {
  if (!(gamma > 0.0)) throw InvalidInputError("MeanVarProblem: gamma must be > 0");
  if (normal.dim() != stress.dim()) {
    throw InvalidInputError("MeanVarProblem: regime dimensions differ");
  }
  Matrix second = normal.cov + normal.mean * normal.mean.transpose();
  return MeanVarProblem{gamma, std::move(normal), std::move(stress),
                        std::move(ambiguity), std::move(second)};
}

double anchored_quadratic(double y, double anchor, double gamma) {
  const double dev = y - anchor;
  return dev * dev - gamma * y;
}

double normal_disutility(const MeanVarProblem& p, const Vector& x,
                         double anchor) {
  const double mean_ret = x.dot(p.normal.mean);
  const double var = x.dot(p.normal.cov * x);
  const double dev = mean_ret - anchor;
  return var + dev * dev - p.gamma * mean_ret;
}

double stress_deviation(const MeanVarProblem& p, const Vector& x,
                        double anchor) {
  const double shifted = x.dot(p.stress.mean) - (2.0 * anchor + p.gamma) / 2.0;
  return std::sqrt(x.dot(p.stress.cov * x) + shifted * shifted);
}

double worst_stress_disutility(const MeanVarProblem& p, double q,
                               const Vector& x, double anchor) {
  const double r = p.ambiguity.radius(q);
  const double s = stress_deviation(p, x, anchor);
  const double root = r * x.norm() + s;
  return root * root - anchor * p.gamma - p.gamma * p.gamma / 4.0;
}

double mixture_disutility(const MeanVarProblem& p, double q, const Vector& x,
                          double anchor) {
  return (1.0 - q) * normal_disutility(p, x, anchor) +
         q * worst_stress_disutility(p, q, x, anchor);
}

Interval anchor_interval(const MeanVarProblem& p) {
  const double m = p.ambiguity.radius_max();
  const double stress_bound = 2.0 * (p.stress.second_moment_trace() + m * m);
  const double bound =
      std::sqrt(std::max(stress_bound, p.normal.second_moment_trace()));
  return Interval{-bound, bound};
}

WorstWeight worst_weight(const MeanVarProblem& p, const Vector& x,
                         double anchor) {
  const double lo = p.ambiguity.lo();
  const double hi = p.ambiguity.hi();

  // q enters only through the scalar radius, so hoist everything else.
  const double base = normal_disutility(p, x, anchor);
  const double s = stress_deviation(p, x, anchor);
  const double xnorm = x.norm();
  const double offset = anchor * p.gamma + p.gamma * p.gamma / 4.0;
  const auto objective = [&](double q) {
    const double root = p.ambiguity.radius(q) * xnorm + s;
    return (1.0 - q) * base + q * (root * root - offset);
  };

  if (hi <= lo) {
    const double q = std::min(std::max(p.ambiguity.q0, lo), hi);
    return {q, objective(q)};
  }
  const ScalarMax m = maximize_on_interval(objective, lo, hi);
  return {m.arg, m.value};
}

double robust_disutility(const MeanVarProblem& p, const Vector& x,
                         double anchor) {
  return worst_weight(p, x, anchor).value;
}

SubgradientXA robust_subgradient_at(const MeanVarProblem& p, double q,
                                    const Vector& x, double anchor) {
  const double gamma = p.gamma;
  const double r = p.ambiguity.radius(q);
  const double s = stress_deviation(p, x, anchor);
  const double xnorm = x.norm();
  const double shifted = x.dot(p.stress.mean) - (2.0 * anchor + gamma) / 2.0;
  const double root = r * xnorm + s;

  Vector gx = (1.0 - q) * (2.0 * (p.normal_second_moment * x) -
                           (2.0 * anchor + gamma) * p.normal.mean);
  Vector stress_dir =
      (p.stress.cov * x + shifted * p.stress.mean) / s + (r / xnorm) * x;
  gx += q * 2.0 * root * stress_dir;

  const double ga_normal = -2.0 * (x.dot(p.normal.mean) - anchor);
  const double ga_stress = -2.0 * (root / s) * shifted - gamma;
  const double ga = (1.0 - q) * ga_normal + q * ga_stress;
  return SubgradientXA{std::move(gx), ga};
}

SubgradientXA robust_subgradient(const MeanVarProblem& p, const Vector& x,
                                 double anchor) {
  return robust_subgradient_at(p, worst_weight(p, x, anchor).q, x, anchor);
}

Matrix moment_block_matrix(const MomentSpec& m) {
  const int d = m.dim();
  Matrix block(d + 1, d + 1);
  block.topLeftCorner(d, d) = m.cov + m.mean * m.mean.transpose();
  block.topRightCorner(d, 1) = -m.mean;
  block.bottomLeftCorner(1, d) = -m.mean.transpose();
  block(d, d) = 1.0;
  return block;
}

double strong_convexity_eigenvalue(const MeanVarProblem& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(moment_block_matrix(p.normal));
  if (eig.info() != Eigen::Success) {
    throw InvalidInputError("strong_convexity_eigenvalue: eigen solve failed");
  }
  return eig.eigenvalues().minCoeff();
}

}  // namespace robustalloc
