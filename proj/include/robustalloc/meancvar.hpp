#pragma once

#include <vector>

#include "robustalloc/ambiguity.hpp"
#include "robustalloc/meanvar.hpp"
#include "robustalloc/types.hpp"

namespace robustalloc {

/// Immutable block of return observations, one per row, with the empirical
/// moments the CVaR path keeps reusing cached at construction.
class SampleSet {
 public:
  static SampleSet make(RowMatrix returns);

  const RowMatrix& returns() const { return returns_; }
  int size() const { return static_cast<int>(returns_.rows()); }
  int dim() const { return static_cast<int>(returns_.cols()); }

  const Vector& mean() const { return mean_; }
  double l1_norm_mean() const { return l1_norm_mean_; }  // avg ||R||_1
  double l2_norm_mean() const { return l2_norm_mean_; }  // avg ||R||_2

 private:
  RowMatrix returns_;
  Vector mean_;
  double l1_norm_mean_ = 0.0;
  double l2_norm_mean_ = 0.0;
};

/// Robust mean-CVaR allocation problem over two empirical regimes, with the
/// stress regime ambiguous within a radius-r(q) transport ball (L1 ground
/// cost) and the weight q ranging over the ambiguity interval.
struct MeanCVaRProblem {
  double rho = 10.0;  // risk-aversion weight on the CVaR term
  double p = 0.95;    // CVaR confidence level
  SampleSet normal;
  SampleSet stress;
  AmbiguitySpec ambiguity;

  static MeanCVaRProblem make(double rho, double p, SampleSet normal,
                              SampleSet stress, AmbiguitySpec ambiguity);

  int dim() const { return normal.dim(); }
  double hinge_weight() const { return rho / (1.0 - p); }
};

/// -x'r + (rho/(1-p)) max(-x'r - tau, 0).
double cvar_loss(const Vector& x, double tau, const Vector& r, double rho,
                 double p);

/// Per-regime empirical statistics at a loss threshold. The tail is strict,
/// -x'R > tau; ties at the kink contribute nothing.
struct RegimeTailStats {
  double mean_loss = 0.0;      // avg of -x'R
  double mean_hinge = 0.0;     // avg of max(-x'R - tau, 0)
  double tail_fraction = 0.0;  // empirical P(-x'R > tau)
  Vector tail_mean;            // avg of R 1{-x'R > tau}
};

struct CvarEvaluation {
  RegimeTailStats normal;
  RegimeTailStats stress;
  double x_inf = 0.0;
};

/// One pass over both sample sets; feeds both the objective and the
/// subgradient so a solver iteration touches each sample once.
CvarEvaluation evaluate_samples(const MeanCVaRProblem& pb, const Vector& x,
                                double tau);

struct CvarObjective {
  double value = 0.0;
  double q = 0.0;
};

/// rho*tau + sup over the weight interval of
/// (1-q) E_N[loss] + q (E_S[loss] + r(q) (1 + rho/(1-p)) ||x||_inf),
/// expectations taken as sample averages. Returns the value and a maximizer.
CvarObjective robust_cvar_disutility(const MeanCVaRProblem& pb,
                                     const Vector& x, double tau);
CvarObjective robust_cvar_from(const MeanCVaRProblem& pb,
                               const CvarEvaluation& eval, double tau);

SubgradientXA robust_cvar_subgradient(const MeanCVaRProblem& pb,
                                      const Vector& x, double tau);
SubgradientXA robust_cvar_subgradient_at(const MeanCVaRProblem& pb,
                                         const CvarEvaluation& eval, double q,
                                         const Vector& x);

/// Compact interval [-B, B] containing the optimal threshold,
/// B = max(1/(1-p), 1/p) * max(E_S||R||_1 + M, E_N||R||_1).
Interval threshold_interval(const MeanCVaRProblem& pb);

/// Exact empirical CVaR at level p: the Rockafellar objective is piecewise
/// linear with its minimum at a sample value, so candidates are enumerated.
double cvar_empirical(std::vector<double> losses, double p);

/// Lipschitz and subgradient-norm constants of the CVaR objective computed
/// from empirical moments. radius_max_interval bounds r over the weight
/// interval (used for step sizes); radius_max_global bounds it over [0,1].
struct CvarConstants {
  double normal_l2_mean = 0.0;
  double stress_l2_mean = 0.0;
  double radius_max_interval = 0.0;
  double radius_max_global = 0.0;
  double subgradient_bound = 0.0;
};

CvarConstants cvar_constants(const MeanCVaRProblem& pb);

}  // namespace robustalloc
