#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "robustalloc/geometry.hpp"
#include "robustalloc/meancvar.hpp"
#include "robustalloc/meanvar.hpp"
#include "robustalloc/types.hpp"

namespace robustalloc {

enum class ScheduleKind { Fixed, Lipschitz, StronglyConvex, SmoothGeometric };

/// Step-size rule. Unset parameters (NaN) are filled from the problem:
/// Lipschitz takes radius = feasible-set diameter and lipschitz = the
/// estimated subgradient bound; StronglyConvex takes alpha from the
/// strong-convexity eigenvalue; SmoothGeometric derives a constant step from
/// the estimated smoothness constants.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::StronglyConvex;
  double eta = std::numeric_limits<double>::quiet_NaN();
  double radius = std::numeric_limits<double>::quiet_NaN();
  double lipschitz = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();

  static StepSchedule fixed(double eta);
  static StepSchedule lipschitz(
      double radius = std::numeric_limits<double>::quiet_NaN(),
      double lipschitz = std::numeric_limits<double>::quiet_NaN());
  static StepSchedule strongly_convex(
      double alpha = std::numeric_limits<double>::quiet_NaN());
  static StepSchedule smooth_geometric();
};

enum class Averaging { LastIterate, Uniform, WeightedK };

struct SolverConfig {
  int iterations = 1000;
  StepSchedule schedule;
  /// Defaults to the pairing of the corresponding convergence guarantee:
  /// Fixed/SmoothGeometric -> last iterate, Lipschitz -> uniform,
  /// StronglyConvex -> k-weighted.
  std::optional<Averaging> averaging;
  std::optional<Vector> x0;
  std::optional<double> aux0;
  std::uint64_t seed = 0;
  int constant_samples = 256;
  bool record_trace = true;
};

struct TracePoint {
  Vector x;
  double aux = 0.0;
  double q = 0.0;
  double objective = 0.0;
};

struct SolveResult {
  SimplexPoint x;
  double aux = 0.0;
  double objective = 0.0;
  std::vector<TracePoint> trace;  // length iterations + 1 when recorded
  std::vector<std::string> warnings;
  Averaging averaging = Averaging::LastIterate;
  double step_eta0 = 0.0;  // step size used at the first iteration
};

/// Subgradient or iterate turned non-finite; carries the trace up to the
/// failing step.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::vector<TracePoint> trace)
      : std::runtime_error(what),
        trace_(std::make_shared<std::vector<TracePoint>>(std::move(trace))) {}

  const std::vector<TracePoint>& trace() const { return *trace_; }

 private:
  std::shared_ptr<std::vector<TracePoint>> trace_;
};

/// Sampled bounds on the objective's derivatives over the compact domain
/// (weight interval x anchor interval x simplex), inflated by 25% since a
/// valid upper bound is all the step sizes need.
struct SmoothnessConstants {
  double subgradient_bound = 0.0;  // sup ||(g_x, g_aux)||
  double hessian_bound = 0.0;      // sup ||d2h/d(x,aux)^2||_2
  double cross_bound = 0.0;        // sup ||d2h/dq d(x,aux)||
  double rate_constant = 0.0;      // NaN when the radius is not concave at q0
  double strong_convexity = 0.0;   // smallest eigenvalue of the normal block
  double hqq_max = 0.0;            // sampled max of d2h/dq2
  bool strongly_concave_in_q = false;
};

SmoothnessConstants estimate_constants(const MeanVarProblem& p, int samples);

/// Projected subgradient descent: at each step the worst-case weight is
/// found, a subgradient taken there, the portfolio projected back onto the
/// simplex and the auxiliary variable clamped to its compact interval.
SolveResult solve(const MeanVarProblem& p, const SolverConfig& config);
SolveResult solve(const MeanCVaRProblem& p, const SolverConfig& config);

/// Trace rows as k,q_star,J,gap,x_0..x_{d-1},aux with 17 significant digits.
/// gap is J_k - reference_objective (NaN reference leaves the column empty).
void write_trace_csv(std::ostream& os, const SolveResult& result,
                     double reference_objective);

}  // namespace robustalloc
