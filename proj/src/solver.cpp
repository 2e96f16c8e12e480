#include "robustalloc/solver.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "robustalloc/util.hpp"

namespace robustalloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Radical-inverse (Halton) sequence; deterministic low-discrepancy samples
// for the constant estimation.
double radical_inverse(int base, std::uint64_t index) {
  double inv = 1.0 / base;
  double result = 0.0;
  double frac = inv;
  while (index > 0) {
    result += static_cast<double>(index % static_cast<std::uint64_t>(base)) * frac;
    index /= static_cast<std::uint64_t>(base);
    frac *= inv;
  }
  return result;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43};

Vector halton_simplex(std::uint64_t index, int d, int base_offset) {
  // Exponential-spacings map: u -> -log(1-u), normalized.
  Vector e(d);
  double total = 0.0;
  for (int j = 0; j < d; ++j) {
    const double u = radical_inverse(kPrimes[base_offset + j], index);
    const double v = -std::log1p(-std::min(u, 1.0 - 1e-12));
    e[j] = v + 1e-9;
    total += e[j];
  }
  return e / total;
}

struct MeanVarTraits {
  using Problem = MeanVarProblem;

  static Interval aux_interval(const Problem& p) { return anchor_interval(p); }

  static WorstWeight value(const Problem& p, const Vector& x, double aux) {
    return worst_weight(p, x, aux);
  }

  static SubgradientXA grad_at(const Problem& p, double q, const Vector& x,
                               double aux) {
    return robust_subgradient_at(p, q, x, aux);
  }

  static double default_alpha(const Problem& p) {
    const double slack = 1.0 - p.ambiguity.q0 - p.ambiguity.epsilon;
    if (!(slack > 0.0)) {
      throw ConfigError(
          "strongly_convex schedule: weight interval reaches 1, no strong "
          "convexity modulus; pass alpha explicitly");
    }
    return strong_convexity_eigenvalue(p) * slack;
  }

  static double default_lipschitz(const Problem& p, const SolverConfig& cfg) {
    return estimate_constants(p, cfg.constant_samples).subgradient_bound;
  }

  static double geometric_eta(const Problem& p, const SolverConfig& cfg) {
    const SmoothnessConstants c = estimate_constants(p, cfg.constant_samples);
    if (!std::isfinite(c.rate_constant)) {
      throw ConfigError(
          "smooth_geometric schedule: rate constant unavailable for this "
          "radius");
    }
    return c.rate_constant /
           (c.cross_bound * c.cross_bound + c.hessian_bound * c.rate_constant);
  }
};

struct MeanCVaRTraits {
  using Problem = MeanCVaRProblem;

  static Interval aux_interval(const Problem& p) {
    return threshold_interval(p);
  }

  static WorstWeight value(const Problem& p, const Vector& x, double aux) {
    const CvarObjective obj = robust_cvar_disutility(p, x, aux);
    return WorstWeight{obj.q, obj.value};
  }

  static SubgradientXA grad_at(const Problem& p, double q, const Vector& x,
                               double aux) {
    return robust_cvar_subgradient_at(p, evaluate_samples(p, x, aux), q, x);
  }

  static double default_alpha(const Problem&) {
    throw ConfigError(
        "strongly_convex schedule: the mean-CVaR objective has no strong "
        "convexity modulus; pass alpha explicitly");
  }

  static double default_lipschitz(const Problem& p, const SolverConfig&) {
    return cvar_constants(p).subgradient_bound;
  }

  static double geometric_eta(const Problem&, const SolverConfig&) {
    throw ConfigError(
        "smooth_geometric schedule: only available for mean-variance "
        "problems");
  }
};

Averaging default_averaging(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Lipschitz:
      return Averaging::Uniform;
    case ScheduleKind::StronglyConvex:
      return Averaging::WeightedK;
    case ScheduleKind::Fixed:
    case ScheduleKind::SmoothGeometric:
      break;
  }
  return Averaging::LastIterate;
}

template <class Traits>
SolveResult solve_impl(const typename Traits::Problem& p,
                       const SolverConfig& cfg) {
  if (cfg.iterations < 0) {
    throw InvalidInputError("SolverConfig: iterations must be >= 0");
  }
  const int d = p.dim();
  const int T = cfg.iterations;
  const Interval interval = Traits::aux_interval(p);

  SimplexPoint x = cfg.x0 ? SimplexPoint::checked(*cfg.x0) : equal_weights(d);
  if (x.dim() != d) throw InvalidInputError("SolverConfig: x0 dimension mismatch");
  double aux = cfg.aux0.value_or(interval.midpoint());
  if (!interval.contains(aux)) {
    throw InvalidInputError("SolverConfig: aux0 outside the auxiliary interval");
  }

  // Resolve the step-size rule up front so every iteration is a pure update.
  std::function<double(int)> step;
  switch (cfg.schedule.kind) {
    case ScheduleKind::Fixed: {
      const double eta = cfg.schedule.eta;
      if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw ConfigError("fixed schedule: eta must be positive");
      }
      step = [eta](int) { return eta; };
      break;
    }
    case ScheduleKind::Lipschitz: {
      double radius = cfg.schedule.radius;
      if (!std::isfinite(radius)) {
        radius = std::sqrt(2.0 + interval.width() * interval.width());
      }
      double lip = cfg.schedule.lipschitz;
      if (!std::isfinite(lip)) lip = Traits::default_lipschitz(p, cfg);
      if (!(radius > 0.0) || !(lip > 0.0)) {
        throw ConfigError("lipschitz schedule: radius and bound must be positive");
      }
      const double eta = radius / (lip * std::sqrt(std::max(1, T)));
      step = [eta](int) { return eta; };
      break;
    }
    case ScheduleKind::StronglyConvex: {
      double alpha = cfg.schedule.alpha;
      if (!std::isfinite(alpha)) alpha = Traits::default_alpha(p);
      if (!(alpha > 0.0)) {
        throw ConfigError("strongly_convex schedule: alpha must be positive");
      }
      step = [alpha](int k) { return 2.0 / (alpha * (k + 1)); };
      break;
    }
    case ScheduleKind::SmoothGeometric: {
      const double eta = std::isfinite(cfg.schedule.eta)
                             ? cfg.schedule.eta
                             : Traits::geometric_eta(p, cfg);
      if (!(eta > 0.0)) {
        throw ConfigError("smooth_geometric schedule: derived step not positive");
      }
      step = [eta](int) { return eta; };
      break;
    }
  }

  SolveResult result;
  result.averaging = cfg.averaging.value_or(default_averaging(cfg.schedule.kind));
  result.step_eta0 = step(0);
  if (p.ambiguity.exceeds_concavity_assumption()) {
    result.warnings.push_back(
        "ambiguity interval reaches an endpoint of [0,1]; concavity-based "
        "rate guarantees are void");
  }
  if (p.ambiguity.q0 - p.ambiguity.epsilon < 0.0 ||
      p.ambiguity.q0 + p.ambiguity.epsilon > 1.0) {
    result.warnings.push_back("weight interval clamped to [0,1]");
  }

  std::vector<TracePoint> trace;
  trace.reserve(static_cast<std::size_t>(T) + 1);

  Vector x_avg = Vector::Zero(d);
  double aux_avg = 0.0;
  double weight_total = 0.0;

  Vector x_cur = x.weights;
  double aux_cur = aux;
  for (int k = 0; k <= T; ++k) {
    const WorstWeight w = Traits::value(p, x_cur, aux_cur);
    if (!std::isfinite(w.value)) {
      throw NumericalFailure("objective became non-finite at step " +
                                 std::to_string(k),
                             std::move(trace));
    }
    trace.push_back(TracePoint{x_cur, aux_cur, w.q, w.value});
    if (k == T) break;

    const SubgradientXA g = Traits::grad_at(p, w.q, x_cur, aux_cur);
    if (!g.x.allFinite() || !std::isfinite(g.aux)) {
      throw NumericalFailure("subgradient became non-finite at step " +
                                 std::to_string(k),
                             std::move(trace));
    }
    const double eta = step(k);
    x_cur = project_simplex(x_cur - eta * g.x).weights;
    aux_cur = clamp_interval(aux_cur - eta * g.aux, interval);

    // Running averages over iterates 1..T.
    double wk = 0.0;
    switch (result.averaging) {
      case Averaging::Uniform:
        wk = 1.0;
        break;
      case Averaging::WeightedK:
        wk = static_cast<double>(k + 1);
        break;
      case Averaging::LastIterate:
        break;
    }
    if (wk > 0.0) {
      x_avg += wk * x_cur;
      aux_avg += wk * aux_cur;
      weight_total += wk;
    }
  }

  Vector x_out = x_cur;
  double aux_out = aux_cur;
  if (result.averaging != Averaging::LastIterate && weight_total > 0.0) {
    x_out = x_avg / weight_total;
    aux_out = clamp_interval(aux_avg / weight_total, interval);
  }

  // Averaged weights are a convex combination of feasible points; scrub the
  // accumulated rounding so the simplex invariant holds exactly.
  const double sum = x_out.sum();
  if (sum > 0.0 && sum != 1.0) x_out /= sum;

  result.x = SimplexPoint::checked(std::move(x_out));
  result.aux = aux_out;
  result.objective = Traits::value(p, result.x.weights, result.aux).value;
  if (cfg.record_trace) {
    result.trace = std::move(trace);
  }
  return result;
}

}  // namespace

StepSchedule StepSchedule::fixed(double eta) {
  StepSchedule s;
  s.kind = ScheduleKind::Fixed;
  s.eta = eta;
  return s;
}

StepSchedule StepSchedule::lipschitz(double radius, double lipschitz) {
  StepSchedule s;
  s.kind = ScheduleKind::Lipschitz;
  s.radius = radius;
  s.lipschitz = lipschitz;
  return s;
}

StepSchedule StepSchedule::strongly_convex(double alpha) {
  StepSchedule s;
  s.kind = ScheduleKind::StronglyConvex;
  s.alpha = alpha;
  return s;
}

StepSchedule StepSchedule::smooth_geometric() {
  StepSchedule s;
  s.kind = ScheduleKind::SmoothGeometric;
  return s;
}

SmoothnessConstants estimate_constants(const MeanVarProblem& p, int samples) {
  if (samples < 1) throw InvalidInputError("estimate_constants: samples < 1");
  const int d = p.dim();
  if (d + 2 > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0]))) {
    throw InvalidInputError("estimate_constants: dimension too large for the sampler");
  }
  const Interval anchor = anchor_interval(p);
  const double qlo = p.ambiguity.lo();
  const double qhi = p.ambiguity.hi();

  const double hq = std::min(1e-4, 0.5 * std::min(p.ambiguity.q0,
                                                  1.0 - p.ambiguity.q0));
  const double ha = 1e-4 * std::max(1.0, anchor.hi);
  const double hx = 1e-4;

  SmoothnessConstants out;
  out.rate_constant = kNaN;
  out.hqq_max = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < samples; ++s) {
    const auto index = static_cast<std::uint64_t>(s) + 1;
    double q = qlo + radical_inverse(2, index) * (qhi - qlo);
    // Keep q usable for central differences inside (0,1).
    q = std::min(std::max(q, hq), 1.0 - hq);
    const double a_span = anchor.width() - 2.0 * ha;
    const double a = a_span > 0.0
                         ? anchor.lo + ha + radical_inverse(3, index) * a_span
                         : anchor.midpoint();
    const Vector x = halton_simplex(index, d, 2);

    const SubgradientXA g = robust_subgradient_at(p, q, x, a);
    out.subgradient_bound = std::max(out.subgradient_bound, g.norm());

    // Cross second derivative: central difference of the gradient in q.
    const SubgradientXA gp = robust_subgradient_at(p, q + hq, x, a);
    const SubgradientXA gm = robust_subgradient_at(p, q - hq, x, a);
    const Vector dgx = (gp.x - gm.x) / (2.0 * hq);
    const double dga = (gp.aux - gm.aux) / (2.0 * hq);
    out.cross_bound = std::max(
        out.cross_bound, std::sqrt(dgx.squaredNorm() + dga * dga));

    // Hessian block by differencing the gradient in (x, aux).
    Matrix hess(d + 1, d + 1);
    for (int j = 0; j < d; ++j) {
      Vector xp = x;
      Vector xm = x;
      xp[j] += hx;
      xm[j] -= hx;
      const SubgradientXA gxp = robust_subgradient_at(p, q, xp, a);
      const SubgradientXA gxm = robust_subgradient_at(p, q, xm, a);
      hess.block(0, j, d, 1) = (gxp.x - gxm.x) / (2.0 * hx);
      hess(d, j) = (gxp.aux - gxm.aux) / (2.0 * hx);
    }
    const SubgradientXA gap_ = robust_subgradient_at(p, q, x, a + ha);
    const SubgradientXA gam = robust_subgradient_at(p, q, x, a - ha);
    hess.block(0, d, d, 1) = (gap_.x - gam.x) / (2.0 * ha);
    hess(d, d) = (gap_.aux - gam.aux) / (2.0 * ha);
    const Matrix sym = 0.5 * (hess + hess.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    out.hessian_bound =
        std::max(out.hessian_bound, eig.eigenvalues().cwiseAbs().maxCoeff());

    // Curvature of the inner maximization.
    const double h0 = mixture_disutility(p, q, x, a);
    const double hp = mixture_disutility(p, q + hq, x, a);
    const double hm = mixture_disutility(p, q - hq, x, a);
    out.hqq_max = std::max(out.hqq_max, (hp - 2.0 * h0 + hm) / (hq * hq));
  }

  out.subgradient_bound *= 1.25;
  out.hessian_bound *= 1.25;
  out.cross_bound *= 1.25;
  out.strong_convexity = strong_convexity_eigenvalue(p);
  out.strongly_concave_in_q = out.hqq_max < 0.0;
  try {
    out.rate_constant = geometric_rate_constant(p.ambiguity, d);
  } catch (const NotApplicableError&) {
    out.rate_constant = kNaN;
  }
  return out;
}

SolveResult solve(const MeanVarProblem& p, const SolverConfig& config) {
  return solve_impl<MeanVarTraits>(p, config);
}

SolveResult solve(const MeanCVaRProblem& p, const SolverConfig& config) {
  return solve_impl<MeanCVaRTraits>(p, config);
}

void write_trace_csv(std::ostream& os, const SolveResult& result,
                     double reference_objective) {
  const int d = result.x.dim();
  os << "k,q_star,J,gap";
  for (int j = 0; j < d; ++j) os << ",x_" << j;
  os << ",aux\n";
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    const TracePoint& t = result.trace[k];
    os << k << ',' << format_g17(t.q) << ',' << format_g17(t.objective) << ',';
    if (std::isfinite(reference_objective)) {
      os << format_g17(t.objective - reference_objective);
    }
    for (int j = 0; j < d; ++j) os << ',' << format_g17(t.x[j]);
    os << ',' << format_g17(t.aux) << '\n';
  }
}

}  // namespace robustalloc
