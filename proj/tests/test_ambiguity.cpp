#include <doctest.h>

#include <cmath>

#include "robustalloc/ambiguity.hpp"

using namespace robustalloc;

namespace {

// Extended-precision re-evaluation through the log form.
long double radius_longdouble(double c, double alpha, double beta, double q) {
  if (q == 0.0 || q == 1.0) {
    return static_cast<long double>(c) *
           powl(static_cast<long double>(q), static_cast<long double>(alpha) - 1.0L) *
           powl(1.0L - static_cast<long double>(q),
                static_cast<long double>(beta) - 1.0L);
  }
  const long double lq = logl(static_cast<long double>(q));
  const long double l1q = log1pl(-static_cast<long double>(q));
  return static_cast<long double>(c) *
         expl((static_cast<long double>(alpha) - 1.0L) * lq +
              (static_cast<long double>(beta) - 1.0L) * l1q);
}

}  // namespace

TEST_CASE("radius closed form") {
  const RadiusFunction r = RadiusFunction::beta_shaped(1.0, 10.0, 0.5);
  CHECK(r.alpha == doctest::Approx(6.0));
  CHECK(r.beta == doctest::Approx(6.0));
  CHECK(r(0.5) == doctest::Approx(9.765625e-4).epsilon(1e-14));

  CHECK(RadiusFunction::beta_shaped(3.0, 8.0, 0.3)(0.0) == 0.0);
  CHECK(RadiusFunction::beta_shaped(3.0, 8.0, 0.3)(1.0) == 0.0);

  const RadiusFunction paper = RadiusFunction::beta_shaped(0.1, 10.0, 0.024);
  const double got = paper(0.024);
  const long double ref = radius_longdouble(0.1, paper.alpha, paper.beta, 0.024);
  CHECK(std::abs(got - static_cast<double>(ref)) <=
        1e-14 * std::abs(static_cast<double>(ref)));

  CHECK_THROWS_AS(paper(-0.1), InvalidInputError);
  CHECK_THROWS_AS(paper(1.1), InvalidInputError);
}

TEST_CASE("radius derivatives are exact") {
  const RadiusFunction r = RadiusFunction::beta_shaped(0.1, 10.0, 0.024);

  const auto [rp0, rpp0] = r.derivatives(0.024);
  CHECK(std::abs(rp0) <= 1e-12);
  CHECK(rpp0 < 0.0);

  // Central differences in extended precision at an interior point.
  const double q = 0.3;
  const auto [rp, rpp] = r.derivatives(q);
  const double h = 1e-5;
  const long double fp = radius_longdouble(0.1, r.alpha, r.beta, q + h);
  const long double fm = radius_longdouble(0.1, r.alpha, r.beta, q - h);
  const long double f0 = radius_longdouble(0.1, r.alpha, r.beta, q);
  const double fd1 = static_cast<double>((fp - fm) / (2.0L * h));
  const double fd2 = static_cast<double>((fp - 2.0L * f0 + fm) / (h * h));
  CHECK(std::abs(fd1 - rp) <= 1e-6 * std::max(1.0, std::abs(rp)));
  CHECK(std::abs(fd2 - rpp) <= 1e-6 * std::max(1.0, std::abs(rpp)));

  CHECK_THROWS_AS(r.derivatives(0.0), InvalidInputError);
  CHECK_THROWS_AS(r.derivatives(1.0), InvalidInputError);
}

TEST_CASE("radius derivative grid agreement") {
  const RadiusFunction r = RadiusFunction::beta_shaped(0.4, 10.0, 0.2);
  const double h = 1e-5;
  for (int i = 1; i < 100; ++i) {
    const double q = i / 100.0;
    const auto [rp, rpp] = r.derivatives(q);
    const long double fp = radius_longdouble(0.4, r.alpha, r.beta, q + h);
    const long double fm = radius_longdouble(0.4, r.alpha, r.beta, q - h);
    const long double f0 = radius_longdouble(0.4, r.alpha, r.beta, q);
    const double fd1 = static_cast<double>((fp - fm) / (2.0L * h));
    const double fd2 = static_cast<double>((fp - 2.0L * f0 + fm) / (h * h));
    CHECK(std::abs(fd1 - rp) <= 1e-6 * std::max(1.0, std::abs(rp)));
    CHECK(std::abs(fd2 - rpp) <= 1e-6 * std::max(1.0, std::abs(rpp)));
  }
}

TEST_CASE("radius nonnegative and peaked at q0") {
  const double q0 = 0.13;
  const RadiusFunction r = RadiusFunction::beta_shaped(0.7, 10.0, q0);
  CHECK(r.mode() == doctest::Approx(q0).epsilon(1e-12));
  double best = -1.0;
  double best_q = 0.0;
  const int grid = 10000;
  for (int i = 0; i <= grid; ++i) {
    const double q = static_cast<double>(i) / grid;
    const double v = r(q);
    CHECK(v >= 0.0);
    if (v > best) {
      best = v;
      best_q = q;
    }
  }
  CHECK(std::abs(best_q - q0) <= 1.0 / grid + 1e-12);
  CHECK(r.max_on(0.0, 1.0) >= best - 1e-15);
}

TEST_CASE("geometric rate constant") {
  const AmbiguitySpec paper = AmbiguitySpec::make(
      0.024, 0.03, RadiusFunction::beta_shaped(0.1, 10.0, 0.024));
  const double k = geometric_rate_constant(paper, 10);
  CHECK(k > 0.0);
  {
    // Direct formula in extended precision.
    const auto [rp, rpp] = paper.radius.derivatives(0.024);
    (void)rp;
    const long double expected = -0.024L *
                                 radius_longdouble(0.1, paper.radius.alpha,
                                                   paper.radius.beta, 0.024) *
                                 static_cast<long double>(rpp) / 10.0L;
    CHECK(k == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  }

  // Doubling the scale doubles r and r'', so the constant quadruples.
  const AmbiguitySpec doubled = AmbiguitySpec::make(
      0.024, 0.03, RadiusFunction::beta_shaped(0.2, 10.0, 0.024));
  CHECK(geometric_rate_constant(doubled, 10) ==
        doctest::Approx(4.0 * k).epsilon(1e-12));

  // Constant radius has no interior concavity.
  const AmbiguitySpec flat =
      AmbiguitySpec::make(0.3, 0.05, RadiusFunction::powers(0.2, 1.0, 1.0));
  CHECK_THROWS_AS(geometric_rate_constant(flat, 4), NotApplicableError);
}

TEST_CASE("ambiguity interval clamping and warnings") {
  const AmbiguitySpec paper = AmbiguitySpec::make(
      0.024, 0.03, RadiusFunction::beta_shaped(0.1, 10.0, 0.024));
  CHECK(paper.lo() == 0.0);
  CHECK(paper.hi() == doctest::Approx(0.054));
  CHECK(paper.exceeds_concavity_assumption());

  const AmbiguitySpec tame =
      AmbiguitySpec::make(0.2, 0.05, RadiusFunction::beta_shaped(0.1, 10.0, 0.2));
  CHECK(!tame.exceeds_concavity_assumption());
  CHECK(tame.lo() == doctest::Approx(0.15));

  CHECK_THROWS_AS(AmbiguitySpec::make(0.0, 0.1, RadiusFunction::powers(0, 2, 2)),
                  InvalidInputError);
  CHECK_THROWS_AS(AmbiguitySpec::make(0.5, -0.1, RadiusFunction::powers(0, 2, 2)),
                  InvalidInputError);
}
