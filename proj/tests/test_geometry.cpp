#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "robustalloc/geometry.hpp"
#include "robustalloc/oracles.hpp"

using namespace robustalloc;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("projection fixed points and closed-form cases") {
  CHECK(project_simplex(vec2(0.5, 0.5)).weights.isApprox(vec2(0.5, 0.5), 1e-15));
  CHECK(project_simplex(vec2(1.0, 1.0)).weights.isApprox(vec2(0.5, 0.5), 1e-15));

  const Vector a = project_simplex(vec2(0.8, 0.4)).weights;
  CHECK(a[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK((a - oracles::projection_by_enumeration(vec2(0.8, 0.4)))
            .lpNorm<Eigen::Infinity>() <= 1e-12);

  const Vector b = project_simplex(vec2(2.0, -1.0)).weights;
  CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((b - oracles::projection_by_enumeration(vec2(2.0, -1.0)))
            .lpNorm<Eigen::Infinity>() <= 1e-12);

  // d = 1 collapses to the single feasible point.
  Vector one(1);
  one << 42.0;
  CHECK(project_simplex(one).weights[0] == 1.0);
}

TEST_CASE("projection rejects non-finite input") {
  CHECK_THROWS_AS(project_simplex(vec2(std::numeric_limits<double>::infinity(), 0.0)),
                  InvalidInputError);
  CHECK_THROWS_AS(project_simplex(vec2(std::nan(""), 0.0)), InvalidInputError);
  CHECK_THROWS_AS(project_simplex(Vector()), InvalidInputError);
}

TEST_CASE("projection feasibility, idempotence and optimality vs oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (const int d : {2, 5, 10}) {
    for (int rep = 0; rep < 200; ++rep) {
      Vector y(d);
      for (int i = 0; i < d; ++i) y[i] = gauss(rng);
      const SimplexPoint p = project_simplex(y);
      CHECK(p.weights.minCoeff() >= 0.0);
      CHECK(std::abs(p.weights.sum() - 1.0) <= 1e-12);

      const Vector again = project_simplex(p.weights).weights;
      CHECK((again - p.weights).lpNorm<Eigen::Infinity>() <= 1e-12);

      const Vector oracle = oracles::projection_by_enumeration(y);
      CHECK((p.weights - oracle).norm() <= 1e-9);
    }
  }
}

TEST_CASE("projection is nonexpansive") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int d = 2 + static_cast<int>(rng() % 7);
    Vector a(d);
    Vector b(d);
    for (int i = 0; i < d; ++i) {
      a[i] = gauss(rng);
      b[i] = gauss(rng);
    }
    const double lhs =
        (project_simplex(a).weights - project_simplex(b).weights).norm();
    CHECK(lhs <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("inf-norm subgradient on stated cases") {
  CHECK(inf_norm_subgradient(vec2(0.3, 0.7)).isApprox(vec2(0.0, 1.0), 1e-15));
  CHECK(inf_norm_subgradient(vec2(0.5, 0.5)).isApprox(vec2(0.5, 0.5), 1e-15));
  CHECK(inf_norm_subgradient(vec3(-0.6, 0.2, 0.6))
            .isApprox(vec3(-0.5, 0.0, 0.5), 1e-15));
  CHECK(inf_norm_subgradient(vec2(0.0, 0.0)).isZero());
}

TEST_CASE("inf-norm subgradient satisfies the first-order inequality") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + static_cast<int>(rng() % 5);
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = gauss(rng);
    if (x.lpNorm<Eigen::Infinity>() < 1e-3) continue;
    const Vector g = inf_norm_subgradient(x);
    CHECK(g.lpNorm<1>() <= 1.0 + 1e-12);
    for (int dir = 0; dir < 100; ++dir) {
      Vector v(d);
      for (int i = 0; i < d; ++i) v[i] = gauss(rng);
      for (const double t : {1e-6, 1e-4, 1e-2}) {
        const double lhs = (x + t * v).lpNorm<Eigen::Infinity>();
        const double rhs = x.lpNorm<Eigen::Infinity>() + t * g.dot(v);
        CHECK(lhs >= rhs - 1e-12);
      }
    }
  }
}

TEST_CASE("simplex point validation") {
  CHECK_THROWS_AS(SimplexPoint::checked(vec2(0.6, 0.6)), InvalidInputError);
  CHECK_THROWS_AS(SimplexPoint::checked(vec2(-0.1, 1.1)), InvalidInputError);
  CHECK(SimplexPoint::checked(vec2(0.25, 0.75)).dim() == 2);
  CHECK(equal_weights(4).weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
}
