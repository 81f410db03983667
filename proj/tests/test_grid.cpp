#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "vemoc/errors.hpp"
#include "vemoc/grid.hpp"

#include <cmath>

using namespace vemoc;

TEST_CASE("uniform grid") {
  const TimeGrid g = TimeGrid::uniform(101, 0.5, 2.5);
  CHECK(g.sigma[0] == 0.0);
  CHECK(g.sigma[100] == 1.0);
  for (int i = 1; i < 101; ++i) CHECK(g.sigma[i] > g.sigma[i - 1]);
  CHECK(g.spacing() == doctest::Approx(0.02));
  CHECK(g.time(0) == 0.5);
  CHECK(g.time(100) == 2.5);
  CHECK_THROWS_AS(TimeGrid::uniform(1, 0.0, 1.0), DomainError);
}

TEST_CASE("trapezoid quadrature") {
  SUBCASE("constant on [0, 2]") {
    for (int N : {2, 3, 17, 101}) {
      const TimeGrid g = TimeGrid::uniform(N, 0.0, 2.0);
      CHECK(quadrature(Matrix::Ones(N, 1), g)[0] == doctest::Approx(2.0).epsilon(1e-15));
    }
  }
  SUBCASE("linear and quadratic") {
    const TimeGrid g = TimeGrid::uniform(101, 0.0, 1.0);
    Matrix v(101, 2);
    for (int i = 0; i < 101; ++i) {
      v(i, 0) = g.time(i);
      v(i, 1) = g.time(i) * g.time(i);
    }
    const Vector q = quadrature(v, g);
    CHECK(std::abs(q[0] - 0.5) <= 1e-15);
    // error bound (b - a) h^2 / 12 * max|f''| = 1e-4 / 6
    CHECK(std::abs(q[1] - 1.0 / 3.0) <= 2e-5);
  }
  SUBCASE("linearity") {
    const TimeGrid g = TimeGrid::uniform(9, -1.0, 3.0);
    std::mt19937_64 rng(4);
    const Matrix a = vemoc::testing::random_matrix(rng, 9, 3, 1.0);
    const Matrix b = vemoc::testing::random_matrix(rng, 9, 3, 1.0);
    const Vector lhs = quadrature(2.0 * a - 3.0 * b, g);
    const Vector rhs = 2.0 * quadrature(a, g) - 3.0 * quadrature(b, g);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("errors") {
    const TimeGrid g = TimeGrid::uniform(3, 0.0, 1.0);
    Matrix v = Matrix::Ones(3, 1);
    v(1, 0) = INFINITY;
    CHECK_THROWS_AS(quadrature(v, g), EvaluationError);
    CHECK_THROWS_AS(quadrature(Matrix::Ones(4, 1), g), DefinitionError);
  }
}

TEST_CASE("interpolation") {
  OcpDefinition d = vemoc::testing::constant_linear(Matrix::Zero(2, 2), Matrix::Identity(2, 1));
  const auto affine_x = [](double t) -> Vector {
    Vector v(2);
    v << 3.0 * t, 1.0 - 2.0 * t;
    return v;
  };
  const auto affine_u = [](double t) -> Vector { return Vector::Constant(1, 0.5 + t); };
  d.x0 = affine_x(0.0);
  const TrajectoryState tr = vemoc::testing::sampled(d, 11, 2.0, affine_x, affine_u);

  SUBCASE("node hits are bitwise") {
    std::mt19937_64 rng(2);
    Matrix X = vemoc::testing::random_matrix(rng, 11, 2, 1.0);
    X.row(0).setZero();
    const TrajectoryState r(X, vemoc::testing::random_matrix(rng, 11, 1, 1.0), 1.3);
    for (int i = 0; i < 11; ++i) {
      const auto p = interpolate(r, 0.0, r.time_at(i, 0.0));
      CHECK(p.x == r.x_nodes().row(i).transpose());
      CHECK(p.u == r.u_nodes().row(i).transpose());
    }
  }
  SUBCASE("midpoint is the mean") {
    const auto p = interpolate(tr, 0.0, 0.5 * (tr.time_at(3, 0.0) + tr.time_at(4, 0.0)));
    const Vector mean = 0.5 * (tr.x_nodes().row(3) + tr.x_nodes().row(4)).transpose();
    CHECK((p.x - mean).norm() <= 1e-15);
  }
  SUBCASE("affine data is reproduced") {
    for (double t : {0.0, 0.013, 0.77, 1.5, 1.999, 2.0}) {
      const auto p = interpolate(tr, 0.0, t);
      CHECK((p.x - affine_x(t)).norm() <= 1e-13);
      CHECK((p.u - affine_u(t)).norm() <= 1e-13);
    }
  }
  SUBCASE("outside the horizon") {
    CHECK_THROWS_AS(interpolate(tr, 0.0, -1e-9), DomainError);
    CHECK_THROWS_AS(interpolate(tr, 0.0, 2.0 + 1e-9), DomainError);
  }
}

TEST_CASE("control time derivative") {
  const int N = 21;
  const double h = 0.05;
  Matrix u(N, 1);
  for (int i = 0; i < N; ++i) u(i, 0) = std::pow(i * h, 2);
  const Matrix du = control_time_derivative(u, h);
  // second-order stencils are exact for quadratics, including the one-sided ends
  for (int i = 0; i < N; ++i) CHECK(du(i, 0) == doctest::Approx(2.0 * i * h).epsilon(1e-12));
}

TEST_CASE("node motion term") {
  OcpDefinition d = vemoc::testing::constant_linear(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  const double c = 1.7;
  const TrajectoryState tr = vemoc::testing::sampled(
      d, 11, 2.0, [c](double t) { return Vector::Constant(1, c * t); },
      [c](double) { return Vector::Constant(1, c); });

  SUBCASE("zero rate") { CHECK(node_motion_term(tr, d, 0.0).isZero()); }
  SUBCASE("closed form") {
    const double rate = -0.3;
    const Matrix m = node_motion_term(tr, d, rate);
    REQUIRE(m.rows() == 11);
    REQUIRE(m.cols() == 2);
    CHECK(m.row(0).isZero());
    for (int i = 0; i < 11; ++i) {
      CHECK(m(i, 0) == doctest::Approx(c * (i / 10.0) * rate).epsilon(1e-14));
      CHECK(std::abs(m(i, 1)) <= 1e-13);  // u constant in t
    }
  }
}
