#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "vemoc/errors.hpp"
#include "vemoc/ocp_model.hpp"

#include <cmath>
#include <numbers>

using namespace vemoc;
using vemoc::testing::constant_linear;

TEST_CASE("brachistochrone dynamics at rest") {
  const auto p = builtin_problem("brachA", 11);
  const Vector f = evaluate_dynamics(p.definition, Vector::Zero(3), Vector::Constant(1, std::numbers::pi / 6), 0.0);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(10.0 * std::cos(std::numbers::pi / 6)));
  CHECK(f[2] == doctest::Approx(8.660).epsilon(1e-4));

  for (double u : {-2.0, 0.3, 1.1}) {
    const Vector g = evaluate_dynamics(p.definition, Vector::Zero(3), Vector::Constant(1, u), 0.4);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("identity dynamics") {
  const OcpDefinition d = constant_linear(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  CHECK(evaluate_dynamics(d, Vector::Zero(1), Vector::Constant(1, 3.0), 0.0)[0] == 3.0);
}

TEST_CASE("evaluation errors") {
  OcpDefinition d = constant_linear(Matrix::Zero(2, 2), Matrix::Identity(2, 1));
  CHECK_THROWS_AS(evaluate_dynamics(d, Vector::Zero(3), Vector::Zero(1), 0.0), DefinitionError);
  CHECK_THROWS_AS(evaluate_dynamics(d, Vector::Zero(2), Vector::Zero(2), 0.0), DefinitionError);

  d.callbacks.f = [](const Vector& x, const Vector&, double) -> Vector { return Vector::Zero(x.size() + 1); };
  CHECK_THROWS_AS(evaluate_dynamics(d, Vector::Zero(2), Vector::Zero(1), 0.0), DefinitionError);

  d.callbacks.f = [](const Vector&, const Vector&, double) -> Vector {
    Vector v(2);
    v << 0.0, std::nan("");
    return v;
  };
  try {
    evaluate_dynamics(d, Vector::Zero(2), Vector::Zero(1), 0.0);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("optional callbacks evaluate to zeros") {
  OcpDefinition d = constant_linear(Matrix::Zero(2, 2), Matrix::Identity(2, 1));
  d.validate();
  CHECK(d.L(Vector::Zero(2), Vector::Zero(1), 0.0) == 0.0);
  CHECK(d.phi_xx(Vector::Zero(2), 0.0).isZero());
  CHECK(d.phi_xx(Vector::Zero(2), 0.0).rows() == 2);
  CHECK(d.g_E(Vector::Zero(2), 0.0).size() == 0);
  CHECK(d.g_I_x(Vector::Zero(2), 0.0).rows() == 0);
  CHECK(d.g_I_x(Vector::Zero(2), 0.0).cols() == 2);
}

TEST_CASE("validate rejects incomplete definitions") {
  OcpDefinition d = constant_linear(Matrix::Zero(2, 2), Matrix::Identity(2, 1));
  d.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(d.validate(), DefinitionError);
  d.x0 = Vector::Zero(2);
  d.q_E = 1;  // no g_E callback
  CHECK_THROWS_AS(d.validate(), DefinitionError);
  d.q_E = 0;
  d.callbacks.f_u = nullptr;
  CHECK_THROWS_AS(d.validate(), DefinitionError);
}

TEST_CASE("derivative audit") {
  SUBCASE("built-in problems pass") {
    for (const char* id : {"brachA", "brachB", "lq"}) {
      CAPTURE(id);
      const auto rep = audit_derivatives(builtin_problem(id, 11).definition, 100, 1e-6, 7);
      CHECK(rep.pass);
      CHECK(rep.failures.empty());
    }
  }
  SUBCASE("planted f_u sign fault is caught") {
    auto p = builtin_problem("brachA", 11);
    auto good = p.definition.callbacks.f_u;
    p.definition.callbacks.f_u = [good](const Vector& x, const Vector& u, double t) -> Matrix {
      return -good(x, u, t);
    };
    const auto rep = audit_derivatives(p.definition, 20, 1e-6, 1);
    CHECK_FALSE(rep.pass);
    bool fu_failed = false;
    for (const auto& e : rep.entries) {
      if (e.partial == "f_u") fu_failed = !e.pass;
      if (e.partial == "f_x") CHECK(e.pass);
    }
    CHECK(fu_failed);
  }
  SUBCASE("linear system agrees to rounding") {
    Matrix A(2, 2), B(2, 1);
    A << 0.3, -1.2, 2.0, 0.7;
    B << 1.5, -0.5;
    const auto rep = audit_derivatives(constant_linear(A, B), 30, 1e-6, 3);
    CHECK(rep.pass);
    for (const auto& e : rep.entries) CHECK(e.max_rel_error < 1e-8);
  }
  SUBCASE("non-finite evaluation fails with the point listed") {
    OcpDefinition d = constant_linear(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
    d.callbacks.f = [](const Vector& x, const Vector&, double) -> Vector {
      return Vector::Constant(1, std::log(x[0]));
    };
    const auto rep = audit_derivatives(d, 10, 1e-6, 5);
    CHECK_FALSE(rep.pass);
    REQUIRE_FALSE(rep.failures.empty());
  }
}

TEST_CASE("performance index") {
  SUBCASE("brachA initial trajectory equals its terminal time") {
    const auto p = builtin_problem("brachA", 101);
    const double tf = std::sqrt(8.0 * std::sqrt(3.0) / 15.0);
    CHECK(std::abs(performance_index(p.definition, p.initial) - tf) <= 1e-12);
    CHECK(performance_index(p.definition, p.initial) == doctest::Approx(0.9611).epsilon(1e-4));
  }
  SUBCASE("pure Mayer cost") {
    OcpDefinition d = constant_linear(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
    d.callbacks.phi = [](const Vector&, double t) { return t; };
    const TrajectoryState tr(Matrix::Zero(5, 1), Matrix::Zero(5, 1), 2.0);
    CHECK(performance_index(d, tr) == 2.0);
  }
  SUBCASE("constant Lagrange integrand") {
    OcpDefinition d = vemoc::testing::scalar_integrator();
    Matrix X(11, 1);
    for (int i = 0; i < 11; ++i) X(i, 0) = i / 10.0;
    const TrajectoryState tr(X, Matrix::Ones(11, 1), 1.0);
    CHECK(performance_index(d, tr) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("built-in problems") {
  SUBCASE("brachA terminal node") {
    const auto p = builtin_problem("brachA", 101);
    const double tf = std::sqrt(8.0 * std::sqrt(3.0) / 15.0);
    const Vector xf = p.initial.x_nodes().row(100).transpose();
    CHECK(p.initial.t_f() == doctest::Approx(tf).epsilon(1e-15));
    CHECK(xf[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(xf[1] == doctest::Approx(-2.0 * std::sqrt(3.0)).epsilon(1e-13));
    CHECK(xf[2] == doctest::Approx(5.0 * std::sqrt(3.0) * tf).epsilon(1e-13));
    CHECK(p.initial.to_stacked().size() == 405);
  }
  SUBCASE("brachB starts on the upper bound") {
    const auto p = builtin_problem("brachB", 101);
    const Vector xf = p.initial.x_nodes().row(100).transpose();
    CHECK(p.initial.t_f() == 1.0);
    CHECK(xf[1] == doctest::Approx(-1.0).epsilon(1e-14));
    const Vector gI = p.definition.g_I(xf, 1.0);
    CHECK(std::abs(gI[0]) < 1e-12);
    CHECK(gI[1] == doctest::Approx(-0.3).epsilon(1e-12));
  }
  SUBCASE("initial trajectories satisfy the dynamics with analytic derivatives") {
    struct Case {
      const char* id;
      double a, b, c;  // x = a t^2, y = -b t^2, V = c t
    };
    const double s3 = std::sqrt(3.0);
    for (const Case& cs : {Case{"brachA", 5.0 * s3 / 4.0, 15.0 / 4.0, 5.0 * s3},
                           Case{"brachB", 2.0, 1.0, 2.0 * std::sqrt(5.0)}}) {
      CAPTURE(cs.id);
      const auto p = builtin_problem(cs.id, 101);
      double worst = 0.0;
      for (int i = 0; i < 101; ++i) {
        const double t = p.initial.time_at(i, 0.0);
        Vector xdot(3);
        xdot << 2.0 * cs.a * t, -2.0 * cs.b * t, cs.c;
        const Vector f = p.definition.f(p.initial.x_nodes().row(i).transpose(),
                                        p.initial.u_nodes().row(i).transpose(), t);
        worst = std::max(worst, (xdot - f).cwiseAbs().maxCoeff());
      }
      CHECK(worst <= 1e-8);
    }
  }
  SUBCASE("initial trajectories are feasible") {
    for (const char* id : {"brachA", "brachB", "lq"}) {
      const auto p = builtin_problem(id, 21);
      const Vector xf = p.initial.x_nodes().row(20).transpose();
      const Vector gE = p.definition.g_E(xf, p.initial.t_f());
      const Vector gI = p.definition.g_I(xf, p.initial.t_f());
      CHECK(gE.cwiseAbs().maxCoeff() <= 1e-12);
      if (gI.size()) CHECK(gI.maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(builtin_problem("brachC", 101), DomainError);
    CHECK_THROWS_AS(builtin_problem("brachA", 2), DomainError);
    CHECK(list_builtin_problems().size() == 3);
  }
}

TEST_CASE("trajectory state") {
  const auto p = builtin_problem("lq", 7);
  const TrajectoryState& tr = p.initial;
  SUBCASE("stacked round trip is exact") {
    const Vector s = tr.to_stacked();
    CHECK(s.size() == 7 * 2 + 7 + 1);
    const TrajectoryState back = TrajectoryState::from_stacked(s, 7, 2, 1);
    CHECK(back.x_nodes() == tr.x_nodes());
    CHECK(back.u_nodes() == tr.u_nodes());
    CHECK(back.t_f() == tr.t_f());
    CHECK(back.revision() != tr.revision());
  }
  SUBCASE("node times follow the normalized grid") {
    const TrajectoryState t2(tr.x_nodes(), tr.u_nodes(), 3.0);
    CHECK(t2.time_at(0, 1.0) == 1.0);
    CHECK(t2.time_at(6, 1.0) == 3.0);
    CHECK(t2.time_at(3, 1.0) == doctest::Approx(2.0));
  }
  SUBCASE("validity") {
    CHECK_NOTHROW(tr.check_valid(p.definition));
    Matrix X = tr.x_nodes();
    X(0, 0) = 1e-300;
    CHECK_THROWS_AS(TrajectoryState(X, tr.u_nodes(), 1.0).check_valid(p.definition), DomainError);
    CHECK_THROWS_AS(TrajectoryState(tr.x_nodes(), tr.u_nodes(), 0.0).check_valid(p.definition),
                    DomainError);
    Matrix U = tr.u_nodes();
    U(3, 0) = std::nan("");
    CHECK_THROWS_AS(TrajectoryState(tr.x_nodes(), U, 1.0).check_valid(p.definition), DomainError);
  }
}
