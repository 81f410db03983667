#pragma once

#include "vemoc/ocp_model.hpp"

#include <functional>
#include <random>

namespace vemoc::testing {

/// xdot = A(t) x + B(t) u with otherwise empty callbacks.
inline OcpDefinition linear_problem(std::function<Matrix(double)> A, std::function<Matrix(double)> B,
                                    int n, int m) {
  OcpDefinition d;
  d.name = "linear";
  d.n = n;
  d.m = m;
  d.x0 = Vector::Zero(n);
  d.callbacks.f = [A, B](const Vector& x, const Vector& u, double t) -> Vector {
    return A(t) * x + B(t) * u;
  };
  d.callbacks.f_x = [A](const Vector&, const Vector&, double t) -> Matrix { return A(t); };
  d.callbacks.f_u = [B](const Vector&, const Vector&, double t) -> Matrix { return B(t); };
  d.bounds = {Vector::Constant(n, -1.0), Vector::Constant(n, 1.0), Vector::Constant(m, -1.0),
              Vector::Constant(m, 1.0), 0.0, 1.0};
  return d;
}

inline OcpDefinition constant_linear(const Matrix& A, const Matrix& B) {
  return linear_problem([A](double) { return A; }, [B](double) { return B; },
                        static_cast<int>(A.rows()), static_cast<int>(B.cols()));
}

/// Scalar xdot = u on a fixed horizon with L = u^2 / 2 and optional terminal rows.
inline OcpDefinition scalar_integrator() {
  OcpDefinition d = constant_linear(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  d.name = "scalar";
  d.terminal_time_mode = TerminalTimeMode::Fixed;
  d.callbacks.L = [](const Vector&, const Vector& u, double) { return 0.5 * u.squaredNorm(); };
  d.callbacks.L_u = [](const Vector&, const Vector& u, double) -> Vector { return u; };
  return d;
}

/// Adds the scalar inequality x_f - c <= 0 (or equality when `equality`).
inline void add_terminal_bound(OcpDefinition& d, double c, bool equality) {
  auto g = [c](const Vector& x, double) -> Vector { return Vector::Constant(1, x[0] - c); };
  auto gx = [n = d.n](const Vector&, double) -> Matrix {
    Matrix J = Matrix::Zero(1, n);
    J(0, 0) = 1.0;
    return J;
  };
  if (equality) {
    d.q_E = 1;
    d.callbacks.g_E = g;
    d.callbacks.g_E_x = gx;
  } else {
    d.q_I = 1;
    d.callbacks.g_I = g;
    d.callbacks.g_I_x = gx;
  }
}

/// Trajectory whose node values are given as functions of physical time.
inline TrajectoryState sampled(const OcpDefinition& d, int N, double t_f,
                               const std::function<Vector(double)>& x,
                               const std::function<Vector(double)>& u) {
  Matrix X(N, d.n), U(N, d.m);
  for (int i = 0; i < N; ++i) {
    const double t = d.t0 + (t_f - d.t0) * static_cast<double>(i) / (N - 1);
    X.row(i) = x(t).transpose();
    U.row(i) = u(t).transpose();
  }
  X.row(0) = d.x0.transpose();
  return TrajectoryState(X, U, t_f);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = dist(rng);
  return M;
}

}  // namespace vemoc::testing
