#pragma once

// Brute-force references for the sweep module: pairwise transition matrices
// and adjoint integrals computed by fine RK4 substepping of the linearly
// interpolated node data, with no use of the library's sweep code.

#include "vemoc/ocp_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace vemoc::testing {

/// Node data on a uniform grid over [t0, t0 + (N-1) h], linearly interpolated.
struct NodeSeries {
  std::vector<Matrix> values;
  double t0 = 0.0;
  double h = 1.0;

  Matrix at(double t) const {
    const double s = (t - t0) / h;
    auto i = static_cast<std::size_t>(s);
    if (i + 1 >= values.size()) i = values.size() - 2;
    const double a = s - static_cast<double>(i);
    return (1.0 - a) * values[i] + a * values[i + 1];
  }
};

/// Phi(t_to, t_from) for xdot = A(t) x, t_to >= t_from, by `sub` RK4 substeps per node interval.
inline Matrix transition_fine(const NodeSeries& A, double t_from, double t_to, int sub) {
  const Eigen::Index n = A.values.front().rows();
  Matrix Phi = Matrix::Identity(n, n);
  const int steps = std::max(1, static_cast<int>(std::lround((t_to - t_from) / A.h)) * sub);
  if (t_to == t_from) return Phi;
  const double dt = (t_to - t_from) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = t_from + k * dt;
    const Matrix k1 = A.at(t) * Phi;
    const Matrix k2 = A.at(t + 0.5 * dt) * (Phi + 0.5 * dt * k1);
    const Matrix k3 = A.at(t + 0.5 * dt) * (Phi + 0.5 * dt * k2);
    const Matrix k4 = A.at(t + dt) * (Phi + dt * k3);
    Phi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return Phi;
}

/// int_{t_i}^{t_f} Phi(s, t_i)^T q(s) ds, integrating Phi and the integral jointly.
inline Vector adjoint_integral_fine(const NodeSeries& A, const NodeSeries& q, double t_i, double t_f,
                                    int sub) {
  const Eigen::Index n = A.values.front().rows();
  if (t_f == t_i) return Vector::Zero(n);
  const int steps = std::max(1, static_cast<int>(std::lround((t_f - t_i) / A.h)) * sub);
  const double dt = (t_f - t_i) / steps;
  Matrix Phi = Matrix::Identity(n, n);
  Vector acc = Vector::Zero(n);
  auto rhs = [&](double s, const Matrix& P, Matrix& dP, Vector& da) {
    dP = A.at(s) * P;
    da = P.transpose() * q.at(s);
  };
  for (int k = 0; k < steps; ++k) {
    const double s = t_i + k * dt;
    Matrix d1, d2, d3, d4;
    Vector a1, a2, a3, a4;
    rhs(s, Phi, d1, a1);
    rhs(s + 0.5 * dt, Phi + 0.5 * dt * d1, d2, a2);
    rhs(s + 0.5 * dt, Phi + 0.5 * dt * d2, d3, a3);
    rhs(s + dt, Phi + dt * d3, d4, a4);
    Phi += (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    acc += (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  }
  return acc;
}

/// delta x(t_i) = int_{t0}^{t_i} Phi(t_i, s) f_u(s) du(s) ds by trapezoid over
/// the nodes, with every pairwise Phi obtained from transition_fine. O(N^2).
inline Matrix variation_oracle(const NodeSeries& A, const std::vector<Vector>& b, int sub) {
  const auto N = b.size();
  const Eigen::Index n = b.front().size();
  Matrix dx = Matrix::Zero(static_cast<Eigen::Index>(N), n);
  for (std::size_t i = 1; i < N; ++i) {
    const double ti = A.t0 + static_cast<double>(i) * A.h;
    Vector sum = Vector::Zero(n);
    for (std::size_t j = 0; j <= i; ++j) {
      const double tj = A.t0 + static_cast<double>(j) * A.h;
      const double w = (j == 0 || j == i) ? 0.5 * A.h : A.h;
      sum += w * transition_fine(A, tj, ti, sub) * b[j];
    }
    dx.row(static_cast<Eigen::Index>(i)) = sum.transpose();
  }
  return dx;
}

/// Random linear time-varying instance: xdot = A(t) x + B(t) u, L = c(t)^T x,
/// with A, B, c given as node series (linear between nodes).
struct RandomLtv {
  OcpDefinition def;
  NodeSeries A, B, c;
  TrajectoryState traj;
};

inline RandomLtv make_random_ltv(std::mt19937_64& rng, int n, int m, int N, double t_f) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto rnd = [&](Eigen::Index r, Eigen::Index k) {
    Matrix M(r, k);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < k; ++j) M(i, j) = unit(rng);
    return M;
  };
  RandomLtv out;
  const double h = t_f / (N - 1);
  out.A = {{}, 0.0, h};
  out.B = {{}, 0.0, h};
  out.c = {{}, 0.0, h};
  for (int i = 0; i < N; ++i) {
    out.A.values.push_back(rnd(n, n));
    out.B.values.push_back(rnd(n, m));
    out.c.values.push_back(rnd(n, 1));
  }
  OcpDefinition& d = out.def;
  d.name = "random-ltv";
  d.n = n;
  d.m = m;
  d.x0 = rnd(n, 1);
  d.terminal_time_mode = TerminalTimeMode::Fixed;
  const NodeSeries A = out.A, B = out.B, c = out.c;
  d.callbacks.f = [A, B](const Vector& x, const Vector& u, double t) -> Vector {
    return A.at(t) * x + B.at(t) * u;
  };
  d.callbacks.f_x = [A](const Vector&, const Vector&, double t) -> Matrix { return A.at(t); };
  d.callbacks.f_u = [B](const Vector&, const Vector&, double t) -> Matrix { return B.at(t); };
  d.callbacks.L = [c](const Vector& x, const Vector&, double t) { return c.at(t).col(0).dot(x); };
  d.callbacks.L_x = [c](const Vector&, const Vector&, double t) -> Vector { return c.at(t).col(0); };
  Matrix X = rnd(N, n);
  X.row(0) = d.x0.transpose();
  out.traj = TrajectoryState(X, rnd(N, m), t_f);
  return out;
}

}  // namespace vemoc::testing
