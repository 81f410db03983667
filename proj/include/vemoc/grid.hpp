#pragma once

#include "vemoc/ocp_model.hpp"

namespace vemoc {

/// Uniform normalized grid on [t0, t_f]: sigma_i = i / (N - 1).
struct TimeGrid {
  Eigen::Index N = 0;
  Vector sigma;
  double t0 = 0.0;
  double t_f = 1.0;

  static TimeGrid uniform(Eigen::Index nodes, double t0, double t_f);
  static TimeGrid of(const TrajectoryState& traj, double t0);

  double spacing() const { return (t_f - t0) / static_cast<double>(N - 1); }
  double time(Eigen::Index i) const { return t0 + sigma[i] * (t_f - t0); }

  /// Composite trapezoid weights, summing to t_f - t0.
  Vector weights() const;
};

/// Column-wise trapezoidal integral of node values (N x k) over [t0, t_f].
/// Sums run in ascending node order.
Vector quadrature(const Matrix& values, const TimeGrid& grid);

struct InterpolatedPoint {
  Vector x;
  Vector u;
};

/// Piecewise-linear interpolation of the node values at physical time t.
InterpolatedPoint interpolate(const TrajectoryState& traj, double t0, double t);

/// du/dt at the nodes by second-order differences (one-sided at the ends).
Matrix control_time_derivative(const Matrix& u_nodes, double spacing);

/// Convective correction of node values when t_f moves with the normalized
/// grid held fixed. Returns N x (n + m): x columns hold f(x_i, u_i, t_i)
/// sigma_i dtf_dtau, u columns hold du/dt(t_i) sigma_i dtf_dtau.
Matrix node_motion_term(const TrajectoryState& traj, const OcpDefinition& def, double dtf_dtau);

}  // namespace vemoc
