#include "vemoc/grid.hpp"

#include "vemoc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace vemoc {

TimeGrid TimeGrid::uniform(Eigen::Index nodes, double t0, double t_f) {
  if (nodes < 2) throw DomainError("grid needs at least two nodes");
  TimeGrid g;
  g.N = nodes;
  g.t0 = t0;
  g.t_f = t_f;
  g.sigma.resize(nodes);
  for (Eigen::Index i = 0; i < nodes; ++i)
    g.sigma[i] = static_cast<double>(i) / static_cast<double>(nodes - 1);
  return g;
}

TimeGrid TimeGrid::of(const TrajectoryState& traj, double t0) {
  return uniform(traj.nodes(), t0, traj.t_f());
}

Vector TimeGrid::weights() const {
  const double h = spacing();
  Vector w = Vector::Constant(N, h);
  w[0] = 0.5 * h;
  w[N - 1] = 0.5 * h;
  return w;
}

Vector quadrature(const Matrix& values, const TimeGrid& grid) {
  if (grid.N < 2) throw DomainError("quadrature needs at least two nodes");
  if (values.rows() != grid.N) throw DefinitionError("quadrature: row count differs from grid");
  if (!values.allFinite()) throw EvaluationError("quadrature: non-finite integrand");
  const Vector w = grid.weights();
  Vector sum = Vector::Zero(values.cols());
  for (Eigen::Index i = 0; i < grid.N; ++i) sum += w[i] * values.row(i).transpose();
  return sum;
}

InterpolatedPoint interpolate(const TrajectoryState& traj, double t0, double t) {
  const double tf = traj.t_f();
  if (!(t >= t0 && t <= tf)) throw DomainError("interpolate: t outside [t0, t_f]");
  const Eigen::Index N = traj.nodes();
  const double s = (t - t0) / (tf - t0) * static_cast<double>(N - 1);
  InterpolatedPoint p;
  // Exact node hits (t equal to the grid's own node time) return the stored values.
  const auto nearest = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(s)), 0, N - 1);
  if (traj.time_at(nearest, t0) == t) {
    p.x = traj.x_nodes().row(nearest).transpose();
    p.u = traj.u_nodes().row(nearest).transpose();
    return p;
  }
  Eigen::Index i = static_cast<Eigen::Index>(std::floor(s));
  if (i >= N - 1) i = N - 2;
  if (i < 0) i = 0;
  const double a = s - static_cast<double>(i);
  if (a == 0.0) {
    p.x = traj.x_nodes().row(i).transpose();
    p.u = traj.u_nodes().row(i).transpose();
  } else if (a == 1.0) {
    p.x = traj.x_nodes().row(i + 1).transpose();
    p.u = traj.u_nodes().row(i + 1).transpose();
  } else {
    p.x = ((1.0 - a) * traj.x_nodes().row(i) + a * traj.x_nodes().row(i + 1)).transpose();
    p.u = ((1.0 - a) * traj.u_nodes().row(i) + a * traj.u_nodes().row(i + 1)).transpose();
  }
  return p;
}

Matrix control_time_derivative(const Matrix& u_nodes, double spacing) {
  const Eigen::Index N = u_nodes.rows();
  Matrix du(N, u_nodes.cols());
  if (N < 3) {
    for (Eigen::Index i = 0; i < N; ++i) du.row(i) = (u_nodes.row(N - 1) - u_nodes.row(0)) / spacing;
    return du;
  }
  const double inv2h = 1.0 / (2.0 * spacing);
  du.row(0) = (-3.0 * u_nodes.row(0) + 4.0 * u_nodes.row(1) - u_nodes.row(2)) * inv2h;
  for (Eigen::Index i = 1; i + 1 < N; ++i)
    du.row(i) = (u_nodes.row(i + 1) - u_nodes.row(i - 1)) * inv2h;
  du.row(N - 1) =
      (3.0 * u_nodes.row(N - 1) - 4.0 * u_nodes.row(N - 2) + u_nodes.row(N - 3)) * inv2h;
  return du;
}

Matrix node_motion_term(const TrajectoryState& traj, const OcpDefinition& def, double dtf_dtau) {
  const Eigen::Index N = traj.nodes();
  const int n = def.n;
  const int m = def.m;
  Matrix out = Matrix::Zero(N, n + m);
  if (dtf_dtau == 0.0) return out;
  const TimeGrid grid = TimeGrid::of(traj, def.t0);
  const Matrix du_dt = control_time_derivative(traj.u_nodes(), grid.spacing());
  for (Eigen::Index i = 1; i < N; ++i) {
    const double scale = grid.sigma[i] * dtf_dtau;
    const Vector fi = def.f(traj.x_nodes().row(i).transpose(), traj.u_nodes().row(i).transpose(),
                            grid.time(i));
    out.row(i).head(n) = scale * fi.transpose();
    out.row(i).tail(m) = scale * du_dt.row(i);
  }
  return out;
}

}  // namespace vemoc
