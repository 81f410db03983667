#include "vemoc/sweeps.hpp"

#include "vemoc/errors.hpp"

namespace vemoc {

Linearization linearize(const OcpDefinition& def, const TrajectoryState& traj) {
  traj.check_valid(def);
  Linearization lin;
  lin.grid = TimeGrid::of(traj, def.t0);
  lin.revision = traj.revision();
  const Eigen::Index N = lin.grid.N;
  lin.nodes.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    const Vector x = traj.x_nodes().row(i).transpose();
    const Vector u = traj.u_nodes().row(i).transpose();
    const double t = (i == N - 1) ? traj.t_f() : lin.grid.time(i);
    NodeData& nd = lin.nodes[static_cast<std::size_t>(i)];
    nd.t = t;
    nd.f = def.f(x, u, t);
    nd.f_x = def.f_x(x, u, t);
    nd.f_u = def.f_u(x, u, t);
    nd.L = def.L(x, u, t);
    nd.L_x = def.L_x(x, u, t);
    nd.L_u = def.L_u(x, u, t);
    nd.phi_t = def.phi_t(x, t);
    nd.phi_x = def.phi_x(x, t);
    nd.phi_tx = def.phi_tx(x, t);
    nd.phi_xx = def.phi_xx(x, t);
  }

  const NodeData& last = lin.nodes.back();
  TerminalData& term = lin.terminal;
  term.x_f = traj.x_nodes().row(N - 1).transpose();
  term.t_f = traj.t_f();
  term.f = last.f;
  term.phi_x = last.phi_x;
  term.hamiltonian = last.phi_t + last.phi_x.dot(last.f) + last.L;
  term.g_E = def.g_E(term.x_f, term.t_f);
  term.g_E_x = def.g_E_x(term.x_f, term.t_f);
  term.g_E_t = def.g_E_t(term.x_f, term.t_f);
  term.g_I = def.g_I(term.x_f, term.t_f);
  term.g_I_x = def.g_I_x(term.x_f, term.t_f);
  term.g_I_t = def.g_I_t(term.x_f, term.t_f);
  return lin;
}

void TransitionTable::require_current(const TrajectoryState& traj) const {
  if (revision != traj.revision())
    throw InternalError("transition table is stale (revision " + std::to_string(revision) +
                        ", trajectory " + std::to_string(traj.revision()) + ")");
}

Matrix rk4_affine_step(const Matrix& y, const Matrix& B0, const Matrix& B1, const Matrix& c0,
                       const Matrix& c1, double h) {
  const Matrix Bm = 0.5 * (B0 + B1);
  const Matrix cm = 0.5 * (c0 + c1);
  const Matrix k1 = B0 * y + c0;
  const Matrix k2 = Bm * (y + 0.5 * h * k1) + cm;
  const Matrix k3 = Bm * (y + 0.5 * h * k2) + cm;
  const Matrix k4 = B1 * (y + h * k3) + c1;
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TransitionTable backward_transition_sweep(const Linearization& lin) {
  const auto N = lin.nodes.size();
  const Eigen::Index n = lin.nodes.front().f.size();
  const double h = lin.grid.spacing();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix zero = Matrix::Zero(n, n);

  TransitionTable table;
  table.revision = lin.revision;
  table.steps.resize(N - 1);
  for (std::size_t i = 0; i + 1 < N; ++i)
    table.steps[i] = rk4_affine_step(I, lin.nodes[i].f_x, lin.nodes[i + 1].f_x, zero, zero, h);

  table.psi.resize(N);
  table.psi[N - 1] = I;
  for (std::size_t i = N - 1; i-- > 0;) table.psi[i] = table.psi[i + 1] * table.steps[i];
  return table;
}

TransitionTable backward_transition_sweep(const OcpDefinition& def, const TrajectoryState& traj) {
  return backward_transition_sweep(linearize(def, traj));
}

namespace {

Vector adjoint_source(const NodeData& nd) {
  return nd.L_x + nd.phi_tx + nd.phi_xx * nd.f + nd.f_x.transpose() * nd.phi_x;
}

}  // namespace

void adjoint_sweep(const Linearization& lin, TransitionTable& table) {
  if (table.revision != lin.revision) throw InternalError("adjoint sweep: stale table");
  const auto N = lin.nodes.size();
  const Eigen::Index n = lin.nodes.front().f.size();
  const double h = lin.grid.spacing();
  table.w.assign(N, Vector::Zero(n));
  // In reversed time s = t_f - t: dw/ds = f_x^T w + q.
  Vector q_next = adjoint_source(lin.nodes[N - 1]);
  for (std::size_t i = N - 1; i-- > 0;) {
    const Vector q_here = adjoint_source(lin.nodes[i]);
    table.w[i] = rk4_affine_step(table.w[i + 1], lin.nodes[i + 1].f_x.transpose(),
                                 lin.nodes[i].f_x.transpose(), q_next, q_here, h);
    q_next = q_here;
  }
  for (const auto& w : table.w)
    if (!w.allFinite()) throw EvaluationError("adjoint sweep produced non-finite values");
}

TransitionTable adjoint_sweep(const OcpDefinition& def, const TrajectoryState& traj,
                              TransitionTable table) {
  table.require_current(traj);
  adjoint_sweep(linearize(def, traj), table);
  return table;
}

TransitionTable transition_table(const Linearization& lin) {
  TransitionTable table = backward_transition_sweep(lin);
  adjoint_sweep(lin, table);
  return table;
}

TransitionTable transition_table(const OcpDefinition& def, const TrajectoryState& traj) {
  return transition_table(linearize(def, traj));
}

Matrix compute_pu(const Linearization& lin, const TransitionTable& table) {
  if (table.revision != lin.revision || table.w.size() != lin.nodes.size())
    throw InternalError("compute_pu: stale or incomplete transition table");
  const auto N = lin.nodes.size();
  const Eigen::Index m = lin.nodes.front().f_u.cols();
  Matrix pu(static_cast<Eigen::Index>(N), m);
  for (std::size_t i = 0; i < N; ++i) {
    const NodeData& nd = lin.nodes[i];
    pu.row(static_cast<Eigen::Index>(i)) =
        (nd.L_u + nd.f_u.transpose() * (nd.phi_x + table.w[i])).transpose();
  }
  return pu;
}

Matrix compute_pu(const OcpDefinition& def, const TrajectoryState& traj,
                  const TransitionTable& table) {
  table.require_current(traj);
  return compute_pu(linearize(def, traj), table);
}

Matrix propagate_variation(const Linearization& lin, const TransitionTable& table,
                           const Matrix& du_dtau) {
  if (table.revision != lin.revision) throw InternalError("propagate_variation: stale table");
  const auto N = lin.nodes.size();
  const Eigen::Index n = lin.nodes.front().f.size();
  if (du_dtau.rows() != static_cast<Eigen::Index>(N) ||
      du_dtau.cols() != lin.nodes.front().f_u.cols())
    throw DefinitionError("propagate_variation: du_dtau has wrong shape");
  const double h = lin.grid.spacing();
  Matrix dx = Matrix::Zero(static_cast<Eigen::Index>(N), n);
  Vector b_here = lin.nodes[0].f_u * du_dtau.row(0).transpose();
  Vector state = Vector::Zero(n);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const Vector b_next = lin.nodes[i + 1].f_u * du_dtau.row(static_cast<Eigen::Index>(i + 1)).transpose();
    state = table.steps[i] * (state + 0.5 * h * b_here) + 0.5 * h * b_next;
    dx.row(static_cast<Eigen::Index>(i + 1)) = state.transpose();
    b_here = b_next;
  }
  return dx;
}

Matrix propagate_variation(const OcpDefinition& def, const TrajectoryState& traj,
                           const Matrix& du_dtau) {
  const Linearization lin = linearize(def, traj);
  return propagate_variation(lin, backward_transition_sweep(lin), du_dtau);
}

}  // namespace vemoc
