#pragma once

#include "vemoc/grid.hpp"

#include <vector>

namespace vemoc {

/// Callback values at one grid node.
struct NodeData {
  double t = 0.0;
  Vector f;
  Matrix f_x;
  Matrix f_u;
  double L = 0.0;
  Vector L_x;
  Vector L_u;
  double phi_t = 0.0;
  Vector phi_x;
  Vector phi_tx;
  Matrix phi_xx;
};

/// Terminal quantities at (x_f, t_f).
struct TerminalData {
  Vector x_f;
  double t_f = 0.0;
  Vector f;
  double hamiltonian = 0.0;  // phi_t + phi_x^T f + L at t_f
  Vector g_E, g_E_t, g_I, g_I_t;
  Matrix g_E_x, g_I_x;
  Vector phi_x;
};

/// All per-node evaluations needed by one evolution right-hand side.
struct Linearization {
  TimeGrid grid;
  std::vector<NodeData> nodes;
  TerminalData terminal;
  std::uint64_t revision = 0;
};

Linearization linearize(const OcpDefinition& def, const TrajectoryState& traj);

/// psi[i] = Phi_o(t_f, t_i) and the adjoint accumulator
/// w(t_i) = int_{t_i}^{t_f} Phi_o^T(s, t_i) q(s) ds,
/// q = L_x + phi_tx + phi_xx f + f_x^T phi_x.
///
/// `steps[i]` is the RK4 transition matrix from node i to node i + 1 of the
/// linearized dynamics (f_x linearly interpolated between nodes). psi is
/// accumulated from these, which is algebraically the same as a backward RK4
/// sweep of dPsi/dt = -Psi f_x.
struct TransitionTable {
  std::vector<Matrix> psi;
  std::vector<Vector> w;
  std::vector<Matrix> steps;
  std::uint64_t revision = 0;

  void require_current(const TrajectoryState& traj) const;
};

/// RK4 step of y' = B(s) y + c(s) over [0, h] with B and c linear in s
/// between the given endpoint values. y and c may have several columns.
Matrix rk4_affine_step(const Matrix& y, const Matrix& B0, const Matrix& B1, const Matrix& c0,
                       const Matrix& c1, double h);

TransitionTable backward_transition_sweep(const Linearization& lin);
TransitionTable backward_transition_sweep(const OcpDefinition& def, const TrajectoryState& traj);

/// Integrates dw/dt = -f_x^T w - q backward from w(t_f) = 0 and stores the
/// result in `table.w`.
void adjoint_sweep(const Linearization& lin, TransitionTable& table);
TransitionTable adjoint_sweep(const OcpDefinition& def, const TrajectoryState& traj,
                              TransitionTable table);

/// Both sweeps.
TransitionTable transition_table(const Linearization& lin);
TransitionTable transition_table(const OcpDefinition& def, const TrajectoryState& traj);

/// p_u(t_i) = L_u + f_u^T phi_x + f_u^T w(t_i), N x m.
Matrix compute_pu(const Linearization& lin, const TransitionTable& table);
Matrix compute_pu(const OcpDefinition& def, const TrajectoryState& traj,
                  const TransitionTable& table);

/// Forward solution of dx' = f_x dx + f_u du, dx(t0) = 0, at the nodes (N x n).
/// Homogeneous part by the RK4 transition matrices, forcing by the trapezoid
/// rule on each interval, so that dx(t_f) = sum_i w_i psi_i f_u du_i exactly.
Matrix propagate_variation(const Linearization& lin, const TransitionTable& table,
                           const Matrix& du_dtau);
Matrix propagate_variation(const OcpDefinition& def, const TrajectoryState& traj,
                           const Matrix& du_dtau);

}  // namespace vemoc
