#pragma once

#include "vemoc/sweeps.hpp"

#include <optional>
#include <vector>

namespace vemoc {

/// Gains of the evolution laws.
struct GainConfig {
  Matrix K;             // m x m, symmetric positive definite
  double k_tf = 0.0;    // zero iff the terminal time is fixed
  Vector k_g;           // q_I barrier gains, all positive
  double tol_act = 1e-9;

  /// K = scale * I, k_g broadcast to q_I entries.
  static GainConfig uniform(const OcpDefinition& def, double K_scale, double k_tf, double k_g,
                            double tol_act = 1e-9);

  /// Throws DefinitionError on any violated invariant.
  void validate(const OcpDefinition& def) const;
};

struct EvolutionOptions {
  bool barrier = true;
  bool node_motion = true;
};

/// One pass of the working-set loop.
struct WorkingSetPass {
  std::vector<int> working_set;
  Vector pi;
  std::optional<int> dropped;
};

struct ActiveSetState {
  std::vector<int> active;       // detected set, 0-based indices into g_I
  std::vector<int> working_set;  // subset held as equalities
  Vector pi_E;
  Vector pi_I;  // zeros off the working set
  std::vector<WorkingSetPass> iterations;
  double M_cond = 1.0;
  bool degenerate = false;

  /// Bit i set when constraint i is in the working set.
  std::uint64_t working_mask() const;
};

/// { i : g_I_i(x_f, t_f) >= -tol_act }.
std::vector<int> detect_active(const Vector& g_I, double tol_act);
std::vector<int> detect_active(const OcpDefinition& def, const TrajectoryState& traj,
                               const GainConfig& gains);

struct LinearSystem {
  Matrix M;
  Vector r;
};

/// Stacks g = [g_E; g_I(working_set)] and assembles
///   M = g_x (int Psi f_u K f_u^T Psi^T dt) g_x^T + k_tf c c^T,
///   r = g_x (int Psi f_u K p_u dt) + k_tf c H - barrier,
/// c = g_x f + g_t at t_f, H = phi_t + phi_x^T f + L at t_f. With the barrier
/// on, the working-set rows of r carry -k_g_i g_I_i so that the implied
/// dg_I_i/dtau equals -k_g_i g_I_i.
LinearSystem assemble_system(const OcpDefinition& def, const Linearization& lin,
                             const TransitionTable& table, const Matrix& p_u,
                             const std::vector<int>& working_set, const GainConfig& gains,
                             bool barrier_on);

struct MultiplierSolution {
  Vector pi;
  bool degenerate = false;
  double condition = 1.0;
};

/// Solves M pi = -r. Rank deficiency beyond 1e-10 ||M|| yields the minimum
/// norm least-squares solution with `degenerate` set.
MultiplierSolution solve_multipliers(const Matrix& M, const Vector& r);

/// Starts from the detected active set, drops the most negative inequality
/// multiplier until all remaining ones are non-negative.
ActiveSetState working_set_loop(const OcpDefinition& def, const Linearization& lin,
                                const TransitionTable& table, const Matrix& p_u,
                                const GainConfig& gains, bool barrier_on);

/// Psi_i^T (g_E_x^T pi_E + g_I_x^T pi_I) for every node (N x n).
Matrix multiplier_sensitivity(const Linearization& lin, const TransitionTable& table,
                              const ActiveSetState& aset);

/// du/dtau(t_i) = -K (p_u + f_u^T Psi_i^T (g_E_x^T pi_E + g_I_x^T pi_I)).
Matrix control_variation(const Linearization& lin, const TransitionTable& table,
                         const Matrix& p_u, const ActiveSetState& aset, const GainConfig& gains);

/// dt_f/dtau = -k_tf (H + pi_E^T c_E + pi_I^T c_I) at t_f.
double terminal_time_variation(const Linearization& lin, const ActiveSetState& aset,
                               const GainConfig& gains);

struct RhsDiagnostics {
  double J = 0.0;
  double dJ_dtau = 0.0;        // descent rate from the multiplier-adjoined form
  double r_u = 0.0;            // max-norm of p_u + f_u^T Psi^T g_x^T pi
  double r_tf = 0.0;           // |H + pi^T c| at t_f (zero when t_f is fixed)
  double dtf_dtau = 0.0;
  Vector g_E;
  Vector g_I;
  Vector dgE_dtau;             // implied by the returned field
  Vector dgI_dtau;
  double feasibility_defect = 0.0;  // ||dgE_dtau||_inf
};

struct RhsResult {
  Vector derivative;  // stacked [x rows | u rows | t_f]
  ActiveSetState active_set;
  RhsDiagnostics diagnostics;
};

/// Full right-hand side of the semi-discrete evolution equations.
RhsResult evolution_rhs(const OcpDefinition& def, const TrajectoryState& traj,
                        const GainConfig& gains, const EvolutionOptions& options);

}  // namespace vemoc
