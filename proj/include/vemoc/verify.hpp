#pragma once

#include "vemoc/evolution.hpp"

#include <optional>
#include <string>

namespace vemoc {

struct ResidualReport {
  double r_u = 0.0;                      // max-norm of the control stationarity residual
  double r_tf = 0.0;                     // |terminal-time stationarity residual|
  double r_costate_ode = 0.0;            // max-norm of gamma' + L_x + f_x^T gamma, interior nodes
  double costate_scale = 0.0;            // ||gamma||_inf
  double r_transversality_time = 0.0;    // H(t_f) + phi_t + pi^T g_t with lambda = gamma
  double r_transversality_state = 0.0;   // ||gamma(t_f) - phi_x - g_x^T pi||_inf
  double r_stationary_pi = 0.0;          // || pi_stationary - pi_flow ||_inf
  double stationary_lsq_residual = 0.0;  // residual norm of the stacked least-squares system
  double complementary_slackness = 0.0;  // max_i |pi_I_i g_I_i|
  Vector pi_stationary;
};

/// gamma(t_i) = phi_x(t_i) + Psi_i^T (g_E_x^T pi_E + g_I_x^T pi_I) + w(t_i), N x n.
Matrix reconstruct_costate(const Linearization& lin, const TransitionTable& table,
                           const ActiveSetState& aset);
Matrix reconstruct_costate(const OcpDefinition& def, const TrajectoryState& traj,
                           const TransitionTable& table, const ActiveSetState& aset);

/// Classical costate obtained by RK4 backward integration of
/// lambda' = -L_x - f_x^T lambda from lambda(t_f) = lambda_f.
Matrix costate_by_backward_integration(const Linearization& lin, const Vector& lambda_f);

ResidualReport optimality_residuals(const OcpDefinition& def, const Linearization& lin,
                                    const TransitionTable& table, const ActiveSetState& aset);
ResidualReport optimality_residuals(const OcpDefinition& def, const TrajectoryState& traj,
                                    const TransitionTable& table, const ActiveSetState& aset);

/// Rebuilds sweeps and multipliers for `traj` and evaluates the residuals.
struct VerificationResult {
  ResidualReport report;
  ActiveSetState active_set;
};
VerificationResult verify_trajectory(const OcpDefinition& def, const TrajectoryState& traj,
                                     const GainConfig& gains, const EvolutionOptions& options);

enum class ConstraintClass { PEEC, PseudoPEEC, NEEC };
std::string to_string(ConstraintClass c);

/// Sign classification of a multiplier: > tol PEEC, |.| <= tol pseudo-PEEC,
/// < -tol NEEC.
ConstraintClass classify_constraint(double pi, double tol);

struct CycloidSolution {
  double t_f = 0.0;
  double theta_f = 0.0;
  double radius = 0.0;
};

/// Minimum-time cycloid from rest at the origin to (x_target, -drop):
/// x = R (theta - sin theta), y = -R (1 - cos theta), t = theta sqrt(R / g).
CycloidSolution cycloid_oracle(double x_target, double drop, double g);

/// Closed-form minimum-energy control of the double integrator
/// p'' = u, J = int u^2 / 2 on [0, T] from rest, with terminal position
/// `position` and optionally terminal velocity.
struct LqOptimum {
  double T = 1.0;
  double c0 = 0.0;  // u*(t) = c0 + c1 t
  double c1 = 0.0;
  double J = 0.0;

  double control(double t) const { return c0 + c1 * t; }
  double velocity(double t) const { return c0 * t + 0.5 * c1 * t * t; }
  double position(double t) const { return 0.5 * c0 * t * t + c1 * t * t * t / 6.0; }
};
LqOptimum lq_oracle(double T, double position, std::optional<double> velocity = std::nullopt);

}  // namespace vemoc
