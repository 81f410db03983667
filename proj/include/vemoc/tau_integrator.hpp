#pragma once

#include "vemoc/errors.hpp"
#include "vemoc/evolution.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vemoc {

struct IntegratorConfig {
  double rtol = 1e-3;
  double atol = 1e-6;
  double tau_final = 300.0;
  double h_init = 1e-2;
  double h_min = 1e-10;
  double h_max = 30.0;
  /// Uniform snapshot interval in tau; zero selects the default list
  /// {0, 5, 10, 20, 40, 80, 150, 300} clipped to tau_final.
  double snapshot_every = 0.0;
  std::optional<double> stop_residual;
  /// Re-integrate x from u through the dynamics every k accepted steps.
  std::optional<int> reproject_every;
  long max_steps = 2'000'000;

  void validate() const;
  std::vector<double> snapshot_times() const;
};

/// Derivative oracle for the embedded pair.
using RhsFunction = std::function<Vector(const Vector&)>;

struct Rk45Step {
  Vector state;     // candidate state (valid when accepted)
  Vector k_last;    // derivative at the candidate state (first-same-as-last)
  double h_next = 0.0;
  bool accepted = false;
  double error = 0.0;
};

/// One Dormand-Prince 5(4) step. `k_first` is the derivative at `state`.
/// err = max_i |delta_i| / (atol + rtol max(|y_i|, |y'_i|)); the step is
/// accepted iff err <= 1. Step-size update is a PI controller clipped to
/// [0.2, 5] times h. `err_prev` is the error of the last accepted step.
Rk45Step rk45_step(const Vector& state, const Vector& k_first, const RhsFunction& rhs, double h,
                   double rtol, double atol, double err_prev = 1e-4);

/// Convenience overload evaluating k_first itself.
Rk45Step rk45_step(const Vector& state, const RhsFunction& rhs, double h, double rtol,
                   double atol);

struct HistoryRow {
  double tau = 0.0;
  double J = 0.0;
  double t_f = 0.0;
  Vector pi_E;
  Vector pi_I;
  Vector g_E;
  Vector g_I;
  double r_u = 0.0;
  double r_tf = 0.0;
  std::uint64_t working_mask = 0;
  double step = 0.0;
  double M_cond = 1.0;
};

struct Snapshot {
  double tau = 0.0;
  TrajectoryState trajectory;
};

struct ActiveSetEvent {
  double tau = 0.0;
  int constraint = 0;
  bool entered = false;
};

struct EvolutionHistory {
  std::vector<HistoryRow> rows;
  std::vector<Snapshot> snapshots;
  std::vector<ActiveSetEvent> events;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
};

enum class StopReason { Continue, Horizon, Converged };
std::string to_string(StopReason reason);

StopReason stopping_check(const HistoryRow& row, const IntegratorConfig& config);

struct EvolveResult {
  TrajectoryState trajectory;
  EvolutionHistory history;
  ActiveSetState active_set;
  StopReason stop = StopReason::Horizon;
  std::vector<std::string> warnings;
};

/// Called after every right-hand-side evaluation with the evaluated
/// trajectory and the result.
using RhsObserver = std::function<void(const TrajectoryState&, const RhsResult&)>;

/// Integrates the evolution equations in virtual time from `initial`.
/// On error the partially filled history is attached to EvolveError.
EvolveResult evolve(const OcpDefinition& def, const TrajectoryState& initial,
                    const GainConfig& gains, const EvolutionOptions& options,
                    const IntegratorConfig& config, const RhsObserver& observer = {});

class EvolveError : public Error {
 public:
  EvolveError(const std::string& what, EvolutionHistory partial)
      : Error(what), history(std::move(partial)) {}
  EvolutionHistory history;
};

/// Re-integrates x from u through xdot = f with RK4 node-to-node steps
/// (u linearly interpolated), keeping x_0 and t_f.
TrajectoryState reproject_states(const OcpDefinition& def, const TrajectoryState& traj);

}  // namespace vemoc
