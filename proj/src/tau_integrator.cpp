#include "vemoc/tau_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vemoc {

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw DefinitionError("rtol and atol must be positive");
  if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max))
    throw DefinitionError("step bounds must satisfy 0 < h_min <= h_init <= h_max");
  if (!(tau_final > 0.0)) throw DefinitionError("tau_final must be positive");
  if (snapshot_every < 0.0) throw DefinitionError("snapshot_every must be non-negative");
  if (stop_residual && !(*stop_residual > 0.0))
    throw DefinitionError("stop_residual must be positive");
  if (reproject_every && *reproject_every <= 0)
    throw DefinitionError("reproject interval must be a positive step count");
}

std::vector<double> IntegratorConfig::snapshot_times() const {
  std::vector<double> times;
  if (snapshot_every > 0.0) {
    for (long k = 0;; ++k) {
      const double tau = static_cast<double>(k) * snapshot_every;
      if (tau >= tau_final) break;
      times.push_back(tau);
    }
  } else {
    for (double tau : {0.0, 5.0, 10.0, 20.0, 40.0, 80.0, 150.0, 300.0})
      if (tau < tau_final) times.push_back(tau);
  }
  times.push_back(tau_final);
  return times;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 5.0;
constexpr double kAlpha = 0.7 / 5.0;
constexpr double kBeta = 0.4 / 5.0;

}  // namespace

Rk45Step rk45_step(const Vector& y, const Vector& k1, const RhsFunction& rhs, double h,
                   double rtol, double atol, double err_prev) {
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;  // autonomous right-hand side: stage abscissae unused
  Rk45Step out;
  double err = std::numeric_limits<double>::infinity();
  try {
    const Vector k2 = rhs(y + h * (a21 * k1));
    const Vector k3 = rhs(y + h * (a31 * k1 + a32 * k2));
    const Vector k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    Vector k7 = rhs(y_new);
    const Vector delta = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err = std::max(err, std::abs(delta[i]) / scale);
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    out.state = std::move(y_new);
    out.k_last = std::move(k7);
  } catch (const DomainError&) {
    // Trial state left the domain (e.g. t_f <= t0): reject.
  } catch (const EvaluationError&) {
  }

  out.error = err;
  out.accepted = err <= 1.0;
  double factor;
  if (err == 0.0) {
    factor = kFacMax;
  } else if (out.accepted) {
    factor = kSafety * std::pow(err, -kAlpha) * std::pow(std::max(err_prev, 1e-4), kBeta);
    factor = std::clamp(factor, kFacMin, kFacMax);
  } else if (std::isfinite(err)) {
    factor = std::clamp(kSafety * std::pow(err, -0.2), kFacMin, 1.0);
  } else {
    factor = kFacMin;
  }
  out.h_next = h * factor;
  return out;
}

Rk45Step rk45_step(const Vector& state, const RhsFunction& rhs, double h, double rtol,
                   double atol) {
  return rk45_step(state, rhs(state), rhs, h, rtol, atol);
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Continue: return "continue";
    case StopReason::Horizon: return "horizon";
    case StopReason::Converged: return "converged";
  }
  return "unknown";
}

StopReason stopping_check(const HistoryRow& row, const IntegratorConfig& config) {
  if (row.tau >= config.tau_final) return StopReason::Horizon;
  if (config.stop_residual && row.r_u <= *config.stop_residual &&
      row.r_tf <= *config.stop_residual)
    return StopReason::Converged;
  return StopReason::Continue;
}

TrajectoryState reproject_states(const OcpDefinition& def, const TrajectoryState& traj) {
  const Eigen::Index N = traj.nodes();
  const TimeGrid grid = TimeGrid::of(traj, def.t0);
  const double h = grid.spacing();
  Matrix x(N, def.n);
  x.row(0) = def.x0.transpose();
  for (Eigen::Index i = 0; i + 1 < N; ++i) {
    const Vector xi = x.row(i).transpose();
    const Vector u0 = traj.u_nodes().row(i).transpose();
    const Vector u1 = traj.u_nodes().row(i + 1).transpose();
    const Vector um = 0.5 * (u0 + u1);
    const double t = grid.time(i);
    const Vector k1 = def.f(xi, u0, t);
    const Vector k2 = def.f(xi + 0.5 * h * k1, um, t + 0.5 * h);
    const Vector k3 = def.f(xi + 0.5 * h * k2, um, t + 0.5 * h);
    const Vector k4 = def.f(xi + h * k3, u1, t + h);
    x.row(i + 1) = (xi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).transpose();
  }
  return TrajectoryState(std::move(x), traj.u_nodes(), traj.t_f());
}

namespace {

HistoryRow make_row(double tau, double step, const TrajectoryState& traj, const RhsResult& rhs) {
  HistoryRow row;
  row.tau = tau;
  row.J = rhs.diagnostics.J;
  row.t_f = traj.t_f();
  row.pi_E = rhs.active_set.pi_E;
  row.pi_I = rhs.active_set.pi_I;
  row.g_E = rhs.diagnostics.g_E;
  row.g_I = rhs.diagnostics.g_I;
  row.r_u = rhs.diagnostics.r_u;
  row.r_tf = rhs.diagnostics.r_tf;
  row.working_mask = rhs.active_set.working_mask();
  row.step = step;
  row.M_cond = rhs.active_set.M_cond;
  return row;
}

}  // namespace

EvolveResult evolve(const OcpDefinition& def, const TrajectoryState& initial,
                    const GainConfig& gains, const EvolutionOptions& options,
                    const IntegratorConfig& config, const RhsObserver& observer) {
  def.validate();
  gains.validate(def);
  config.validate();
  initial.check_valid(def);
  if (def.q_I > 64) throw DefinitionError("at most 64 inequality constraints are supported");

  EvolveResult result;
  EvolutionHistory& history = result.history;
  {
    const Vector xf = initial.x_nodes().row(initial.nodes() - 1).transpose();
    const Vector gE = def.g_E(xf, initial.t_f());
    const Vector gI = def.g_I(xf, initial.t_f());
    if (gE.size() && gE.cwiseAbs().maxCoeff() > 1e-6)
      result.warnings.push_back("initial trajectory violates g_E by more than 1e-6");
    if (gI.size() && gI.maxCoeff() > gains.tol_act)
      result.warnings.push_back("initial trajectory violates g_I; the barrier will act on it");
  }

  const Eigen::Index N = initial.nodes();
  const Eigen::Index n = def.n;
  const Eigen::Index m = def.m;

  RhsResult last_rhs;
  TrajectoryState last_traj;
  const RhsFunction rhs = [&](const Vector& y) -> Vector {
    TrajectoryState traj = TrajectoryState::from_stacked(y, N, n, m);
    RhsResult r = evolution_rhs(def, traj, gains, options);
    ++history.rhs_evaluations;
    if (observer) observer(traj, r);
    Vector d = r.derivative;
    last_rhs = std::move(r);
    last_traj = std::move(traj);
    return d;
  };

  try {
    Vector y = initial.to_stacked();
    Vector k1 = rhs(y);
    double tau = 0.0;
    history.rows.push_back(make_row(tau, 0.0, last_traj, last_rhs));
    std::uint64_t mask = last_rhs.active_set.working_mask();
    ActiveSetState aset = last_rhs.active_set;

    const std::vector<double> stops = config.snapshot_times();
    std::size_t next_stop = 0;
    if (stops.front() == 0.0) {
      history.snapshots.push_back({0.0, last_traj});
      next_stop = 1;
    }

    double h = config.h_init;
    double err_prev = 1e-4;
    StopReason stop = StopReason::Continue;
    while (stop == StopReason::Continue) {
      if (history.accepted_steps + history.rejected_steps >= config.max_steps)
        throw StepFailure("step budget exhausted at tau=" + std::to_string(tau));
      const double target = stops[next_stop];
      double step = std::min(h, config.h_max);
      bool lands = false;
      if (tau + step >= target) {
        step = target - tau;
        lands = true;
      }
      Rk45Step trial = rk45_step(y, k1, rhs, step, config.rtol, config.atol, err_prev);
      if (!trial.accepted) {
        ++history.rejected_steps;
        h = trial.h_next;
        if (h < config.h_min)
          throw StepFailure("step size fell below h_min at tau=" + std::to_string(tau));
        continue;
      }

      ++history.accepted_steps;
      err_prev = trial.error;
      tau = lands ? target : tau + step;
      y = std::move(trial.state);
      k1 = std::move(trial.k_last);
      // The largest step is only limited by the controller, not by the clip.
      if (!lands || trial.h_next > h) h = trial.h_next;

      if (config.reproject_every && history.accepted_steps % *config.reproject_every == 0) {
        y = reproject_states(def, last_traj).to_stacked();
        k1 = rhs(y);
      }

      history.rows.push_back(make_row(tau, step, last_traj, last_rhs));
      const std::uint64_t new_mask = last_rhs.active_set.working_mask();
      if (new_mask != mask) {
        for (int i = 0; i < def.q_I; ++i) {
          const bool before = (mask >> i) & 1U;
          const bool after = (new_mask >> i) & 1U;
          if (before != after) history.events.push_back({tau, i, after});
        }
        mask = new_mask;
      }
      aset = last_rhs.active_set;

      if (lands) {
        history.snapshots.push_back({tau, last_traj});
        if (next_stop + 1 < stops.size()) ++next_stop;
      }
      stop = stopping_check(history.rows.back(), config);
    }

    result.trajectory = last_traj;
    result.active_set = aset;
    result.stop = stop;
    if (stop == StopReason::Converged &&
        (history.snapshots.empty() || history.snapshots.back().tau != tau))
      history.snapshots.push_back({tau, last_traj});
  } catch (const EvolveError&) {
    throw;
  } catch (const Error& e) {
    throw EvolveError(e.what(), std::move(history));
  }
  return result;
}

}  // namespace vemoc
