#include "vemoc/evolution.hpp"

#include "vemoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vemoc {

GainConfig GainConfig::uniform(const OcpDefinition& def, double K_scale, double k_tf, double k_g,
                               double tol_act) {
  GainConfig g;
  g.K = K_scale * Matrix::Identity(def.m, def.m);
  g.k_tf = def.terminal_time_mode == TerminalTimeMode::Fixed ? 0.0 : k_tf;
  g.k_g = Vector::Constant(def.q_I, k_g);
  g.tol_act = tol_act;
  return g;
}

void GainConfig::validate(const OcpDefinition& def) const {
  if (K.rows() != def.m || K.cols() != def.m) throw DefinitionError("gain K must be m x m");
  if (!K.allFinite()) throw DefinitionError("gain K is not finite");
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, K.cwiseAbs().maxCoeff()))
    throw DefinitionError("gain K is not symmetric");
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) throw DefinitionError("gain K is not positive definite");
  if (!(k_tf >= 0.0) || !std::isfinite(k_tf)) throw DefinitionError("k_tf must be non-negative");
  const bool fixed = def.terminal_time_mode == TerminalTimeMode::Fixed;
  if (fixed && k_tf != 0.0) throw DefinitionError("k_tf must be 0 when t_f is fixed");
  if (!fixed && k_tf == 0.0) throw DefinitionError("k_tf must be positive when t_f is free");
  if (k_g.size() != def.q_I) throw DefinitionError("k_g must have q_I entries");
  for (Eigen::Index i = 0; i < k_g.size(); ++i)
    if (!(k_g[i] > 0.0)) throw DefinitionError("barrier gains must be positive");
  if (!(tol_act >= 0.0)) throw DefinitionError("tol_act must be non-negative");
}

std::uint64_t ActiveSetState::working_mask() const {
  std::uint64_t mask = 0;
  for (int i : working_set) mask |= (std::uint64_t{1} << i);
  return mask;
}

std::vector<int> detect_active(const Vector& g_I, double tol_act) {
  std::vector<int> active;
  for (Eigen::Index i = 0; i < g_I.size(); ++i)
    if (g_I[i] >= -tol_act) active.push_back(static_cast<int>(i));
  return active;
}

std::vector<int> detect_active(const OcpDefinition& def, const TrajectoryState& traj,
                               const GainConfig& gains) {
  traj.check_valid(def);
  const Vector xf = traj.x_nodes().row(traj.nodes() - 1).transpose();
  return detect_active(def.g_I(xf, traj.t_f()), gains.tol_act);
}

namespace {

struct StackedConstraints {
  Matrix g_x;
  Vector g_t;
};

StackedConstraints stack_constraints(const TerminalData& term, const std::vector<int>& working_set) {
  const Eigen::Index qE = term.g_E.size();
  const Eigen::Index rows = qE + static_cast<Eigen::Index>(working_set.size());
  const Eigen::Index n = term.x_f.size();
  StackedConstraints s{Matrix(rows, n), Vector(rows)};
  s.g_x.topRows(qE) = term.g_E_x;
  s.g_t.head(qE) = term.g_E_t;
  for (std::size_t k = 0; k < working_set.size(); ++k) {
    const auto row = qE + static_cast<Eigen::Index>(k);
    s.g_x.row(row) = term.g_I_x.row(working_set[k]);
    s.g_t[row] = term.g_I_t[working_set[k]];
  }
  return s;
}

}  // namespace

LinearSystem assemble_system(const OcpDefinition& def, const Linearization& lin,
                             const TransitionTable& table, const Matrix& p_u,
                             const std::vector<int>& working_set, const GainConfig& gains,
                             bool barrier_on) {
  if (table.revision != lin.revision) throw InternalError("assemble_system: stale table");
  const TerminalData& term = lin.terminal;
  const StackedConstraints g = stack_constraints(term, working_set);
  const Eigen::Index rows = g.g_x.rows();
  LinearSystem sys{Matrix::Zero(rows, rows), Vector::Zero(rows)};
  if (rows == 0) return sys;

  const Vector w = lin.grid.weights();
  const Eigen::Index n = def.n;
  Matrix S = Matrix::Zero(n, n);
  Vector v = Vector::Zero(n);
  for (std::size_t i = 0; i < lin.nodes.size(); ++i) {
    const Matrix B = table.psi[i] * lin.nodes[i].f_u;  // n x m
    const Matrix BK = B * gains.K;
    const auto wi = w[static_cast<Eigen::Index>(i)];
    S.noalias() += wi * BK * B.transpose();
    v.noalias() += wi * BK * p_u.row(static_cast<Eigen::Index>(i)).transpose();
  }

  const Vector c = g.g_x * term.f + g.g_t;
  sys.M = g.g_x * S * g.g_x.transpose() + gains.k_tf * c * c.transpose();
  sys.r = g.g_x * v + gains.k_tf * term.hamiltonian * c;
  if (barrier_on) {
    const Eigen::Index qE = def.q_E;
    for (std::size_t k = 0; k < working_set.size(); ++k) {
      const int idx = working_set[k];
      sys.r[qE + static_cast<Eigen::Index>(k)] -= gains.k_g[idx] * term.g_I[idx];
    }
  }

  const double scale = sys.M.cwiseAbs().maxCoeff();
  const double asym = (sys.M - sys.M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, std::numeric_limits<double>::min()))
    throw InternalError("assembled M is not symmetric");
  sys.M = 0.5 * (sys.M + sys.M.transpose());
  return sys;
}

MultiplierSolution solve_multipliers(const Matrix& M, const Vector& r) {
  if (M.rows() != M.cols() || M.rows() != r.size())
    throw DefinitionError("solve_multipliers: shape mismatch");
  MultiplierSolution sol;
  sol.pi = Vector::Zero(r.size());
  if (r.size() == 0) return sol;
  if (!M.allFinite() || !r.allFinite()) throw EvaluationError("solve_multipliers: non-finite input");

  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double smax = sv[0];
  const double threshold = 1e-10 * smax;
  const double smin = sv[sv.size() - 1];
  sol.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (smax == 0.0 || smin <= threshold) {
    sol.degenerate = true;
    svd.setThreshold(1e-10);
    sol.pi = svd.solve(-r);
    return sol;
  }
  sol.pi = M.ldlt().solve(-r);
  return sol;
}

ActiveSetState working_set_loop(const OcpDefinition& def, const Linearization& lin,
                                const TransitionTable& table, const Matrix& p_u,
                                const GainConfig& gains, bool barrier_on) {
  ActiveSetState state;
  state.active = detect_active(lin.terminal.g_I, gains.tol_act);
  state.working_set = state.active;
  const Eigen::Index qE = def.q_E;

  for (int pass = 0; pass <= def.q_I; ++pass) {
    const LinearSystem sys =
        assemble_system(def, lin, table, p_u, state.working_set, gains, barrier_on);
    MultiplierSolution sol = solve_multipliers(sys.M, sys.r);

    WorkingSetPass record{state.working_set, sol.pi, std::nullopt};
    const double tol_sign =
        1e-12 * (sol.pi.size() ? sol.pi.cwiseAbs().maxCoeff() : 0.0) + 1e-14;
    std::optional<std::size_t> worst;
    double worst_value = -tol_sign;
    for (std::size_t k = 0; k < state.working_set.size(); ++k) {
      const double value = sol.pi[qE + static_cast<Eigen::Index>(k)];
      if (value < worst_value) {
        worst_value = value;
        worst = k;
      }
    }
    if (worst) {
      record.dropped = state.working_set[*worst];
      state.iterations.push_back(std::move(record));
      state.working_set.erase(state.working_set.begin() + static_cast<std::ptrdiff_t>(*worst));
      continue;
    }
    state.iterations.push_back(std::move(record));

    state.pi_E = sol.pi.head(qE);
    state.pi_I = Vector::Zero(def.q_I);
    for (std::size_t k = 0; k < state.working_set.size(); ++k)
      state.pi_I[state.working_set[k]] = std::max(0.0, sol.pi[qE + static_cast<Eigen::Index>(k)]);
    state.M_cond = sol.condition;
    state.degenerate = sol.degenerate;
    return state;
  }
  throw CyclingError("working-set loop exceeded " + std::to_string(def.q_I + 1) + " passes");
}

Matrix multiplier_sensitivity(const Linearization& lin, const TransitionTable& table,
                              const ActiveSetState& aset) {
  const TerminalData& term = lin.terminal;
  Vector nu = Vector::Zero(term.x_f.size());
  if (term.g_E.size() > 0) nu += term.g_E_x.transpose() * aset.pi_E;
  if (term.g_I.size() > 0) nu += term.g_I_x.transpose() * aset.pi_I;
  Matrix out(static_cast<Eigen::Index>(lin.nodes.size()), nu.size());
  for (std::size_t i = 0; i < lin.nodes.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = (table.psi[i].transpose() * nu).transpose();
  return out;
}

namespace {

/// p_u + f_u^T Psi^T nu at every node (N x m).
Matrix stationarity_field(const Linearization& lin, const TransitionTable& table,
                          const Matrix& p_u, const ActiveSetState& aset) {
  const Matrix sens = multiplier_sensitivity(lin, table, aset);
  Matrix out = p_u;
  for (std::size_t i = 0; i < lin.nodes.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.row(row) += (lin.nodes[i].f_u.transpose() * sens.row(row).transpose()).transpose();
  }
  return out;
}

double time_stationarity(const Linearization& lin, const ActiveSetState& aset) {
  const TerminalData& term = lin.terminal;
  double value = term.hamiltonian;
  if (term.g_E.size() > 0) value += aset.pi_E.dot(term.g_E_x * term.f + term.g_E_t);
  if (term.g_I.size() > 0) value += aset.pi_I.dot(term.g_I_x * term.f + term.g_I_t);
  return value;
}

}  // namespace

Matrix control_variation(const Linearization& lin, const TransitionTable& table,
                         const Matrix& p_u, const ActiveSetState& aset, const GainConfig& gains) {
  return -stationarity_field(lin, table, p_u, aset) * gains.K.transpose();
}

double terminal_time_variation(const Linearization& lin, const ActiveSetState& aset,
                               const GainConfig& gains) {
  if (gains.k_tf == 0.0) return 0.0;
  return -gains.k_tf * time_stationarity(lin, aset);
}

RhsResult evolution_rhs(const OcpDefinition& def, const TrajectoryState& traj,
                        const GainConfig& gains, const EvolutionOptions& options) {
  const Linearization lin = linearize(def, traj);
  const TransitionTable table = transition_table(lin);
  const Matrix p_u = compute_pu(lin, table);

  RhsResult result;
  result.active_set = working_set_loop(def, lin, table, p_u, gains, options.barrier);
  const ActiveSetState& aset = result.active_set;

  const Matrix field = stationarity_field(lin, table, p_u, aset);
  const Matrix du = -field * gains.K.transpose();
  const double dtf = gains.k_tf == 0.0 ? 0.0 : -gains.k_tf * time_stationarity(lin, aset);
  Matrix dx = propagate_variation(lin, table, du);
  const Vector dxf = dx.row(dx.rows() - 1).transpose();
  Matrix du_total = du;

  const Eigen::Index N = lin.grid.N;
  if (options.node_motion && dtf != 0.0) {
    const Matrix du_dt = control_time_derivative(traj.u_nodes(), lin.grid.spacing());
    for (Eigen::Index i = 1; i < N; ++i) {
      const double scale = lin.grid.sigma[i] * dtf;
      dx.row(i) += scale * lin.nodes[static_cast<std::size_t>(i)].f.transpose();
      du_total.row(i) += scale * du_dt.row(i);
    }
  }

  result.derivative = TrajectoryState(dx, du_total, dtf).to_stacked();

  RhsDiagnostics& d = result.diagnostics;
  const TerminalData& term = lin.terminal;
  const Vector w = lin.grid.weights();
  double running = 0.0;
  double descent = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    running += w[i] * lin.nodes[static_cast<std::size_t>(i)].L;
    descent += w[i] * field.row(i).dot(du.row(i));
  }
  d.J = def.phi(term.x_f, term.t_f) + running;
  d.dtf_dtau = dtf;
  d.dJ_dtau = descent + time_stationarity(lin, aset) * dtf;
  d.r_u = field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
  d.r_tf = def.terminal_time_mode == TerminalTimeMode::Free
               ? std::abs(time_stationarity(lin, aset))
               : 0.0;
  d.g_E = term.g_E;
  d.g_I = term.g_I;
  // variation at fixed t plus the terminal drift from moving t_f
  d.dgE_dtau = term.g_E_x * dxf + (term.g_E_x * term.f + term.g_E_t) * dtf;
  d.dgI_dtau = term.g_I_x * dxf + (term.g_I_x * term.f + term.g_I_t) * dtf;
  d.feasibility_defect = d.dgE_dtau.size() ? d.dgE_dtau.cwiseAbs().maxCoeff() : 0.0;
  return result;
}

}  // namespace vemoc
