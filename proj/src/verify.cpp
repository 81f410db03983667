#include "vemoc/verify.hpp"

#include "vemoc/errors.hpp"

#include <cmath>
#include <numbers>

namespace vemoc {

Matrix reconstruct_costate(const Linearization& lin, const TransitionTable& table,
                           const ActiveSetState& aset) {
  if (table.revision != lin.revision || table.w.size() != lin.nodes.size())
    throw InternalError("reconstruct_costate: stale or incomplete transition table");
  Matrix gamma = multiplier_sensitivity(lin, table, aset);
  for (std::size_t i = 0; i < lin.nodes.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    gamma.row(row) += (lin.nodes[i].phi_x + table.w[i]).transpose();
  }
  return gamma;
}

Matrix reconstruct_costate(const OcpDefinition& def, const TrajectoryState& traj,
                           const TransitionTable& table, const ActiveSetState& aset) {
  table.require_current(traj);
  return reconstruct_costate(linearize(def, traj), table, aset);
}

Matrix costate_by_backward_integration(const Linearization& lin, const Vector& lambda_f) {
  const auto N = lin.nodes.size();
  const double h = lin.grid.spacing();
  Matrix lambda(static_cast<Eigen::Index>(N), lambda_f.size());
  Vector state = lambda_f;
  lambda.row(static_cast<Eigen::Index>(N - 1)) = state.transpose();
  // Reversed time: dlambda/ds = f_x^T lambda + L_x.
  for (std::size_t i = N - 1; i-- > 0;) {
    state = rk4_affine_step(state, lin.nodes[i + 1].f_x.transpose(), lin.nodes[i].f_x.transpose(),
                            lin.nodes[i + 1].L_x, lin.nodes[i].L_x, h);
    lambda.row(static_cast<Eigen::Index>(i)) = state.transpose();
  }
  return lambda;
}

ResidualReport optimality_residuals(const OcpDefinition& def, const Linearization& lin,
                                    const TransitionTable& table, const ActiveSetState& aset) {
  ResidualReport rep;
  const auto N = lin.nodes.size();
  const double h = lin.grid.spacing();
  const TerminalData& term = lin.terminal;
  const Matrix gamma = reconstruct_costate(lin, table, aset);
  rep.costate_scale = gamma.size() ? gamma.cwiseAbs().maxCoeff() : 0.0;

  // L_u + f_u^T gamma coincides with p_u + f_u^T Psi^T nu.
  for (std::size_t i = 0; i < N; ++i) {
    const NodeData& nd = lin.nodes[i];
    const Vector hu = nd.L_u + nd.f_u.transpose() * gamma.row(static_cast<Eigen::Index>(i)).transpose();
    if (hu.size()) rep.r_u = std::max(rep.r_u, hu.cwiseAbs().maxCoeff());
  }

  for (std::size_t i = 1; i + 1 < N; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector g = gamma.row(row).transpose();
    const Vector dg = (gamma.row(row + 1) - gamma.row(row - 1)).transpose() / (2.0 * h);
    const Vector res = dg + lin.nodes[i].L_x + lin.nodes[i].f_x.transpose() * g;
    rep.r_costate_ode = std::max(rep.r_costate_ode, res.cwiseAbs().maxCoeff());
  }

  Vector nu = Vector::Zero(term.x_f.size());
  double pi_gt = 0.0;
  double pi_c = 0.0;
  if (term.g_E.size()) {
    nu += term.g_E_x.transpose() * aset.pi_E;
    pi_gt += aset.pi_E.dot(term.g_E_t);
    pi_c += aset.pi_E.dot(term.g_E_x * term.f + term.g_E_t);
  }
  if (term.g_I.size()) {
    nu += term.g_I_x.transpose() * aset.pi_I;
    pi_gt += aset.pi_I.dot(term.g_I_t);
    pi_c += aset.pi_I.dot(term.g_I_x * term.f + term.g_I_t);
  }
  const bool free_tf = def.terminal_time_mode == TerminalTimeMode::Free;
  const NodeData& last = lin.nodes.back();
  const Vector gamma_f = gamma.row(static_cast<Eigen::Index>(N - 1)).transpose();
  if (free_tf) {
    rep.r_tf = std::abs(term.hamiltonian + pi_c);
    rep.r_transversality_time = std::abs(last.L + gamma_f.dot(term.f) + last.phi_t + pi_gt);
  }
  rep.r_transversality_state = (gamma_f - term.phi_x - nu).cwiseAbs().maxCoeff();

  if (term.g_I.size())
    for (Eigen::Index i = 0; i < term.g_I.size(); ++i)
      rep.complementary_slackness =
          std::max(rep.complementary_slackness, std::abs(aset.pi_I[i] * term.g_I[i]));

  // Stationary multiplier cross-check with K = I and the k_tf weighting dropped.
  const Eigen::Index qE = term.g_E.size();
  const Eigen::Index rows = qE + static_cast<Eigen::Index>(aset.working_set.size());
  rep.pi_stationary = Vector::Zero(rows);
  if (rows > 0) {
    const Eigen::Index n = term.x_f.size();
    Matrix G(rows, n);
    Vector gt(rows);
    Vector pi_flow(rows);
    if (qE) {
      G.topRows(qE) = term.g_E_x;
      gt.head(qE) = term.g_E_t;
      pi_flow.head(qE) = aset.pi_E;
    }
    for (std::size_t k = 0; k < aset.working_set.size(); ++k) {
      const auto row = qE + static_cast<Eigen::Index>(k);
      const int idx = aset.working_set[k];
      G.row(row) = term.g_I_x.row(idx);
      gt[row] = term.g_I_t[idx];
      pi_flow[row] = aset.pi_I[idx];
    }
    const Matrix p_u = compute_pu(lin, table);
    const Vector wq = lin.grid.weights();
    Matrix S = Matrix::Zero(n, n);
    Vector v = Vector::Zero(n);
    for (std::size_t i = 0; i < N; ++i) {
      const Matrix B = table.psi[i] * lin.nodes[i].f_u;
      const double wi = wq[static_cast<Eigen::Index>(i)];
      S.noalias() += wi * B * B.transpose();
      v.noalias() += wi * B * p_u.row(static_cast<Eigen::Index>(i)).transpose();
    }
    const Vector c = G * term.f + gt;
    const Eigen::Index blocks = free_tf ? 2 : 1;
    Matrix A(blocks * rows, rows);
    Vector b(blocks * rows);
    A.topRows(rows) = G * S * G.transpose();
    b.head(rows) = -(G * v);
    if (free_tf) {
      A.bottomRows(rows) = c * c.transpose();
      b.tail(rows) = -(c * term.hamiltonian);
    }
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    rep.pi_stationary = svd.solve(b);
    rep.stationary_lsq_residual = (A * rep.pi_stationary - b).norm();
    rep.r_stationary_pi = (rep.pi_stationary - pi_flow).cwiseAbs().maxCoeff();
  }
  return rep;
}

ResidualReport optimality_residuals(const OcpDefinition& def, const TrajectoryState& traj,
                                    const TransitionTable& table, const ActiveSetState& aset) {
  table.require_current(traj);
  return optimality_residuals(def, linearize(def, traj), table, aset);
}

VerificationResult verify_trajectory(const OcpDefinition& def, const TrajectoryState& traj,
                                     const GainConfig& gains, const EvolutionOptions& options) {
  def.validate();
  gains.validate(def);
  const Linearization lin = linearize(def, traj);
  const TransitionTable table = transition_table(lin);
  const Matrix p_u = compute_pu(lin, table);
  VerificationResult out;
  out.active_set = working_set_loop(def, lin, table, p_u, gains, options.barrier);
  out.report = optimality_residuals(def, lin, table, out.active_set);
  return out;
}

std::string to_string(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::PEEC: return "PEEC";
    case ConstraintClass::PseudoPEEC: return "pseudo-PEEC";
    case ConstraintClass::NEEC: return "NEEC";
  }
  return "unknown";
}

ConstraintClass classify_constraint(double pi, double tol) {
  if (!std::isfinite(pi)) throw DomainError("classify_constraint: non-finite multiplier");
  if (!(tol >= 0.0)) throw DomainError("classify_constraint: tolerance must be non-negative");
  if (pi > tol) return ConstraintClass::PEEC;
  if (pi < -tol) return ConstraintClass::NEEC;
  return ConstraintClass::PseudoPEEC;
}

CycloidSolution cycloid_oracle(double x_target, double drop, double g) {
  if (!(x_target > 0.0) || !(drop > 0.0) || !(g > 0.0))
    throw DomainError("cycloid_oracle: x_target, drop and g must be positive");
  const double ratio = x_target / drop;
  // theta - sin(theta) and 1 - cos(theta) in cancellation-free form
  auto F = [](double th) {
    const double th2 = th * th;
    const double num = th < 1e-2 ? th * th2 / 6.0 * (1.0 - th2 / 20.0 * (1.0 - th2 / 42.0))
                                 : th - std::sin(th);
    const double s = std::sin(0.5 * th);
    return num / (2.0 * s * s);
  };
  double lo = 1e-8;
  double hi = 2.0 * std::numbers::pi - 1e-8;
  if (!(F(lo) < ratio && F(hi) > ratio))
    throw DomainError("cycloid_oracle: no bracket for the given geometry");
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (F(mid) < ratio ? lo : hi) = mid;
  }
  CycloidSolution s;
  s.theta_f = 0.5 * (lo + hi);
  s.radius = drop / (1.0 - std::cos(s.theta_f));
  s.t_f = s.theta_f * std::sqrt(s.radius / g);
  return s;
}

LqOptimum lq_oracle(double T, double position, std::optional<double> velocity) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("lq_oracle: horizon must be positive");
  if (!std::isfinite(position) || (velocity && !std::isfinite(*velocity)))
    throw DomainError("lq_oracle: non-finite target");
  LqOptimum o;
  o.T = T;
  if (!velocity) {
    // Free terminal velocity: the velocity costate vanishes at T, so u(T) = 0.
    o.c0 = 3.0 * position / (T * T);
    o.c1 = -o.c0 / T;
  } else {
    // c0 T + c1 T^2/2 = V,  c0 T^2/2 + c1 T^3/6 = P.
    const double V = *velocity;
    const double P = position;
    o.c1 = 12.0 * (V * T / 2.0 - P) / (T * T * T);
    o.c0 = (V - o.c1 * T * T / 2.0) / T;
  }
  o.J = 0.5 * (o.c0 * o.c0 * T + o.c0 * o.c1 * T * T + o.c1 * o.c1 * T * T * T / 3.0);
  return o;
}

}  // namespace vemoc
