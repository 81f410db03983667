#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vemoc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class TerminalTimeMode { Free, Fixed };

/// Callbacks of an optimal control problem with Bolza cost
///   J = phi(x(tf), tf) + int_{t0}^{tf} L(x, u, t) dt,   xdot = f(x, u, t),
/// terminal equalities g_E(x_f, t_f) = 0 and inequalities g_I(x_f, t_f) <= 0.
///
/// `f`, `f_x` and `f_u` are mandatory. Every other callback may be left empty,
/// in which case it evaluates to zero of the declared shape. All callbacks must
/// be pure.
struct OcpCallbacks {
  using StageVector = std::function<Vector(const Vector& x, const Vector& u, double t)>;
  using StageMatrix = std::function<Matrix(const Vector& x, const Vector& u, double t)>;
  using StageScalar = std::function<double(const Vector& x, const Vector& u, double t)>;
  using PointScalar = std::function<double(const Vector& x, double t)>;
  using PointVector = std::function<Vector(const Vector& x, double t)>;
  using PointMatrix = std::function<Matrix(const Vector& x, double t)>;

  StageVector f;
  StageMatrix f_x;  // n x n
  StageMatrix f_u;  // n x m

  StageScalar L;
  StageVector L_x;  // n
  StageVector L_u;  // m

  // phi is evaluated along the trajectory as phi(x(t), t) by the Lagrange form
  // of the cost, so its partials are functions of a generic (x, t).
  PointScalar phi;
  PointVector phi_x;   // n
  PointScalar phi_t;
  PointVector phi_tx;  // n
  PointMatrix phi_xx;  // n x n

  PointVector g_E;    // q_E
  PointMatrix g_E_x;  // q_E x n
  PointVector g_E_t;  // q_E

  PointVector g_I;    // q_I
  PointMatrix g_I_x;  // q_I x n
  PointVector g_I_t;  // q_I
};

/// Box from which the derivative auditor draws sample points.
struct SampleBounds {
  Vector x_lower, x_upper;
  Vector u_lower, u_upper;
  double t_lower = 0.0;
  double t_upper = 1.0;
};

/// Problem definition with shape- and finiteness-checked evaluation.
class OcpDefinition {
 public:
  std::string name;
  int n = 0;
  int m = 0;
  int q_E = 0;
  int q_I = 0;
  double t0 = 0.0;
  Vector x0;
  TerminalTimeMode terminal_time_mode = TerminalTimeMode::Free;
  OcpCallbacks callbacks;
  SampleBounds bounds;

  /// Throws DefinitionError when dimensions or mandatory callbacks are missing.
  void validate() const;

  Vector f(const Vector& x, const Vector& u, double t) const;
  Matrix f_x(const Vector& x, const Vector& u, double t) const;
  Matrix f_u(const Vector& x, const Vector& u, double t) const;

  double L(const Vector& x, const Vector& u, double t) const;
  Vector L_x(const Vector& x, const Vector& u, double t) const;
  Vector L_u(const Vector& x, const Vector& u, double t) const;

  double phi(const Vector& x, double t) const;
  Vector phi_x(const Vector& x, double t) const;
  double phi_t(const Vector& x, double t) const;
  Vector phi_tx(const Vector& x, double t) const;
  Matrix phi_xx(const Vector& x, double t) const;

  Vector g_E(const Vector& x, double t) const;
  Matrix g_E_x(const Vector& x, double t) const;
  Vector g_E_t(const Vector& x, double t) const;

  Vector g_I(const Vector& x, double t) const;
  Matrix g_I_x(const Vector& x, double t) const;
  Vector g_I_t(const Vector& x, double t) const;

 private:
  void check_stage_args(const Vector& x, const Vector& u, const char* what) const;
  void check_point_args(const Vector& x, const char* what) const;
};

/// Grid values of the evolving unknown: state and control at N nodes of the
/// normalized grid sigma_i = i / (N - 1), plus the terminal time.
///
/// Every construction or mutation draws a fresh revision number; derived
/// tables record it so stale data can be detected.
class TrajectoryState {
 public:
  TrajectoryState() = default;
  TrajectoryState(Matrix x_nodes, Matrix u_nodes, double t_f);

  const Matrix& x_nodes() const { return x_; }
  const Matrix& u_nodes() const { return u_; }
  double t_f() const { return tf_; }
  Eigen::Index nodes() const { return x_.rows(); }
  Eigen::Index state_dim() const { return x_.cols(); }
  Eigen::Index control_dim() const { return u_.cols(); }
  std::uint64_t revision() const { return revision_; }

  void assign(Matrix x_nodes, Matrix u_nodes, double t_f);

  /// Physical time of node i.
  double time_at(Eigen::Index i, double t0) const;

  /// Stacked layout [x rows | u rows | t_f], node-major within each block.
  Eigen::Index stacked_size() const { return x_.size() + u_.size() + 1; }
  Vector to_stacked() const;
  static TrajectoryState from_stacked(const Vector& stacked, Eigen::Index nodes, Eigen::Index n,
                                      Eigen::Index m);

  /// Throws DomainError unless x_nodes[0] == x0 exactly, t_f > t0, shapes
  /// agree with `def` and everything is finite.
  void check_valid(const OcpDefinition& def) const;

 private:
  Matrix x_;
  Matrix u_;
  double tf_ = 0.0;
  std::uint64_t revision_ = 0;
};

/// f(x, u, t) with shape and finiteness checks.
Vector evaluate_dynamics(const OcpDefinition& def, const Vector& x, const Vector& u, double t);

/// Integrand of the Lagrange form of the cost: phi_t + phi_x^T f + L.
double lagrange_integrand(const OcpDefinition& def, const Vector& x, const Vector& u, double t);

/// J = phi(x_f, t_f) + trapezoidal quadrature of L over the grid.
double performance_index(const OcpDefinition& def, const TrajectoryState& traj);

struct AuditEntry {
  std::string partial;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  std::vector<std::string> failures;
  bool pass = true;
};

/// Compares every analytic partial against central differences of the value
/// callbacks at `sample_count` points drawn uniformly from `def.bounds`.
/// Relative error is |analytic - fd| / max(1, |analytic|); the audit passes
/// when all entries are within 1e-5.
AuditReport audit_derivatives(const OcpDefinition& def, int sample_count, double h,
                              std::uint64_t seed);

inline constexpr double kAuditTolerance = 1e-5;

/// Default gains recommended for a built-in problem.
struct RecommendedGains {
  double K = 0.1;
  double k_tf = 0.05;
  double k_g = 0.1;
};

struct BuiltinProblem {
  std::string id;
  OcpDefinition definition;
  TrajectoryState initial;
  RecommendedGains gains;
};

/// Known ids: "brachA", "brachB", "lq". Throws DomainError for others or N < 3.
BuiltinProblem builtin_problem(const std::string& id, int nodes);

struct ProblemInfo {
  std::string id;
  std::string description;
};
std::vector<ProblemInfo> list_builtin_problems();

inline constexpr double kBrachGravity = 10.0;

}  // namespace vemoc
