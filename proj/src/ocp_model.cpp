#include "vemoc/ocp_model.hpp"

#include "vemoc/errors.hpp"
#include "vemoc/grid.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace vemoc {

namespace {

std::atomic<std::uint64_t> g_revision_counter{0};

std::uint64_t next_revision() { return ++g_revision_counter; }

std::string describe(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& value, const char* what) {
  for (Eigen::Index j = 0; j < value.cols(); ++j) {
    for (Eigen::Index i = 0; i < value.rows(); ++i) {
      if (!std::isfinite(value(i, j))) {
        std::ostringstream os;
        os << what << ": non-finite component (" << i << ", " << j << ")";
        throw EvaluationError(os.str());
      }
    }
  }
}

void check_scalar(double value, const char* what) {
  if (!std::isfinite(value)) throw EvaluationError(std::string(what) + ": non-finite value");
}

template <typename M>
M checked_shape(M value, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (value.rows() != rows || value.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", callback returned " << value.rows()
       << "x" << value.cols();
    throw DefinitionError(os.str());
  }
  check_finite(value, what);
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// OcpDefinition

void OcpDefinition::validate() const {
  if (n <= 0 || m <= 0) throw DefinitionError(name + ": n and m must be positive");
  if (q_E < 0 || q_I < 0) throw DefinitionError(name + ": negative constraint count");
  if (x0.size() != n) throw DefinitionError(name + ": x0 has wrong length");
  if (!callbacks.f || !callbacks.f_x || !callbacks.f_u)
    throw DefinitionError(name + ": dynamics callbacks f, f_x, f_u are mandatory");
  if (q_E > 0 && (!callbacks.g_E || !callbacks.g_E_x))
    throw DefinitionError(name + ": g_E and its x-partial are required when q_E > 0");
  if (q_I > 0 && (!callbacks.g_I || !callbacks.g_I_x))
    throw DefinitionError(name + ": g_I and its x-partial are required when q_I > 0");
  check_finite(x0, "x0");
}

void OcpDefinition::check_stage_args(const Vector& x, const Vector& u, const char* what) const {
  if (x.size() != n || u.size() != m) {
    std::ostringstream os;
    os << what << ": argument shapes (" << x.size() << ", " << u.size() << ") do not match (n, m) = ("
       << n << ", " << m << ")";
    throw DefinitionError(os.str());
  }
}

void OcpDefinition::check_point_args(const Vector& x, const char* what) const {
  if (x.size() != n) {
    std::ostringstream os;
    os << what << ": state argument has length " << x.size() << ", expected " << n;
    throw DefinitionError(os.str());
  }
}

Vector OcpDefinition::f(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "f");
  return checked_shape<Vector>(callbacks.f(x, u, t), n, 1, "f");
}

Matrix OcpDefinition::f_x(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "f_x");
  return checked_shape<Matrix>(callbacks.f_x(x, u, t), n, n, "f_x");
}

Matrix OcpDefinition::f_u(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "f_u");
  return checked_shape<Matrix>(callbacks.f_u(x, u, t), n, m, "f_u");
}

double OcpDefinition::L(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "L");
  if (!callbacks.L) return 0.0;
  double v = callbacks.L(x, u, t);
  check_scalar(v, "L");
  return v;
}

Vector OcpDefinition::L_x(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "L_x");
  if (!callbacks.L_x) return Vector::Zero(n);
  return checked_shape<Vector>(callbacks.L_x(x, u, t), n, 1, "L_x");
}

Vector OcpDefinition::L_u(const Vector& x, const Vector& u, double t) const {
  check_stage_args(x, u, "L_u");
  if (!callbacks.L_u) return Vector::Zero(m);
  return checked_shape<Vector>(callbacks.L_u(x, u, t), m, 1, "L_u");
}

double OcpDefinition::phi(const Vector& x, double t) const {
  check_point_args(x, "phi");
  if (!callbacks.phi) return 0.0;
  double v = callbacks.phi(x, t);
  check_scalar(v, "phi");
  return v;
}

Vector OcpDefinition::phi_x(const Vector& x, double t) const {
  check_point_args(x, "phi_x");
  if (!callbacks.phi_x) return Vector::Zero(n);
  return checked_shape<Vector>(callbacks.phi_x(x, t), n, 1, "phi_x");
}

double OcpDefinition::phi_t(const Vector& x, double t) const {
  check_point_args(x, "phi_t");
  if (!callbacks.phi_t) return 0.0;
  double v = callbacks.phi_t(x, t);
  check_scalar(v, "phi_t");
  return v;
}

Vector OcpDefinition::phi_tx(const Vector& x, double t) const {
  check_point_args(x, "phi_tx");
  if (!callbacks.phi_tx) return Vector::Zero(n);
  return checked_shape<Vector>(callbacks.phi_tx(x, t), n, 1, "phi_tx");
}

Matrix OcpDefinition::phi_xx(const Vector& x, double t) const {
  check_point_args(x, "phi_xx");
  if (!callbacks.phi_xx) return Matrix::Zero(n, n);
  return checked_shape<Matrix>(callbacks.phi_xx(x, t), n, n, "phi_xx");
}

Vector OcpDefinition::g_E(const Vector& x, double t) const {
  check_point_args(x, "g_E");
  if (q_E == 0) return Vector(0);
  return checked_shape<Vector>(callbacks.g_E(x, t), q_E, 1, "g_E");
}

Matrix OcpDefinition::g_E_x(const Vector& x, double t) const {
  check_point_args(x, "g_E_x");
  if (q_E == 0) return Matrix(0, n);
  return checked_shape<Matrix>(callbacks.g_E_x(x, t), q_E, n, "g_E_x");
}

Vector OcpDefinition::g_E_t(const Vector& x, double t) const {
  check_point_args(x, "g_E_t");
  if (q_E == 0) return Vector(0);
  if (!callbacks.g_E_t) return Vector::Zero(q_E);
  return checked_shape<Vector>(callbacks.g_E_t(x, t), q_E, 1, "g_E_t");
}

Vector OcpDefinition::g_I(const Vector& x, double t) const {
  check_point_args(x, "g_I");
  if (q_I == 0) return Vector(0);
  return checked_shape<Vector>(callbacks.g_I(x, t), q_I, 1, "g_I");
}

Matrix OcpDefinition::g_I_x(const Vector& x, double t) const {
  check_point_args(x, "g_I_x");
  if (q_I == 0) return Matrix(0, n);
  return checked_shape<Matrix>(callbacks.g_I_x(x, t), q_I, n, "g_I_x");
}

Vector OcpDefinition::g_I_t(const Vector& x, double t) const {
  check_point_args(x, "g_I_t");
  if (q_I == 0) return Vector(0);
  if (!callbacks.g_I_t) return Vector::Zero(q_I);
  return checked_shape<Vector>(callbacks.g_I_t(x, t), q_I, 1, "g_I_t");
}

// ---------------------------------------------------------------------------
// TrajectoryState

TrajectoryState::TrajectoryState(Matrix x_nodes, Matrix u_nodes, double t_f)
    : x_(std::move(x_nodes)), u_(std::move(u_nodes)), tf_(t_f), revision_(next_revision()) {
  if (x_.rows() != u_.rows()) throw DefinitionError("trajectory: x and u node counts differ");
}

void TrajectoryState::assign(Matrix x_nodes, Matrix u_nodes, double t_f) {
  *this = TrajectoryState(std::move(x_nodes), std::move(u_nodes), t_f);
}

double TrajectoryState::time_at(Eigen::Index i, double t0) const {
  const double sigma = static_cast<double>(i) / static_cast<double>(nodes() - 1);
  return t0 + sigma * (tf_ - t0);
}

Vector TrajectoryState::to_stacked() const {
  Vector out(stacked_size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < x_.rows(); ++i)
    for (Eigen::Index j = 0; j < x_.cols(); ++j) out[k++] = x_(i, j);
  for (Eigen::Index i = 0; i < u_.rows(); ++i)
    for (Eigen::Index j = 0; j < u_.cols(); ++j) out[k++] = u_(i, j);
  out[k] = tf_;
  return out;
}

TrajectoryState TrajectoryState::from_stacked(const Vector& stacked, Eigen::Index nodes,
                                              Eigen::Index n, Eigen::Index m) {
  if (stacked.size() != nodes * (n + m) + 1)
    throw DefinitionError("stacked vector has wrong length");
  Matrix x(nodes, n);
  Matrix u(nodes, m);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < nodes; ++i)
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = stacked[k++];
  for (Eigen::Index i = 0; i < nodes; ++i)
    for (Eigen::Index j = 0; j < m; ++j) u(i, j) = stacked[k++];
  return TrajectoryState(std::move(x), std::move(u), stacked[k]);
}

void TrajectoryState::check_valid(const OcpDefinition& def) const {
  if (nodes() < 2) throw DomainError("trajectory needs at least two nodes");
  if (x_.cols() != def.n || u_.cols() != def.m)
    throw DomainError("trajectory dimensions do not match the problem");
  if (!x_.allFinite() || !u_.allFinite() || !std::isfinite(tf_))
    throw DomainError("trajectory contains non-finite values");
  if (!(tf_ > def.t0)) throw DomainError("terminal time must exceed t0");
  for (Eigen::Index j = 0; j < def.n; ++j) {
    if (x_(0, j) != def.x0[j])
      throw DomainError("x_nodes[0] differs from x0 at component " + std::to_string(j));
  }
}

// ---------------------------------------------------------------------------

Vector evaluate_dynamics(const OcpDefinition& def, const Vector& x, const Vector& u, double t) {
  return def.f(x, u, t);
}

double lagrange_integrand(const OcpDefinition& def, const Vector& x, const Vector& u, double t) {
  return def.phi_t(x, t) + def.phi_x(x, t).dot(def.f(x, u, t)) + def.L(x, u, t);
}

double performance_index(const OcpDefinition& def, const TrajectoryState& traj) {
  traj.check_valid(def);
  const TimeGrid grid = TimeGrid::of(traj, def.t0);
  Matrix running(grid.N, 1);
  for (Eigen::Index i = 0; i < grid.N; ++i) {
    running(i, 0) = def.L(traj.x_nodes().row(i).transpose(), traj.u_nodes().row(i).transpose(),
                          grid.time(i));
  }
  const Vector xf = traj.x_nodes().row(grid.N - 1).transpose();
  const double J = def.phi(xf, traj.t_f()) + quadrature(running, grid)[0];
  if (!std::isfinite(J)) throw EvaluationError("performance index is non-finite");
  return J;
}

// ---------------------------------------------------------------------------
// Derivative audit

namespace {

struct AuditAccumulator {
  AuditReport report;

  AuditEntry& entry(const std::string& name) {
    for (auto& e : report.entries)
      if (e.partial == name) return e;
    report.entries.push_back({name, 0.0, true});
    return report.entries.back();
  }

  void compare(const std::string& name, const Matrix& analytic, const Matrix& numeric) {
    AuditEntry& e = entry(name);
    for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
      for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
        const double a = analytic(i, j);
        const double err = std::abs(a - numeric(i, j)) / std::max(1.0, std::abs(a));
        e.max_rel_error = std::max(e.max_rel_error, err);
      }
    }
  }
};

template <typename Fn>
Matrix central_difference(const Fn& fn, const Vector& at, double h, Eigen::Index out_dim) {
  Matrix jac(out_dim, at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    Vector plus = at;
    Vector minus = at;
    plus[k] += h;
    minus[k] -= h;
    jac.col(k) = (fn(plus) - fn(minus)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

AuditReport audit_derivatives(const OcpDefinition& def, int sample_count, double h,
                              std::uint64_t seed) {
  if (!(h > 0.0)) throw DomainError("audit step h must be positive");
  def.validate();
  const SampleBounds& b = def.bounds;
  if (b.x_lower.size() != def.n || b.x_upper.size() != def.n || b.u_lower.size() != def.m ||
      b.u_upper.size() != def.m)
    throw DefinitionError(def.name + ": sample bounds are not declared");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    return v;
  };

  AuditAccumulator acc;
  const auto n = def.n;
  for (int s = 0; s < sample_count; ++s) {
    const Vector x = draw(b.x_lower, b.x_upper);
    const Vector u = draw(b.u_lower, b.u_upper);
    const double t = b.t_lower + unit(rng) * (b.t_upper - b.t_lower);
    try {
      acc.compare("f_x", def.f_x(x, u, t),
                  central_difference([&](const Vector& xx) { return def.f(xx, u, t); }, x, h, n));
      acc.compare("f_u", def.f_u(x, u, t),
                  central_difference([&](const Vector& uu) { return def.f(x, uu, t); }, u, h, n));
      auto L_vec = [&](const Vector& xx, const Vector& uu) {
        Vector out(1);
        out[0] = def.L(xx, uu, t);
        return out;
      };
      acc.compare("L_x", def.L_x(x, u, t).transpose(),
                  central_difference([&](const Vector& xx) { return L_vec(xx, u); }, x, h, 1));
      acc.compare("L_u", def.L_u(x, u, t).transpose(),
                  central_difference([&](const Vector& uu) { return L_vec(x, uu); }, u, h, 1));

      auto phi_vec = [&](const Vector& xx, double tt) {
        Vector out(1);
        out[0] = def.phi(xx, tt);
        return out;
      };
      acc.compare("phi_x", def.phi_x(x, t).transpose(),
                  central_difference([&](const Vector& xx) { return phi_vec(xx, t); }, x, h, 1));
      Matrix phi_t_fd(1, 1);
      phi_t_fd(0, 0) = (def.phi(x, t + h) - def.phi(x, t - h)) / (2.0 * h);
      Matrix phi_t_an(1, 1);
      phi_t_an(0, 0) = def.phi_t(x, t);
      acc.compare("phi_t", phi_t_an, phi_t_fd);
      acc.compare("phi_tx", def.phi_tx(x, t),
                  (def.phi_x(x, t + h) - def.phi_x(x, t - h)) / (2.0 * h));
      acc.compare("phi_xx", def.phi_xx(x, t),
                  central_difference([&](const Vector& xx) { return def.phi_x(xx, t); }, x, h, n));

      if (def.q_E > 0) {
        acc.compare("g_E_x", def.g_E_x(x, t),
                    central_difference([&](const Vector& xx) { return def.g_E(xx, t); }, x, h,
                                       def.q_E));
        acc.compare("g_E_t", def.g_E_t(x, t),
                    (def.g_E(x, t + h) - def.g_E(x, t - h)) / (2.0 * h));
      }
      if (def.q_I > 0) {
        acc.compare("g_I_x", def.g_I_x(x, t),
                    central_difference([&](const Vector& xx) { return def.g_I(xx, t); }, x, h,
                                       def.q_I));
        acc.compare("g_I_t", def.g_I_t(x, t),
                    (def.g_I(x, t + h) - def.g_I(x, t - h)) / (2.0 * h));
      }
    } catch (const EvaluationError& e) {
      std::ostringstream os;
      os.precision(17);
      os << e.what() << " at x=" << describe(x) << " u=" << describe(u) << " t=" << t;
      acc.report.failures.push_back(os.str());
      acc.report.pass = false;
    }
  }

  for (auto& e : acc.report.entries) {
    e.pass = e.max_rel_error <= kAuditTolerance;
    if (!e.pass) {
      acc.report.pass = false;
      acc.report.failures.push_back(e.partial + ": max relative error " +
                                    std::to_string(e.max_rel_error));
    }
  }
  return acc.report;
}

// ---------------------------------------------------------------------------
// Built-in problems

namespace {

/// Brachistochrone dynamics x = (x, y, V), u = path angle from the vertical.
OcpCallbacks brachistochrone_callbacks() {
  OcpCallbacks cb;
  const double g = kBrachGravity;
  cb.f = [g](const Vector& x, const Vector& u, double) {
    Vector out(3);
    out << x[2] * std::sin(u[0]), -x[2] * std::cos(u[0]), g * std::cos(u[0]);
    return out;
  };
  cb.f_x = [](const Vector&, const Vector& u, double) {
    Matrix out = Matrix::Zero(3, 3);
    out(0, 2) = std::sin(u[0]);
    out(1, 2) = -std::cos(u[0]);
    return out;
  };
  cb.f_u = [g](const Vector& x, const Vector& u, double) {
    Matrix out(3, 1);
    out << x[2] * std::cos(u[0]), x[2] * std::sin(u[0]), -g * std::sin(u[0]);
    return out;
  };
  // J = t_f as a Mayer term.
  cb.phi = [](const Vector&, double t) { return t; };
  cb.phi_x = [](const Vector&, double) { return Vector::Zero(3).eval(); };
  cb.phi_t = [](const Vector&, double) { return 1.0; };
  cb.phi_tx = [](const Vector&, double) { return Vector::Zero(3).eval(); };
  cb.phi_xx = [](const Vector&, double) { return Matrix::Zero(3, 3).eval(); };
  // x(t_f) = 2
  cb.g_E = [](const Vector& x, double) {
    Vector out(1);
    out << x[0] - 2.0;
    return out;
  };
  cb.g_E_x = [](const Vector&, double) {
    Matrix out(1, 3);
    out << 1.0, 0.0, 0.0;
    return out;
  };
  cb.g_E_t = [](const Vector&, double) { return Vector::Zero(1).eval(); };
  return cb;
}

SampleBounds brachistochrone_bounds() {
  SampleBounds b;
  b.x_lower = Vector::Constant(3, -3.0);
  b.x_upper = Vector::Constant(3, 3.0);
  b.u_lower = Vector::Constant(1, -std::numbers::pi);
  b.u_upper = Vector::Constant(1, std::numbers::pi);
  b.t_lower = 0.1;
  b.t_upper = 2.0;
  return b;
}

/// Straight-line descent from rest at constant angle `angle`; position and
/// speed follow from constant acceleration g cos(angle).
TrajectoryState straight_line_guess(int nodes, double t_f, double angle) {
  const double g = kBrachGravity;
  const double accel = g * std::cos(angle);
  Matrix x(nodes, 3);
  Matrix u = Matrix::Constant(nodes, 1, angle);
  for (int i = 0; i < nodes; ++i) {
    const double t = t_f * static_cast<double>(i) / static_cast<double>(nodes - 1);
    const double V = accel * t;
    const double s = 0.5 * accel * t * t;
    x(i, 0) = s * std::sin(angle);
    x(i, 1) = -s * std::cos(angle);
    x(i, 2) = V;
  }
  return TrajectoryState(std::move(x), std::move(u), t_f);
}

BuiltinProblem make_brach_a(int nodes) {
  BuiltinProblem p;
  p.id = "brachA";
  OcpDefinition& d = p.definition;
  d.name = "brachA";
  d.n = 3;
  d.m = 1;
  d.q_E = 1;
  d.q_I = 1;
  d.t0 = 0.0;
  d.x0 = Vector::Zero(3);
  d.terminal_time_mode = TerminalTimeMode::Free;
  d.callbacks = brachistochrone_callbacks();
  // y(t_f) <= -2
  d.callbacks.g_I = [](const Vector& x, double) {
    Vector out(1);
    out << x[1] + 2.0;
    return out;
  };
  d.callbacks.g_I_x = [](const Vector&, double) {
    Matrix out(1, 3);
    out << 0.0, 1.0, 0.0;
    return out;
  };
  d.callbacks.g_I_t = [](const Vector&, double) { return Vector::Zero(1).eval(); };
  d.bounds = brachistochrone_bounds();
  const double t_f = std::sqrt(8.0 * std::sqrt(3.0) / 15.0);
  p.initial = straight_line_guess(nodes, t_f, std::numbers::pi / 6.0);
  p.gains = {0.1, 0.05, 0.1};
  return p;
}

BuiltinProblem make_brach_b(int nodes) {
  BuiltinProblem p;
  p.id = "brachB";
  OcpDefinition& d = p.definition;
  d.name = "brachB";
  d.n = 3;
  d.m = 1;
  d.q_E = 1;
  d.q_I = 2;
  d.t0 = 0.0;
  d.x0 = Vector::Zero(3);
  d.terminal_time_mode = TerminalTimeMode::Free;
  d.callbacks = brachistochrone_callbacks();
  // y(t_f) + 1 <= 0 and -y(t_f) - 1.3 <= 0
  d.callbacks.g_I = [](const Vector& x, double) {
    Vector out(2);
    out << x[1] + 1.0, -x[1] - 1.3;
    return out;
  };
  d.callbacks.g_I_x = [](const Vector&, double) {
    Matrix out(2, 3);
    out << 0.0, 1.0, 0.0, 0.0, -1.0, 0.0;
    return out;
  };
  d.callbacks.g_I_t = [](const Vector&, double) { return Vector::Zero(2).eval(); };
  d.bounds = brachistochrone_bounds();
  p.initial = straight_line_guess(nodes, 1.0, std::atan(2.0));
  p.gains = {0.1, 0.05, 0.1};
  return p;
}

/// Double integrator p'' = u from rest on [0, 1], J = int u^2 / 2,
/// p(1) = 1, velocity free, fixed terminal time.
BuiltinProblem make_lq(int nodes) {
  BuiltinProblem p;
  p.id = "lq";
  OcpDefinition& d = p.definition;
  d.name = "lq";
  d.n = 2;
  d.m = 1;
  d.q_E = 1;
  d.q_I = 0;
  d.t0 = 0.0;
  d.x0 = Vector::Zero(2);
  d.terminal_time_mode = TerminalTimeMode::Fixed;
  OcpCallbacks& cb = d.callbacks;
  cb.f = [](const Vector& x, const Vector& u, double) {
    Vector out(2);
    out << x[1], u[0];
    return out;
  };
  cb.f_x = [](const Vector&, const Vector&, double) {
    Matrix out(2, 2);
    out << 0.0, 1.0, 0.0, 0.0;
    return out;
  };
  cb.f_u = [](const Vector&, const Vector&, double) {
    Matrix out(2, 1);
    out << 0.0, 1.0;
    return out;
  };
  cb.L = [](const Vector&, const Vector& u, double) { return 0.5 * u[0] * u[0]; };
  cb.L_x = [](const Vector&, const Vector&, double) { return Vector::Zero(2).eval(); };
  cb.L_u = [](const Vector&, const Vector& u, double) { return Vector::Constant(1, u[0]).eval(); };
  cb.g_E = [](const Vector& x, double) {
    Vector out(1);
    out << x[0] - 1.0;
    return out;
  };
  cb.g_E_x = [](const Vector&, double) {
    Matrix out(1, 2);
    out << 1.0, 0.0;
    return out;
  };
  d.bounds.x_lower = Vector::Constant(2, -2.0);
  d.bounds.x_upper = Vector::Constant(2, 2.0);
  d.bounds.u_lower = Vector::Constant(1, -4.0);
  d.bounds.u_upper = Vector::Constant(1, 4.0);
  d.bounds.t_lower = 0.0;
  d.bounds.t_upper = 1.0;

  // u = 2 gives p = t^2, v = 2t: feasible.
  Matrix x(nodes, 2);
  Matrix u = Matrix::Constant(nodes, 1, 2.0);
  for (int i = 0; i < nodes; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(nodes - 1);
    x(i, 0) = t * t;
    x(i, 1) = 2.0 * t;
  }
  p.initial = TrajectoryState(std::move(x), std::move(u), 1.0);
  p.gains = {1.0, 0.0, 0.1};
  return p;
}

}  // namespace

BuiltinProblem builtin_problem(const std::string& id, int nodes) {
  if (nodes < 3) throw DomainError("grid needs at least 3 nodes");
  BuiltinProblem p;
  if (id == "brachA") {
    p = make_brach_a(nodes);
  } else if (id == "brachB") {
    p = make_brach_b(nodes);
  } else if (id == "lq") {
    p = make_lq(nodes);
  } else {
    throw DomainError("unknown problem id '" + id + "'");
  }
  p.definition.validate();
  return p;
}

std::vector<ProblemInfo> list_builtin_problems() {
  return {
      {"brachA", "Brachistochrone to x(tf)=2 with y(tf) <= -2, free tf"},
      {"brachB", "Brachistochrone to x(tf)=2 with -1.3 <= y(tf) <= -1, free tf"},
      {"lq", "Double integrator minimum energy, p(1)=1, fixed tf=1"},
  };
}

}  // namespace vemoc
