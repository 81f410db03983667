#include "vemoc/cli_io.hpp"

#include "vemoc/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace vemoc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw SchemaError(key + ": not a number: '" + text + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw SchemaError(key + ": not an integer: '" + text + "'");
  return v;
}

bool parse_switch(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "on") return true;
  if (t == "off") return false;
  throw SchemaError(key + ": expected on|off, got '" + text + "'");
}

Vector parse_vector(const std::string& key, const std::string& text) {
  const auto parts = split(text, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = parse_double(key, parts[i]);
  if (v.size() == 0) throw SchemaError(key + ": empty list");
  return v;
}

Matrix parse_matrix(const std::string& key, const std::string& text) {
  const auto rows = split(text, ';');
  std::vector<Vector> parsed;
  for (const auto& r : rows) parsed.push_back(parse_vector(key, r));
  const Eigen::Index cols = parsed.front().size();
  Matrix M(static_cast<Eigen::Index>(parsed.size()), cols);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != cols) throw SchemaError(key + ": ragged matrix");
    M.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
  }
  return M;
}

std::string format_vector(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::string format_matrix(const Matrix& M) {
  std::string s;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i) s += ';';
    s += format_vector(M.row(i).transpose());
  }
  return s;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Matrix& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(to_json(Vector(M.row(i).transpose())));
  return a;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "problem", "grid-points", "K",      "ktf",        "kg",             "tol-act",
      "rtol",    "atol",        "tau-final", "stop-residual", "node-motion", "barrier",
      "reproject", "snapshot-every", "out", "format", "seed"};
  return keys;
}

void RunConfig::apply(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "problem") {
    problem = value;
  } else if (key == "grid-points") {
    const long long v = parse_integer(key, value);
    if (v < 3 || v > 1'000'000) throw SchemaError("grid-points must be in [3, 1000000]");
    grid_points = static_cast<int>(v);
  } else if (key == "K") {
    K = parse_matrix(key, value);
  } else if (key == "ktf") {
    k_tf = parse_double(key, value);
  } else if (key == "kg") {
    k_g = parse_vector(key, value);
  } else if (key == "tol-act") {
    tol_act = parse_double(key, value);
  } else if (key == "rtol") {
    integrator.rtol = parse_double(key, value);
  } else if (key == "atol") {
    integrator.atol = parse_double(key, value);
  } else if (key == "tau-final") {
    integrator.tau_final = parse_double(key, value);
  } else if (key == "stop-residual") {
    if (value == "off")
      integrator.stop_residual.reset();
    else
      integrator.stop_residual = parse_double(key, value);
  } else if (key == "node-motion") {
    node_motion = parse_switch(key, value);
  } else if (key == "barrier") {
    barrier = parse_switch(key, value);
  } else if (key == "reproject") {
    if (value == "off") {
      integrator.reproject_every.reset();
    } else {
      const long long v = parse_integer(key, value);
      if (v <= 0) throw SchemaError("reproject must be off or a positive step count");
      integrator.reproject_every = static_cast<int>(v);
    }
  } else if (key == "snapshot-every") {
    integrator.snapshot_every = parse_double(key, value);
  } else if (key == "out") {
    out = value;
  } else if (key == "format") {
    if (value == "csv")
      format = OutputFormat::Csv;
    else if (value == "json")
      format = OutputFormat::Json;
    else
      throw SchemaError("format must be csv or json");
  } else if (key == "seed") {
    const long long v = parse_integer(key, value);
    if (v < 0) throw SchemaError("seed must be non-negative");
    seed = static_cast<std::uint64_t>(v);
  } else {
    throw SchemaError("unknown configuration key '" + key + "'");
  }
}

GainConfig RunConfig::gains_for(const BuiltinProblem& p) const {
  const OcpDefinition& def = p.definition;
  GainConfig g = GainConfig::uniform(def, p.gains.K, p.gains.k_tf, p.gains.k_g, tol_act);
  if (K) {
    if (K->rows() == 1 && K->cols() == 1)
      g.K = (*K)(0, 0) * Matrix::Identity(def.m, def.m);
    else
      g.K = *K;
  }
  if (k_tf) g.k_tf = *k_tf;
  if (k_g) {
    if (k_g->size() == 1)
      g.k_g = Vector::Constant(def.q_I, (*k_g)[0]);
    else
      g.k_g = *k_g;
  }
  g.validate(def);
  return g;
}

fs::path RunConfig::output_dir() const {
  if (out) return *out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root && *root ? root : "vemoc_out") / problem;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<std::string> history_columns(int q_E, int q_I) {
  std::vector<std::string> cols = {"tau", "J", "t_f", "r_u", "r_tf", "step", "M_cond", "working_mask"};
  for (int i = 1; i <= q_E; ++i) cols.push_back("pi_E_" + std::to_string(i));
  for (int i = 1; i <= q_I; ++i) cols.push_back("pi_I_" + std::to_string(i));
  for (int i = 1; i <= q_E; ++i) cols.push_back("g_E_" + std::to_string(i));
  for (int i = 1; i <= q_I; ++i) cols.push_back("g_I_" + std::to_string(i));
  return cols;
}

namespace {

std::vector<double> history_values(const HistoryRow& r) {
  std::vector<double> v = {r.tau, r.J, r.t_f, r.r_u, r.r_tf, r.step, r.M_cond};
  for (Eigen::Index i = 0; i < r.pi_E.size(); ++i) v.push_back(r.pi_E[i]);
  for (Eigen::Index i = 0; i < r.pi_I.size(); ++i) v.push_back(r.pi_I[i]);
  for (Eigen::Index i = 0; i < r.g_E.size(); ++i) v.push_back(r.g_E[i]);
  for (Eigen::Index i = 0; i < r.g_I.size(); ++i) v.push_back(r.g_I[i]);
  return v;
}

}  // namespace

void write_history_csv(std::ostream& os, const EvolutionHistory& history, int q_E, int q_I) {
  const auto cols = history_columns(q_E, q_I);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : history.rows) {
    const auto v = history_values(r);
    // working_mask sits after M_cond (index 7).
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i == 7) os << ',' << r.working_mask;
      os << (i ? "," : "") << format_double(v[i]);
    }
    if (v.size() == 7) os << ',' << r.working_mask;
    os << '\n';
  }
}

void write_history_json(std::ostream& os, const EvolutionHistory& history, int q_E, int q_I) {
  json doc;
  doc["schema"] = kHistorySchema;
  doc["columns"] = history_columns(q_E, q_I);
  json rows = json::array();
  for (const auto& r : history.rows) {
    const auto v = history_values(r);
    json row = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i == 7) row.push_back(r.working_mask);
      row.push_back(v[i]);
    }
    if (v.size() == 7) row.push_back(r.working_mask);
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  os << doc.dump(1) << '\n';
}

void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& snapshots, double t0) {
  if (snapshots.empty()) return;
  const auto n = snapshots.front().trajectory.state_dim();
  const auto m = snapshots.front().trajectory.control_dim();
  os << "tau,node,t,t_f";
  for (Eigen::Index j = 1; j <= n; ++j) os << ",x" << j;
  for (Eigen::Index j = 1; j <= m; ++j) os << ",u" << j;
  os << '\n';
  for (const auto& s : snapshots) {
    const TrajectoryState& tr = s.trajectory;
    for (Eigen::Index i = 0; i < tr.nodes(); ++i) {
      os << format_double(s.tau) << ',' << i << ',' << format_double(tr.time_at(i, t0)) << ','
         << format_double(tr.t_f());
      for (Eigen::Index j = 0; j < n; ++j) os << ',' << format_double(tr.x_nodes()(i, j));
      for (Eigen::Index j = 0; j < m; ++j) os << ',' << format_double(tr.u_nodes()(i, j));
      os << '\n';
    }
  }
}

void write_snapshots_json(std::ostream& os, const std::vector<Snapshot>& snapshots, double t0) {
  json doc;
  doc["schema"] = kSnapshotSchema;
  json list = json::array();
  for (const auto& s : snapshots) {
    const TrajectoryState& tr = s.trajectory;
    json t = json::array();
    for (Eigen::Index i = 0; i < tr.nodes(); ++i) t.push_back(tr.time_at(i, t0));
    list.push_back({{"tau", s.tau},
                    {"t_f", tr.t_f()},
                    {"t", std::move(t)},
                    {"x", to_json(tr.x_nodes())},
                    {"u", to_json(tr.u_nodes())}});
  }
  doc["snapshots"] = std::move(list);
  os << doc.dump(1) << '\n';
}

namespace {

Matrix matrix_from_json(const json& a, Eigen::Index cols, const char* what) {
  if (!a.is_array()) throw SchemaError(std::string(what) + " must be an array");
  Matrix M(static_cast<Eigen::Index>(a.size()), cols);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_array() || a[i].size() != static_cast<std::size_t>(cols))
      throw SchemaError(std::string(what) + ": row " + std::to_string(i) + " has wrong width");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const json& e = a[i][static_cast<std::size_t>(j)];
      if (!e.is_number()) throw SchemaError(std::string(what) + ": non-numeric entry");
      M(static_cast<Eigen::Index>(i), j) = e.get<double>();
    }
  }
  return M;
}

/// Every snapshot of one file shares the grid.
void require_uniform_nodes(const std::vector<Snapshot>& snaps, const char* what) {
  for (const auto& s : snaps)
    if (s.trajectory.nodes() != snaps.front().trajectory.nodes())
      throw SchemaError(std::string(what) + ": snapshots differ in node count");
}

std::vector<Snapshot> read_snapshots_json(std::istream& is, int n, int m) {
  std::vector<Snapshot> out;
  try {
    const json doc = json::parse(is);
    if (!doc.is_object() || doc.value("schema", "") != kSnapshotSchema)
      throw SchemaError(std::string("snapshot JSON: schema must be ") + kSnapshotSchema);
    for (const auto& s : doc.at("snapshots")) {
      if (!s.contains("tau") || !s.contains("t_f") || !s.contains("x") || !s.contains("u"))
        throw SchemaError("snapshot JSON: entry lacks tau, t_f, x or u");
      Matrix x = matrix_from_json(s["x"], n, "x");
      Matrix u = matrix_from_json(s["u"], m, "u");
      if (x.rows() != u.rows() || x.rows() < 3) throw SchemaError("snapshot JSON: node count mismatch");
      out.push_back({s["tau"].get<double>(), TrajectoryState(std::move(x), std::move(u), s["t_f"].get<double>())});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("snapshot JSON: ") + e.what());
  }
  if (out.empty()) throw SchemaError("snapshot JSON: no snapshots");
  require_uniform_nodes(out, "snapshot JSON");
  return out;
}

std::vector<Snapshot> read_snapshots_csv(std::istream& is, int n, int m) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("snapshot CSV: empty input");
  std::vector<std::string> expected = {"tau", "node", "t", "t_f"};
  for (int j = 1; j <= n; ++j) expected.push_back("x" + std::to_string(j));
  for (int j = 1; j <= m; ++j) expected.push_back("u" + std::to_string(j));
  if (split(trim(line), ',') != expected)
    throw SchemaError("snapshot CSV: header does not match tau,node,t,t_f,x1..x" +
                      std::to_string(n) + ",u1..u" + std::to_string(m));

  struct Group {
    double tau;
    double t_f;
    std::vector<Vector> x, u;
  };
  std::vector<Group> groups;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != expected.size())
      throw SchemaError("snapshot CSV line " + std::to_string(lineno) + ": wrong column count");
    const double tau = parse_double("tau", cells[0]);
    const long long node = parse_integer("node", cells[1]);
    const double t_f = parse_double("t_f", cells[3]);
    if (node == 0) groups.push_back({tau, t_f, {}, {}});
    if (groups.empty() || node != static_cast<long long>(groups.back().x.size()) ||
        groups.back().tau != tau || groups.back().t_f != t_f)
      throw SchemaError("snapshot CSV line " + std::to_string(lineno) +
                        ": nodes must run 0..N-1 with constant tau and t_f");
    Vector x(n), u(m);
    for (int j = 0; j < n; ++j) x[j] = parse_double("x", cells[4 + static_cast<std::size_t>(j)]);
    for (int j = 0; j < m; ++j) u[j] = parse_double("u", cells[4 + static_cast<std::size_t>(n + j)]);
    groups.back().x.push_back(std::move(x));
    groups.back().u.push_back(std::move(u));
  }
  std::vector<Snapshot> out;
  for (auto& g : groups) {
    const auto N = static_cast<Eigen::Index>(g.x.size());
    if (N < 3) throw SchemaError("snapshot CSV: a snapshot needs at least 3 nodes");
    Matrix x(N, n), u(N, m);
    for (Eigen::Index i = 0; i < N; ++i) {
      x.row(i) = g.x[static_cast<std::size_t>(i)].transpose();
      u.row(i) = g.u[static_cast<std::size_t>(i)].transpose();
    }
    out.push_back({g.tau, TrajectoryState(std::move(x), std::move(u), g.t_f)});
  }
  if (out.empty()) throw SchemaError("snapshot CSV: no rows");
  require_uniform_nodes(out, "snapshot CSV");
  return out;
}

}  // namespace

std::vector<Snapshot> read_snapshots(std::istream& is, int n, int m) {
  is >> std::ws;
  if (is.peek() == '{') return read_snapshots_json(is, n, m);
  return read_snapshots_csv(is, n, m);
}

std::vector<Snapshot> read_snapshots(const fs::path& path, int n, int m) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open trajectory file " + path.string());
  return read_snapshots(is, n, m);
}

namespace {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Exclusive ownership of an output directory for the lifetime of a command.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".vemoc.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw IoError("output directory " + dir.string() +
                    " is locked by another writer (remove .vemoc.lock if stale)");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  fn(os);
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

std::map<std::string, std::string> resolved_kv(const RunConfig& c, const GainConfig& g) {
  std::map<std::string, std::string> kv;
  kv["problem"] = c.problem;
  kv["grid-points"] = std::to_string(c.grid_points);
  kv["K"] = format_matrix(g.K);
  kv["ktf"] = format_double(g.k_tf);
  kv["kg"] = g.k_g.size() ? format_vector(g.k_g) : format_double(0.1);
  kv["tol-act"] = format_double(g.tol_act);
  kv["rtol"] = format_double(c.integrator.rtol);
  kv["atol"] = format_double(c.integrator.atol);
  kv["tau-final"] = format_double(c.integrator.tau_final);
  kv["stop-residual"] = c.integrator.stop_residual ? format_double(*c.integrator.stop_residual) : "off";
  kv["node-motion"] = c.node_motion ? "on" : "off";
  kv["barrier"] = c.barrier ? "on" : "off";
  kv["reproject"] = c.integrator.reproject_every ? std::to_string(*c.integrator.reproject_every) : "off";
  kv["snapshot-every"] = format_double(c.integrator.snapshot_every);
  kv["out"] = c.output_dir().string();
  kv["format"] = c.format == OutputFormat::Csv ? "csv" : "json";
  kv["seed"] = std::to_string(c.seed);
  return kv;
}

json residuals_json(const ResidualReport& r, const ActiveSetState& aset) {
  json j;
  j["schema"] = kResidualSchema;
  j["r_u"] = r.r_u;
  j["r_tf"] = r.r_tf;
  j["r_costate_ode"] = r.r_costate_ode;
  j["costate_scale"] = r.costate_scale;
  j["r_transversality_time"] = r.r_transversality_time;
  j["r_transversality_state"] = r.r_transversality_state;
  j["r_stationary_pi"] = r.r_stationary_pi;
  j["stationary_lsq_residual"] = r.stationary_lsq_residual;
  j["complementary_slackness"] = r.complementary_slackness;
  j["pi_stationary"] = to_json(r.pi_stationary);
  j["pi_E"] = to_json(aset.pi_E);
  j["pi_I"] = to_json(aset.pi_I);
  j["working_set"] = aset.working_set;
  j["active_set"] = aset.active;
  json cls = json::array();
  const double tol = 1e-8;
  for (Eigen::Index i = 0; i < aset.pi_E.size(); ++i)
    cls.push_back({{"constraint", "g_E_" + std::to_string(i + 1)},
                   {"class", to_string(classify_constraint(aset.pi_E[i], tol))}});
  for (int i : aset.working_set)
    cls.push_back({{"constraint", "g_I_" + std::to_string(i + 1)},
                   {"class", to_string(classify_constraint(aset.pi_I[i], tol))}});
  j["classification"] = std::move(cls);
  return j;
}

json events_json(const EvolutionHistory& h) {
  json a = json::array();
  for (const auto& e : h.events)
    a.push_back({{"tau", e.tau},
                 {"constraint", "g_I_" + std::to_string(e.constraint + 1)},
                 {"change", e.entered ? "entered" : "left"}});
  return a;
}

void write_outputs(const fs::path& dir, const RunConfig& config, const BuiltinProblem& problem,
                   const EvolutionHistory& history) {
  const int qE = problem.definition.q_E;
  const int qI = problem.definition.q_I;
  const double t0 = problem.definition.t0;
  if (config.format == OutputFormat::Csv) {
    write_file(dir / "history.csv", [&](std::ostream& os) { write_history_csv(os, history, qE, qI); });
    write_file(dir / "snapshots.csv",
               [&](std::ostream& os) { write_snapshots_csv(os, history.snapshots, t0); });
  } else {
    write_file(dir / "history.json", [&](std::ostream& os) { write_history_json(os, history, qE, qI); });
    write_file(dir / "snapshots.json",
               [&](std::ostream& os) { write_snapshots_json(os, history.snapshots, t0); });
  }
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& log) {
  BuiltinProblem problem;
  GainConfig gains;
  try {
    problem = builtin_problem(config.problem, config.grid_points);
    gains = config.gains_for(problem);
    config.integrator.validate();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }

  const fs::path dir = config.output_dir();
  try {
    DirectoryLock lock(dir);
    const OcpDefinition& def = problem.definition;
    json manifest;
    manifest["schema"] = kManifestSchema;
    manifest["version"] = kVersion;
    manifest["history_schema"] = kHistorySchema;
    manifest["snapshot_schema"] = kSnapshotSchema;
    manifest["history_columns"] = history_columns(def.q_E, def.q_I);
    manifest["config"] = resolved_kv(config, gains);

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    log << "vemoc " << kVersion << ": problem " << config.problem << ", N=" << config.grid_points
        << ", output " << dir.string() << '\n';

    EvolveResult result;
    try {
      result = evolve(def, problem.initial, gains, config.options(), config.integrator);
    } catch (const EvolveError& e) {
      write_outputs(dir, config, problem, e.history);
      manifest["status"] = "error";
      manifest["error"] = e.what();
      manifest["wall_seconds"] = elapsed();
      manifest["accepted_steps"] = e.history.accepted_steps;
      manifest["rejected_steps"] = e.history.rejected_steps;
      manifest["events"] = events_json(e.history);
      write_file(dir / "manifest.json", [&](std::ostream& os) { os << manifest.dump(1) << '\n'; });
      log << "error: " << e.what() << " (partial history written)\n";
      return 1;
    }

    for (const auto& w : result.warnings) log << "warning: " << w << '\n';
    write_outputs(dir, config, problem, result.history);
    const VerificationResult ver = verify_trajectory(def, result.trajectory, gains, config.options());
    const json residuals = residuals_json(ver.report, ver.active_set);
    write_file(dir / "residuals.json", [&](std::ostream& os) { os << residuals.dump(1) << '\n'; });

    const HistoryRow& last = result.history.rows.back();
    manifest["status"] = "ok";
    manifest["stop_reason"] = to_string(result.stop);
    manifest["wall_seconds"] = elapsed();
    manifest["accepted_steps"] = result.history.accepted_steps;
    manifest["rejected_steps"] = result.history.rejected_steps;
    manifest["rhs_evaluations"] = result.history.rhs_evaluations;
    manifest["warnings"] = result.warnings;
    manifest["events"] = events_json(result.history);
    manifest["final"] = {{"tau", last.tau},       {"t_f", last.t_f},     {"J", last.J},
                         {"pi_E", to_json(last.pi_E)}, {"pi_I", to_json(last.pi_I)},
                         {"g_E", to_json(last.g_E)},   {"g_I", to_json(last.g_I)},
                         {"r_u", last.r_u},       {"r_tf", last.r_tf}};
    manifest["residuals"] = residuals;
    write_file(dir / "manifest.json", [&](std::ostream& os) { os << manifest.dump(1) << '\n'; });

    log << "stop: " << to_string(result.stop) << " at tau=" << format_double(last.tau)
        << "  t_f=" << format_double(last.t_f) << "  J=" << format_double(last.J)
        << "  r_u=" << format_double(ver.report.r_u) << '\n';
    return 0;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int verify_command(const RunConfig& config, const fs::path& trajectory, std::optional<double> tau,
                   std::ostream& log) {
  try {
    const BuiltinProblem problem = builtin_problem(config.problem, config.grid_points);
    const OcpDefinition& def = problem.definition;
    const GainConfig gains = config.gains_for(problem);
    const auto snaps = read_snapshots(trajectory, def.n, def.m);
    const Snapshot* chosen = &snaps.back();
    if (tau) {
      chosen = nullptr;
      for (const auto& s : snaps)
        if (s.tau == *tau) chosen = &s;
      if (!chosen) throw SchemaError("no snapshot at tau=" + format_double(*tau));
    }
    try {
      chosen->trajectory.check_valid(def);
    } catch (const DomainError& e) {
      throw SchemaError(std::string("trajectory validation failed: ") + e.what());
    }
    const VerificationResult ver =
        verify_trajectory(def, chosen->trajectory, gains, config.options());
    json report = residuals_json(ver.report, ver.active_set);
    report["problem"] = config.problem;
    report["tau"] = chosen->tau;
    report["t_f"] = chosen->trajectory.t_f();
    report["source"] = trajectory.string();
    if (config.out) {
      const fs::path dir = *config.out;
      DirectoryLock lock(dir);
      write_file(dir / "verify.json", [&](std::ostream& os) { os << report.dump(1) << '\n'; });
    }
    log << "tau=" << format_double(chosen->tau) << " N=" << chosen->trajectory.nodes()
        << " r_u=" << format_double(ver.report.r_u) << " r_tf=" << format_double(ver.report.r_tf)
        << " r_costate_ode=" << format_double(ver.report.r_costate_ode)
        << " r_stationary_pi=" << format_double(ver.report.r_stationary_pi)
        << " complementary_slackness=" << format_double(ver.report.complementary_slackness) << '\n';
    return 0;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const SchemaError& e) {
    log << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int audit_command(const RunConfig& config, int samples, std::ostream& log) {
  try {
    const BuiltinProblem problem = builtin_problem(config.problem, config.grid_points);
    const AuditReport rep = audit_derivatives(problem.definition, samples, 1e-6, config.seed);
    json doc;
    doc["problem"] = config.problem;
    doc["seed"] = config.seed;
    doc["samples"] = samples;
    doc["tolerance"] = kAuditTolerance;
    doc["pass"] = rep.pass;
    json entries = json::array();
    for (const auto& e : rep.entries) {
      log << (e.pass ? "  ok    " : "  FAIL  ") << e.partial << "  max_rel_error="
          << format_double(e.max_rel_error) << '\n';
      entries.push_back({{"partial", e.partial}, {"max_rel_error", e.max_rel_error}, {"pass", e.pass}});
    }
    for (const auto& f : rep.failures) log << "  " << f << '\n';
    doc["entries"] = std::move(entries);
    doc["failures"] = rep.failures;
    if (config.out) {
      const fs::path dir = *config.out;
      DirectoryLock lock(dir);
      write_file(dir / "audit.json", [&](std::ostream& os) { os << doc.dump(1) << '\n'; });
    }
    log << "audit " << (rep.pass ? "passed" : "FAILED") << '\n';
    return rep.pass ? 0 : 1;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

int list_problems_command(std::ostream& log) {
  for (const auto& p : list_builtin_problems()) log << p.id << "\t" << p.description << '\n';
  return 0;
}

namespace {

/// Registers the shared configuration flags; every given value lands in `kv`.
void add_config_flags(CLI::App* app, std::map<std::string, std::string>& kv) {
  struct Flag {
    const char* key;
    const char* help;
  };
  static const Flag flags[] = {
      {"problem", "built-in problem id (see list-problems)"},
      {"grid-points", "number of time nodes N"},
      {"K", "control gain: scalar or matrix rows 'a,b;c,d'"},
      {"ktf", "terminal-time gain (0 for fixed t_f)"},
      {"kg", "barrier gain: scalar or comma list"},
      {"tol-act", "activation tolerance for inequality constraints"},
      {"rtol", "relative tolerance of the tau integrator"},
      {"atol", "absolute tolerance of the tau integrator"},
      {"tau-final", "virtual-time horizon"},
      {"stop-residual", "stop when r_u and r_tf fall below this (or off)"},
      {"node-motion", "on|off"},
      {"barrier", "on|off"},
      {"reproject", "off or re-integrate x every k accepted steps"},
      {"snapshot-every", "snapshot interval in tau (0 = default list)"},
      {"out", "output directory"},
      {"format", "csv|json"},
      {"seed", "sampling seed for the derivative audit"},
  };
  for (const auto& f : flags) {
    const std::string key = f.key;
    app->add_option_function<std::string>(
        "--" + key, [&kv, key](const std::string& v) { kv[key] = v; }, f.help);
  }
}

RunConfig build_config(const std::optional<std::string>& config_file,
                       const std::map<std::string, std::string>& base,
                       const std::map<std::string, std::string>& cli) {
  std::map<std::string, std::string> merged = base;
  if (config_file)
    for (const auto& [k, v] : read_config_file(*config_file)) merged[k] = v;
  for (const auto& [k, v] : cli) merged[k] = v;
  RunConfig config;
  // Apply in canonical order so the result does not depend on map order.
  for (const auto& key : config_keys()) {
    const auto it = merged.find(key);
    if (it != merged.end()) config.apply(key, it->second);
  }
  return config;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"vemoc: variation evolving solver for optimal control with terminal constraints"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::map<std::string, std::string> kv;
  std::string config_file;

  auto* run = app.add_subcommand("run", "evolve a built-in problem and write artifacts");
  add_config_flags(run, kv);
  run->add_option("--config", config_file, "flat key = value file; flags override it");

  auto* verify = app.add_subcommand("verify", "recompute optimality residuals of a trajectory");
  add_config_flags(verify, kv);
  verify->add_option("--config", config_file, "flat key = value file; flags override it");
  std::string trajectory;
  std::string run_dir;
  double tau = 0.0;
  verify->add_option("--trajectory", trajectory, "snapshot file (csv or json)");
  auto* run_dir_opt = verify->add_option("--run-dir", run_dir, "directory written by 'vemoc run'");
  auto* tau_opt = verify->add_option("--tau", tau, "select the snapshot at this tau (default: last)");

  auto* audit = app.add_subcommand("audit", "check analytic derivatives against finite differences");
  add_config_flags(audit, kv);
  audit->add_option("--config", config_file, "flat key = value file; flags override it");
  int samples = 50;
  audit->add_option("--samples", samples, "number of sample points")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-problems", "list built-in problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::optional<std::string> cfg =
      config_file.empty() ? std::nullopt : std::optional<std::string>(config_file);
  try {
    if (*list) return list_problems_command(std::cout);
    if (*run) return run_command(build_config(cfg, {}, kv), std::cout);
    if (*audit) return audit_command(build_config(cfg, {}, kv), samples, std::cout);
    if (*verify) {
      std::map<std::string, std::string> base;
      fs::path file = trajectory;
      if (*run_dir_opt) {
        const fs::path manifest_path = fs::path(run_dir) / "manifest.json";
        std::ifstream is(manifest_path);
        if (!is) throw SchemaError("cannot open " + manifest_path.string());
        json manifest;
        try {
          manifest = json::parse(is);
        } catch (const json::exception& e) {
          throw SchemaError(std::string("manifest: ") + e.what());
        }
        for (const auto& [k, v] : manifest.at("config").items()) base[k] = v.get<std::string>();
        base.erase("out");
        if (trajectory.empty())
          file = fs::path(run_dir) / (base["format"] == "json" ? "snapshots.json" : "snapshots.csv");
      }
      if (file.empty()) throw SchemaError("verify needs --trajectory or --run-dir");
      const std::optional<double> sel = *tau_opt ? std::optional<double>(tau) : std::nullopt;
      return verify_command(build_config(cfg, base, kv), file, sel, std::cout);
    }
  } catch (const SchemaError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace vemoc
