#pragma once

#include "vemoc/tau_integrator.hpp"
#include "vemoc/verify.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vemoc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kHistorySchema = "vemoc-history/1";
inline constexpr const char* kSnapshotSchema = "vemoc-snapshot/1";
inline constexpr const char* kResidualSchema = "vemoc-residuals/1";
inline constexpr const char* kManifestSchema = "vemoc-manifest/1";
inline constexpr const char* kOutputRootEnv = "VEMOC_OUTPUT_ROOT";

enum class OutputFormat { Csv, Json };

/// Fully resolved settings of one invocation. Unset gains fall back to the
/// problem's recommended values.
struct RunConfig {
  std::string problem = "brachA";
  int grid_points = 101;
  std::optional<Matrix> K;  // 1x1 means scalar times identity
  std::optional<double> k_tf;
  std::optional<Vector> k_g;  // size 1 is broadcast
  double tol_act = 1e-9;
  IntegratorConfig integrator;
  bool node_motion = true;
  bool barrier = true;
  std::optional<std::string> out;
  OutputFormat format = OutputFormat::Csv;
  std::uint64_t seed = 0;

  /// Applies one key of the flat key-value vocabulary (same names as the
  /// CLI flags without dashes). Throws SchemaError on unknown keys or
  /// unparsable values.
  void apply(const std::string& key, const std::string& value);

  GainConfig gains_for(const BuiltinProblem& problem) const;
  EvolutionOptions options() const { return {barrier, node_motion}; }
  std::filesystem::path output_dir() const;
};

/// Keys accepted by RunConfig::apply, in CLI order.
const std::vector<std::string>& config_keys();

/// Reads `key = value` lines; '#' starts a comment. Throws SchemaError.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// 17 significant digits, round-trips every double.
std::string format_double(double value);

/// Column names of the history table for the given constraint counts.
std::vector<std::string> history_columns(int q_E, int q_I);

void write_history_csv(std::ostream& os, const EvolutionHistory& history, int q_E, int q_I);
void write_history_json(std::ostream& os, const EvolutionHistory& history, int q_E, int q_I);

/// Snapshot table: one row per (tau, node) with columns tau,node,t,t_f,x1..xn,u1..um.
void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& snapshots, double t0);
void write_snapshots_json(std::ostream& os, const std::vector<Snapshot>& snapshots, double t0);

/// Parses either snapshot format (detected from the first non-space byte).
/// Throws SchemaError on any mismatch with (n, m) or inconsistent node data.
std::vector<Snapshot> read_snapshots(std::istream& is, int n, int m);
std::vector<Snapshot> read_snapshots(const std::filesystem::path& path, int n, int m);

/// Runs the solver and writes history, snapshots, residuals and manifest
/// into the output directory. Returns the process exit status.
int run_command(const RunConfig& config, std::ostream& log);

/// Recomputes residuals for a trajectory file. `tau` selects a snapshot
/// (default: last). Writes residuals.json into `out` when given.
int verify_command(const RunConfig& config, const std::filesystem::path& trajectory,
                   std::optional<double> tau, std::ostream& log);

int audit_command(const RunConfig& config, int samples, std::ostream& log);

int list_problems_command(std::ostream& log);

/// Command-line entry point used by the vemoc executable.
int cli_main(int argc, char** argv);

}  // namespace vemoc
