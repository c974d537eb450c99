#pragma once

// Scenario configs (flat key=value text), batch runs of the analytic
// pipeline with optional oracles, and run-to-run comparison.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nechannel/channel_engine.hpp"
#include "nechannel/grid_oracle.hpp"

namespace nechannel {

struct OracleFlags {
  bool event_driven = true;  ///< reference trajectory from the event loop (else recursions)
  int monte_carlo = 0;       ///< samples; 0 disables
  bool grid = false;
};

struct ScenarioConfig {
  ScenarioParams params;
  bool auto_schedule = true;
  std::vector<double> instants;  ///< explicit schedule, sorted
  OracleFlags oracles;
  GridSpec grid;
  Cutoff grid_cutoff = Cutoff::sine;
  double grid_t_max = -1.0;  ///< grid rows only for t <= grid_t_max (negative: all)
  std::uint64_t seed = 0;
  std::string output = "out";
  std::vector<std::string> formats{"csv", "json"};
  /// Keys as given, for the manifest echo.
  std::map<std::string, std::string> echo;
};

/// Documented keys in the order the manifest lists them.
const std::vector<std::string>& config_keys();

/// Throws ConfigError on unknown keys, malformed values or invalid parameters.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// `--oracles` syntax: comma list of event_driven, monte_carlo:N, grid.
OracleFlags parse_oracles(const std::string& list);

/// Resolution gates and parameter invariants; throws ConfigError.
void validate_config(const ScenarioConfig& cfg);

/// Fixed column order of series.csv.
std::vector<std::string> series_columns(const ScenarioConfig& cfg);

struct SkippedInstant {
  double t;
  double safe_before;
  double safe_after;
};

struct RunResult {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<SkippedInstant> skipped;
  int n_max = 0;
  double validity_figure = 0.0;
};

/// Report instants: t = 0, midpoints between consecutive reference events
/// and one instant after the final event.
std::vector<double> auto_schedule(const ScenarioConfig& cfg);

/// Computes the time series. Explicit instants that are mixed-phase throw
/// MixedPhaseError; auto instants that fail the gate are skipped.
RunResult run_scenario(const ScenarioConfig& cfg, const std::string& snapshot_dir = "");

/// Writes series.csv / series.json / manifest.json (+ snapshots/) to dir.
void write_run(const ScenarioConfig& cfg, const RunResult& result, const std::string& dir,
               double wall_clock_seconds);

std::string format_csv(const RunResult& result);

struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

/// Reads series.csv from a run directory or a csv path.
SeriesTable read_series(const std::string& path);

struct ColumnDeviation {
  std::string column;  ///< "name" or "name_a:name_b"
  double max_abs = 0.0;
  double max_rel = 0.0;
};

/// Column pairs: plain names compare equal columns, "a:b" compares column a
/// of the first table with column b of the second. Empty list: all shared
/// columns. Throws std::invalid_argument when the t columns disagree.
std::vector<ColumnDeviation> compare_series(const SeriesTable& a, const SeriesTable& b,
                                            const std::vector<std::string>& pairs);

}  // namespace nechannel
