#include "nechannel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nechannel/errors.hpp"

#ifndef NECHANNEL_VERSION
#define NECHANNEL_VERSION "0.0.0"
#endif

namespace nechannel {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kScheduleTolerance = 1e-9;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long k;
  try {
    k = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return k;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ClassicalTrajectory reference_trajectory(const ScenarioConfig& cfg) {
  const ReferenceSetup r = cfg.params.reference();
  if (cfg.oracles.event_driven) {
    return event_driven_trajectory(r.x_M0, r.y_M0, r.v_x0, r.masses, std::numeric_limits<double>::infinity());
  }
  return recursion_trajectory(r.x_M0, r.y_M0, r.v_x0, r.masses);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "x_M0",    "y_M0",   "sigma0x", "sigma0y", "p_x0",   "m_x",        "m_y",  "epsilon",
      "narrow_ratio_limit", "schedule", "oracles", "grid.n",  "grid.L", "grid.dt", "grid.t_max", "grid.cutoff",
      "seed",    "output", "formats"};
  return keys;
}

OracleFlags parse_oracles(const std::string& list) {
  OracleFlags f;
  f.event_driven = false;
  for (const std::string& item : split(list, ',')) {
    if (item == "event_driven") {
      f.event_driven = true;
    } else if (item == "grid") {
      f.grid = true;
    } else if (item.rfind("monte_carlo:", 0) == 0) {
      const long long n = to_integer("oracles", item.substr(12));
      if (n < 2) throw ConfigError("oracles: monte_carlo needs at least 2 samples");
      f.monte_carlo = static_cast<int>(n);
    } else if (item != "none") {
      throw ConfigError("oracles: unknown oracle '" + item + "' (event_driven, monte_carlo:N, grid)");
    }
  }
  return f;
}

ScenarioConfig parse_config(const std::string& text) {
  const std::set<std::string> known(config_keys().begin(), config_keys().end());
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known.count(key)) throw ConfigError(key + ": unknown key (line " + std::to_string(lineno) + ")");
    if (kv.count(key)) throw ConfigError(key + ": given twice");
    kv[key] = value;
  }

  ScenarioConfig cfg;
  cfg.echo = kv;
  const auto req = [&](const char* key) {
    if (!kv.count(key)) throw ConfigError(std::string(key) + ": required");
    return to_double(key, kv.at(key));
  };
  ScenarioParams& p = cfg.params;
  p.x_M0 = req("x_M0");
  p.y_M0 = req("y_M0");
  p.sigma0x = req("sigma0x");
  p.sigma0y = req("sigma0y");
  p.p_x0 = req("p_x0");
  const double m_x = kv.count("m_x") ? to_double("m_x", kv.at("m_x")) : 1.0;
  if (!(m_x > 0.0)) throw ConfigError("m_x: must be positive");
  if (kv.count("m_y") && kv.count("epsilon")) throw ConfigError("epsilon: give either m_y or epsilon, not both");
  if (kv.count("m_y")) {
    const double m_y = to_double("m_y", kv.at("m_y"));
    if (!(m_y > 0.0)) throw ConfigError("m_y: must be positive");
    p.masses = MassPair(m_x, m_y);
  } else if (kv.count("epsilon")) {
    const double eps = to_double("epsilon", kv.at("epsilon"));
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon: must lie in (0, 1)");
    p.masses = MassPair::from_epsilon(m_x, eps);
  } else {
    throw ConfigError("m_y: required (or epsilon)");
  }
  if (kv.count("narrow_ratio_limit")) p.narrow_ratio_limit = to_double("narrow_ratio_limit", kv.at("narrow_ratio_limit"));

  if (kv.count("schedule") && kv.at("schedule") != "auto") {
    cfg.auto_schedule = false;
    for (const std::string& item : split(kv.at("schedule"), ',')) cfg.instants.push_back(to_double("schedule", item));
    if (cfg.instants.empty()) throw ConfigError("schedule: empty list");
    for (std::size_t k = 0; k < cfg.instants.size(); ++k) {
      if (cfg.instants[k] < 0.0) throw ConfigError("schedule: instants must be non-negative");
      if (k > 0 && !(cfg.instants[k] > cfg.instants[k - 1])) {
        throw ConfigError("schedule: instants must be strictly increasing");
      }
    }
  }
  if (kv.count("oracles")) cfg.oracles = parse_oracles(kv.at("oracles"));
  if (kv.count("grid.n")) {
    const long long n = to_integer("grid.n", kv.at("grid.n"));
    if (n < 16 || n > 8192) throw ConfigError("grid.n: must lie in [16, 8192]");
    cfg.grid.n = static_cast<int>(n);
  }
  if (kv.count("grid.L")) cfg.grid.L = to_double("grid.L", kv.at("grid.L"));
  if (kv.count("grid.dt")) cfg.grid.dt = to_double("grid.dt", kv.at("grid.dt"));
  if (kv.count("grid.t_max")) cfg.grid_t_max = to_double("grid.t_max", kv.at("grid.t_max"));
  if (kv.count("grid.cutoff")) {
    const std::string& c = kv.at("grid.cutoff");
    if (c == "sine") {
      cfg.grid_cutoff = Cutoff::sine;
    } else if (c == "step") {
      cfg.grid_cutoff = Cutoff::step;
    } else {
      throw ConfigError("grid.cutoff: expected sine or step, got '" + c + "'");
    }
  }
  if (kv.count("seed")) {
    const long long s = to_integer("seed", kv.at("seed"));
    if (s < 0) throw ConfigError("seed: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (kv.count("output")) cfg.output = kv.at("output");
  if (kv.count("formats")) {
    cfg.formats = split(kv.at("formats"), ',');
    for (const std::string& f : cfg.formats) {
      if (f != "csv" && f != "json") throw ConfigError("formats: unknown format '" + f + "' (csv, json)");
    }
  }
  validate_config(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ScenarioConfig& cfg) {
  cfg.params.validate();
  if (cfg.oracles.grid) check_resolution(cfg.params, cfg.grid);
}

std::vector<std::string> series_columns(const ScenarioConfig& cfg) {
  std::vector<std::string> c{"t", "n", "x_M", "y_M", "v_x", "v_y", "dsigma_y_n", "dsigma_x_n", "abs_a_xy",
                             "purity", "schmidt_entropy"};
  if (cfg.oracles.grid) {
    c.push_back("purity_grid");
    c.push_back("overlap_grid");
  }
  c.push_back("validity_figure");
  if (cfg.oracles.monte_carlo > 0) {
    c.push_back("mc_dsigma_y");
    c.push_back("mc_dsigma_x");
  }
  return c;
}

std::vector<double> auto_schedule(const ScenarioConfig& cfg) {
  const ClassicalTrajectory tr = reference_trajectory(cfg);
  std::vector<double> out{0.0};
  double prev = 0.0;
  for (const CollisionEvent& e : tr.events) {
    if (e.t > prev) out.push_back(0.5 * (prev + e.t));
    prev = e.t;
  }
  if (!tr.events.empty()) {
    const double gap = tr.events.size() > 1 ? prev - tr.events[tr.events.size() - 2].t : prev;
    out.push_back(prev + 0.5 * gap);
  }
  return out;
}

RunResult run_scenario(const ScenarioConfig& cfg, const std::string& snapshot_dir) {
  validate_config(cfg);
  const ScenarioParams& params = cfg.params;
  const double eps = params.epsilon();
  RunResult res;
  res.columns = series_columns(cfg);
  res.n_max = max_collisions(eps);
  res.validity_figure = params.validity_figure();

  const ClassicalTrajectory ref = reference_trajectory(cfg);
  const ChannelEnsemble e0 = initial_ensemble(params);

  std::vector<double> instants;
  for (double t : cfg.auto_schedule ? auto_schedule(cfg) : cfg.instants) {
    if (mixed_phase_gate(e0, params, t)) {
      instants.push_back(t);
      continue;
    }
    try {
      (void)propagate_ensemble(e0, params, t);
    } catch (const MixedPhaseError& err) {
      if (!cfg.auto_schedule) throw;
      res.skipped.push_back({t, err.safe_before(), err.safe_after()});
    }
  }

  std::vector<EnsembleSpread> mc;
  if (cfg.oracles.monte_carlo > 0) {
    mc = monte_carlo_spread(params.reference(), e0.dsigma_y0, cfg.oracles.monte_carlo, cfg.seed, instants);
  }

  std::optional<GridField> field;
  if (cfg.oracles.grid) field = init_field(params, cfg.grid, cfg.grid_cutoff);
  if (cfg.oracles.grid && !snapshot_dir.empty()) fs::create_directories(snapshot_dir);

  for (std::size_t k = 0; k < instants.size(); ++k) {
    const double t = instants[k];
    const ClassicalState r = ref.state_at(t);
    const ChannelEnsemble e = propagate_ensemble(e0, params, t);
    const QuadraticFormState state = channel_superposition(e, params);
    const EntanglementReport rep = entanglement_report(state);
    std::vector<double> row{t,   static_cast<double>(r.n), r.x, r.y, r.v_x, r.v_y, e.dsigma_y_n,
                            e.dsigma_x_n(eps), std::abs(rep.a_xy), rep.purity, rep.schmidt_entropy};
    if (cfg.oracles.grid) {
      if (cfg.grid_t_max < 0.0 || t <= cfg.grid_t_max) {
        const double span = t - field->t;
        if (span > 0.0) {
          const int steps = static_cast<int>(std::ceil(span / cfg.grid.dt - 1e-9));
          GridSpec spec = cfg.grid;
          spec.dt = span / steps;
          evolve(*field, spec, steps);
        }
        row.push_back(schmidt_purity(*field));
        row.push_back(std::abs(overlap(*field, state)));
        if (!snapshot_dir.empty()) {
          char name[64];
          std::snprintf(name, sizeof name, "grid_%03zu", k);
          write_snapshot((fs::path(snapshot_dir) / (std::string(name) + ".bin")).string(), *field);
          write_marginals_csv((fs::path(snapshot_dir) / (std::string(name) + "_marginals.csv")).string(), *field);
        }
      } else {
        row.push_back(kNaN);
        row.push_back(kNaN);
      }
    }
    row.push_back(res.validity_figure);
    if (cfg.oracles.monte_carlo > 0) {
      row.push_back(mc[k].std_y);
      row.push_back(mc[k].std_x);
    }
    res.rows.push_back(std::move(row));
  }
  return res;
}

std::string format_csv(const RunResult& result) {
  std::string out;
  for (std::size_t c = 0; c < result.columns.size(); ++c) {
    out += (c ? "," : "") + result.columns[c];
  }
  out += '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += num(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_run(const ScenarioConfig& cfg, const RunResult& result, const std::string& dir,
               double wall_clock_seconds) {
  fs::create_directories(dir);
  const auto has = [&](const char* f) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end();
  };
  std::vector<std::string> files;
  if (has("csv")) {
    std::ofstream out(fs::path(dir) / "series.csv", std::ios::binary);
    out << format_csv(result);
    files.push_back("series.csv");
  }
  if (has("json")) {
    json rows = json::array();
    for (const auto& row : result.rows) {
      json r = json::array();
      for (double v : row) r.push_back(number_or_null(v));
      rows.push_back(r);
    }
    std::ofstream out(fs::path(dir) / "series.json", std::ios::binary);
    out << json{{"columns", result.columns}, {"rows", rows}}.dump(1) << '\n';
    files.push_back("series.json");
  }

  json skipped = json::array();
  for (const auto& s : result.skipped) {
    skipped.push_back({{"t", s.t}, {"safe_before", s.safe_before}, {"safe_after", number_or_null(s.safe_after)}});
  }
  json config = json::object();
  for (const auto& [k, v] : cfg.echo) config[k] = v;
  json manifest{
      {"tool", "nechannel"},
      {"version", NECHANNEL_VERSION},
      {"config", config},
      {"seed", cfg.seed},
      {"reference_trajectory", cfg.oracles.event_driven ? "event_driven" : "recursion"},
      {"oracles",
       {{"event_driven", cfg.oracles.event_driven}, {"monte_carlo", cfg.oracles.monte_carlo}, {"grid", cfg.oracles.grid}}},
      {"epsilon", cfg.params.epsilon()},
      {"n_max", result.n_max},
      {"validity_figure", result.validity_figure},
      {"validity_warning", result.validity_figure < 1.0},
      {"columns", result.columns},
      {"row_count", result.rows.size()},
      {"skipped_instants", skipped},
      {"files", files},
      {"wall_clock_seconds", wall_clock_seconds},
  };
  if (cfg.oracles.grid) {
    manifest["grid"] = {{"n", cfg.grid.n}, {"L", cfg.grid.L}, {"dt", cfg.grid.dt}, {"t_max", cfg.grid_t_max},
                        {"cutoff", cfg.grid_cutoff == Cutoff::sine ? "sine" : "step"}};
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  out << manifest.dump(1) << '\n';
}

std::optional<std::size_t> SeriesTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

SeriesTable read_series(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "series.csv";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("read_series: cannot open " + p.string());
  SeriesTable tab;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_series: empty file " + p.string());
  tab.columns = split(line, ',');
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const std::string& cell : split(line, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != tab.columns.size()) throw std::runtime_error("read_series: ragged row in " + p.string());
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

std::vector<ColumnDeviation> compare_series(const SeriesTable& a, const SeriesTable& b,
                                            const std::vector<std::string>& pairs) {
  const auto ta = a.column("t"), tb = b.column("t");
  if (!ta || !tb) throw std::invalid_argument("compare: both tables need a t column");
  if (a.rows.size() != b.rows.size()) {
    throw std::invalid_argument("compare: schedules differ (" + std::to_string(a.rows.size()) + " vs " +
                                std::to_string(b.rows.size()) + " rows)");
  }
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const double x = a.rows[r][*ta], y = b.rows[r][*tb];
    if (std::abs(x - y) > kScheduleTolerance * std::max(1.0, std::abs(x))) {
      throw std::invalid_argument("compare: schedules differ at row " + std::to_string(r) + " (t = " + num(x) +
                                  " vs " + num(y) + ")");
    }
  }
  std::vector<std::pair<std::string, std::string>> cols;
  if (pairs.empty()) {
    for (const auto& c : a.columns)
      if (b.column(c)) cols.emplace_back(c, c);
  } else {
    for (const auto& p : pairs) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) {
        cols.emplace_back(p, p);
      } else {
        cols.emplace_back(p.substr(0, colon), p.substr(colon + 1));
      }
    }
  }
  std::vector<ColumnDeviation> out;
  for (const auto& [ca, cb] : cols) {
    const auto ia = a.column(ca), ib = b.column(cb);
    if (!ia) throw std::invalid_argument("compare: first table has no column '" + ca + "'");
    if (!ib) throw std::invalid_argument("compare: second table has no column '" + cb + "'");
    ColumnDeviation d;
    d.column = ca == cb ? ca : ca + ":" + cb;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const double x = a.rows[r][*ia], y = b.rows[r][*ib];
      if (std::isnan(x) && std::isnan(y)) continue;
      const double diff = std::abs(x - y);
      if (std::isnan(diff)) {
        d.max_abs = d.max_rel = std::numeric_limits<double>::infinity();
        continue;
      }
      const double scale = std::max(std::abs(x), std::abs(y));
      d.max_abs = std::max(d.max_abs, diff);
      if (scale > 0.0) d.max_rel = std::max(d.max_rel, diff / scale);
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace nechannel
