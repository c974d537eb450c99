// nechannel: run scenario configs, compare runs, validate configs.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nechannel/errors.hpp"
#include "nechannel/scenario.hpp"

using namespace nechannel;

namespace {

std::map<std::string, double> parse_thresholds(const std::vector<std::string>& items, const char* flag) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.rfind('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError(flag, "expected COL=VAL, got '" + item + "'");
    }
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& seed,
            const std::string& oracles) {
  ScenarioConfig cfg = load_config(config_path);
  if (!seed.empty()) {
    const long long s = std::stoll(seed);
    if (s < 0) throw ConfigError("seed: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.echo["seed"] = seed;
  }
  if (!oracles.empty()) {
    cfg.oracles = parse_oracles(oracles);
    cfg.echo["oracles"] = oracles;
  }
  if (!out_dir.empty()) cfg.output = out_dir;
  validate_config(cfg);

  const auto start = std::chrono::steady_clock::now();
  const RunResult res = run_scenario(cfg, cfg.oracles.grid ? cfg.output + "/snapshots" : "");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_run(cfg, res, cfg.output, secs);

  std::printf("wrote %zu rows to %s (n_max = %d)\n", res.rows.size(), cfg.output.c_str(), res.n_max);
  for (const auto& s : res.skipped) {
    std::printf("skipped mixed-phase instant t=%.10g (safe at t<=%.10g or t>=%.10g)\n", s.t, s.safe_before,
                s.safe_after);
  }
  if (res.validity_figure < 1.0) {
    std::printf("warning: validity figure %.4g < 1, packets may not stay narrow\n", res.validity_figure);
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::vector<std::string>& tol,
                const std::vector<std::string>& rtol) {
  const auto abs_t = parse_thresholds(tol, "--tol");
  const auto rel_t = parse_thresholds(rtol, "--rtol");
  std::vector<std::string> pairs;
  for (const auto* m : {&abs_t, &rel_t})
    for (const auto& [k, v] : *m) pairs.push_back(k);
  const SeriesTable ta = read_series(a), tb = read_series(b);
  const auto devs = compare_series(ta, tb, pairs.empty() ? std::vector<std::string>{} : pairs);

  bool ok = true;
  std::printf("%-28s %14s %14s  %s\n", "column", "max_abs", "max_rel", "status");
  std::map<std::string, bool> seen;
  for (const auto& d : devs) {
    if (seen[d.column]) continue;
    seen[d.column] = true;
    std::string status = "-";
    if (abs_t.count(d.column)) {
      const bool pass = d.max_abs <= abs_t.at(d.column);
      status = pass ? "ok" : "FAIL";
      ok = ok && pass;
    }
    if (rel_t.count(d.column)) {
      const bool pass = d.max_rel <= rel_t.at(d.column);
      status = (status == "FAIL" || !pass) ? "FAIL" : "ok";
      ok = ok && pass;
    }
    std::printf("%-28s %14.6e %14.6e  %s\n", d.column.c_str(), d.max_abs, d.max_rel, status.c_str());
  }
  return ok ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
  const ScenarioConfig cfg = load_config(config_path);
  std::printf("ok: epsilon = %.6g, n_max = %d, validity figure = %.4g%s\n", cfg.params.epsilon(),
              max_collisions(cfg.params.epsilon()), cfg.params.validity_figure(),
              cfg.params.validity_figure() < 1.0 ? " (warning: < 1)" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-packet hard-core collisions: channel analysis and oracles"};
  app.require_subcommand(1);

  std::string config, out_dir, seed, oracles;
  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config, "Scenario config (key=value)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides `output`)");
  run->add_option("--seed", seed, "Monte Carlo seed (overrides `seed`)");
  run->add_option("--oracles", oracles, "Oracle list, e.g. event_driven,monte_carlo:10000,grid");

  std::string a, b;
  std::vector<std::string> tol, rtol;
  auto* cmp = app.add_subcommand("compare", "Compare two runs column by column");
  cmp->add_option("a", a, "Run directory or series.csv")->required();
  cmp->add_option("b", b, "Run directory or series.csv")->required();
  cmp->add_option("--tol", tol, "Absolute threshold COL=VAL (COL may be colA:colB)");
  cmp->add_option("--rtol", rtol, "Relative threshold COL=VAL");

  std::string vconfig;
  auto* val = app.add_subcommand("validate", "Check a config without running it");
  val->add_option("config", vconfig, "Scenario config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out_dir, seed, oracles);
    if (*cmp) return cmd_compare(a, b, tol, rtol);
    if (*val) return cmd_validate(vconfig);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const MixedPhaseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
