#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "linkdrift/metrics.hpp"
#include "linkdrift/simulator.hpp"

namespace linkdrift {

/// Everything a scenario run produces besides its bulky artifacts.
struct ScenarioResult {
  EvalReport report;
  std::string failed;
  std::string inspected;
  int failure_step = 0;
  double total_load_tbps = 0.0;
  std::uint64_t seed = 0;
  int horizon = 0;
  /// Held-out MAPE (%) on the stream between training and failure.
  std::map<std::string, double> warm_mape;
  /// Partial refits performed within post-failure indices [0, horizon).
  std::map<std::string, std::size_t> post_failure_refits;
  /// Final training MSE in scaled units.
  std::map<std::string, double> train_mse;
  /// Hash of the observation stream every forecaster consumed.
  std::string stream_hash;
  SimCounters counters;
};

std::string scenario_result_to_json(const ScenarioResult& r);
ScenarioResult scenario_result_from_json(const std::string& text);

/// Class-averaged curves: key (class, approach).
struct ClassCurves {
  std::size_t members = 0;
  CumulativeCurves curves;
};
std::map<std::pair<std::string, std::string>, ClassCurves> aggregate_class_curves(
    const std::vector<ScenarioResult>& results);

/// Rows th x approach, one column per scenario.
std::string tconv_table_csv(const std::vector<ScenarioResult>& results);
std::string aggregate_curves_csv(const std::vector<ScenarioResult>& results);

/// Writes curves.csv, tconv.csv and report.json into `dir`.
void write_scenario_report(const ScenarioResult& r, const std::filesystem::path& dir);

/// Writes <out>/<scenario>/{curves.csv,tconv.csv,report.json},
/// <out>/aggregate_curves.csv and <out>/tconv_table.csv.
void emit_report(const std::vector<ScenarioResult>& results, const std::filesystem::path& out_dir);

/// Reads every <dir>/*/report.json, ordered by scenario directory name.
std::vector<ScenarioResult> load_results(const std::filesystem::path& dir);

}  // namespace linkdrift
