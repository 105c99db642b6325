#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "linkdrift/forecast_common.hpp"
#include "linkdrift/metrics.hpp"
#include "linkdrift/simulator.hpp"
#include "linkdrift/topology.hpp"
#include "linkdrift/traffic.hpp"

namespace linkdrift {

struct FailureSpec {
  std::string failed;     // link key, e.g. "FRA-MUC"
  std::string inspected;  // link key
  int step = 6100;
};

struct ArtifactConfig {
  bool pair_series = false;
  bool event_log = true;
  bool link_loads = true;
  bool predictions = true;
  bool checkpoints = true;
};

struct CalibrationConfig {
  double floor_tbps = 1.0;
  double ceiling_tbps = 64.0;
  int iterations = 10;
  int pilot_steps = 600;
  int pilot_failure_step = 400;
  int pilot_seeds = 3;
  /// Multiplier applied to the largest feasible load found.
  double headroom = 0.9;
  void validate() const;
};

struct SuiteConfig {
  int scenarios = 10;
  int highly = 5;
  /// Minimum pre-failure mean load for a link to be inspected.
  double min_inspected_gbps = 100.0;
  /// Minimum relative change for a moderately impacted pick.
  double min_moderate_change = 0.2;
  /// Candidate failed links tried before giving up (0 = all links).
  int search_budget = 0;
  void validate() const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::filesystem::path topology;
  std::size_t dc_count = 7;
  std::vector<std::string> dc_nodes;
  TrafficModelConfig traffic;
  SimConfig sim;
  std::optional<FailureSpec> failure;
  ForecasterConfig forecaster;
  std::vector<int> incremental_windows{5, 20};
  std::vector<TConvConfig> tconv{{10.0, 5}, {15.0, 5}};
  int horizon = 50;
  int tconv_horizon = 150;
  double eps_gbps = kDefaultEpsGbps;
  std::uint64_t seed = 1;
  ArtifactConfig artifacts;
  CalibrationConfig calibration;
  SuiteConfig suite;

  /// Sub-seeds derived from `seed`.
  std::uint64_t traffic_seed() const;
  std::uint64_t demand_seed() const;
  std::uint64_t model_seed() const;

  /// Traffic config with steps and seed filled in.
  TrafficModelConfig traffic_config() const;

  /// Checks everything that does not need the topology; with `require_failure`
  /// also the failure block.
  void validate(bool require_failure = true) const;
};

/// Parses the JSON config document. Unknown keys are rejected. Relative
/// topology paths resolve against `base_dir`.
ScenarioConfig parse_scenario_config(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
std::string scenario_config_to_json(const ScenarioConfig& cfg);

/// Default location of the bundled topology (build tree or install tree).
std::filesystem::path default_topology_path();

Topology load_scenario_topology(const ScenarioConfig& cfg);

}  // namespace linkdrift
