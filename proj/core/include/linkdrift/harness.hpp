#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linkdrift/ltc.hpp"
#include "linkdrift/mlp.hpp"
#include "linkdrift/report.hpp"
#include "linkdrift/scenario.hpp"
#include "linkdrift/simulator.hpp"

namespace linkdrift {

inline constexpr const char* kLtcApproach = "LNN";
std::string incremental_approach_name(int retrain_window);

// ---- calibration ----------------------------------------------------------

struct PilotOutcome {
  std::size_t rejected = 0;
  std::size_t rejected_before_failure = 0;
  std::size_t restoration_rejected = 0;
  std::optional<LinkId> failed_link;
  int steps_run = 0;
  bool clean() const noexcept { return rejected == 0 && restoration_rejected == 0; }
};

/// Simulates `steps` steps at `tbps` with the traffic and demand seeds of
/// `cfg`, failing the most loaded survivable link at `failure_step` (skipped
/// when no single link can fail without disconnecting the graph). With
/// `stop_on_block` the run ends at the first rejection.
PilotOutcome run_pilot(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg, double tbps,
                       int steps, int failure_step, bool stop_on_block);

/// Most loaded link whose loss keeps the graph strongly connected.
std::optional<LinkId> worst_case_link(const Topology& t, std::span<const double> loads);

struct CalibrationProbe {
  double tbps = 0.0;
  bool feasible = false;
};

struct CalibrationResult {
  double total_load_tbps = 0.0;
  double largest_feasible_tbps = 0.0;
  std::vector<CalibrationProbe> probes;
};

/// Bisects the mean total load over pilot runs (one per pilot seed) and
/// returns the largest blocking-free load found, scaled by the headroom.
CalibrationResult calibrate_load(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg);

/// Seed used by pilot `index` of a calibration.
std::uint64_t pilot_seed(std::uint64_t seed, int index);

// ---- pipeline stages ------------------------------------------------------

struct SimulationOutput {
  std::vector<std::vector<double>> link_history;  // [link][step]
  std::vector<SimEvent> events;
  SimCounters counters;
  std::vector<std::string> violations;
};

/// Full simulation with the configured failure.
SimulationOutput simulate_scenario(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg,
                                   bool keep_events, bool check_invariants = false);

struct TrainedModels {
  LtcModel ltc;
  IncrementalMlp mlp;  // shared initial fit of every incremental variant
  double ltc_mse = 0.0;
  double mlp_mse = 0.0;
};

TrainedModels train_models(std::span<const double> series, const ScenarioConfig& cfg);

struct StreamOutput {
  int first_step = 0;
  std::vector<std::string> approaches;
  std::vector<std::vector<double>> predictions;  // per approach, steps first_step..end
  std::vector<std::uint64_t> stream_hashes;      // per approach
  std::vector<std::size_t> post_failure_refits;  // per approach (0 for the LNN)
};

/// One-step-ahead streaming of all forecasters from train_steps to the end of
/// the series, always from true past observations.
StreamOutput stream_forecasts(std::span<const double> series, TrainedModels models, const ScenarioConfig& cfg);

ScenarioResult evaluate_stream(std::span<const double> series, const StreamOutput& stream, const ScenarioConfig& cfg);

/// End-to-end run. With `out_dir`, artifacts go to out_dir/<name>/.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {},
                            std::shared_ptr<const Topology> topology = nullptr);

// ---- scenario search ------------------------------------------------------

/// Candidate found by probing one failed link.
struct ScenarioCandidate {
  LinkId failed = 0;
  LinkId inspected = 0;
  ImpactResult impact;
};

/// Searches failed/inspected pairs on the configured seed until the suite
/// mix is met; throws Error when the budget runs out.
std::vector<ScenarioConfig> scenario_suite(std::shared_ptr<const Topology> topology, const ScenarioConfig& base);

/// Calibrates if needed, searches, runs every scenario and emits the report.
std::vector<ScenarioResult> run_suite(const ScenarioConfig& base, const std::filesystem::path& out_dir);

/// Reads one link's column from a link,step,gbps CSV.
std::vector<double> read_link_series_csv(const std::filesystem::path& path, const std::string& link_key);

}  // namespace linkdrift
