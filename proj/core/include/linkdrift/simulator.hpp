#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "linkdrift/spectrum.hpp"
#include "linkdrift/topology.hpp"
#include "linkdrift/traffic.hpp"

namespace linkdrift {

enum class EventKind : std::uint8_t {
  Allocated,
  Rejected,
  Expired,
  FailedAffected,
  Restored,
  RestorationRejected,
};

const char* to_string(EventKind kind);

struct SimEvent {
  int step = 0;
  EventKind kind = EventKind::Allocated;
  std::uint64_t demand = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double gbps = 0.0;
  /// Path links for Allocated / Restored; empty otherwise.
  std::vector<LinkId> path;
};

struct SimConfig {
  int slices = 320;
  std::size_t k_paths = 10;
};

struct SimCounters {
  std::size_t allocated = 0;
  std::size_t rejected = 0;
  std::size_t expired = 0;
  std::size_t failed_affected = 0;
  std::size_t restored = 0;
  std::size_t restoration_rejected = 0;
  /// Rejections of new arrivals strictly before the first failure.
  std::size_t rejected_before_failure = 0;
};

/// State of the dynamic flex-grid network. Value type: copying it forks the
/// simulation, which scenario search uses to branch at the failure step.
class NetworkState {
 public:
  NetworkState(std::shared_ptr<const Topology> topology, SimConfig cfg);

  const Topology& topology() const noexcept { return *topology_; }
  const SimConfig& config() const noexcept { return cfg_; }
  const SpectrumGrid& grid() const noexcept { return grid_; }
  const std::map<std::uint64_t, Lightpath>& active() const noexcept { return active_; }
  const LinkSet& failed_links() const noexcept { return failed_; }
  const AnycastMap& anycast() const noexcept { return anycast_; }
  const SimCounters& counters() const noexcept { return counters_; }
  const std::vector<SimEvent>& events() const noexcept { return events_; }
  bool keep_event_log() const noexcept { return keep_log_; }
  void set_keep_event_log(bool keep) { keep_log_ = keep; }

  /// Releases demands whose expiry is `step`, then allocates `arrivals` in
  /// order. Returns the events of this call.
  std::vector<SimEvent> advance_step(int step, const std::vector<Demand>& arrivals);

  /// Marks `link` failed, tears down every lightpath using it and re-allocates
  /// the affected demands (largest bitrate first) with their original expiry.
  std::vector<SimEvent> inject_failure(int step, LinkId link);

  /// Carried Gbps per link right now.
  std::vector<double> link_loads() const;

  /// Sum of live demand bitrate per ordered pair (row-major n x n).
  const std::vector<double>& carried() const noexcept { return carried_; }

  /// Empty when every RSA invariant holds; otherwise one message per violation.
  std::vector<std::string> check_invariants() const;

 private:
  void record(std::vector<SimEvent>& out, SimEvent e);
  void allocate(const Lightpath& lp);
  void release(const Lightpath& lp);

  std::shared_ptr<const Topology> topology_;
  SimConfig cfg_;
  SpectrumGrid grid_;
  std::shared_ptr<PathCache> paths_;
  std::map<std::uint64_t, Lightpath> active_;
  std::multimap<int, std::uint64_t> by_expiry_;
  LinkSet failed_;
  AnycastMap anycast_;
  std::vector<double> carried_;
  SimCounters counters_;
  std::vector<SimEvent> events_;
  bool keep_log_ = true;
  std::optional<int> first_failure_step_;
};

/// Drives a NetworkState from a traffic model: per step, computes pair targets,
/// draws demands per pair from independent seeded streams, and advances.
class Simulation {
 public:
  Simulation(std::shared_ptr<const Topology> topology, std::shared_ptr<const TrafficModel> traffic,
             SimConfig cfg, std::uint64_t demand_seed);

  /// Runs one step; `fail` (if set) is injected at the start of the step.
  void step(std::optional<LinkId> fail = std::nullopt);
  void run_until(int end_step, std::optional<std::pair<int, LinkId>> failure = std::nullopt);

  int next_step() const noexcept { return next_step_; }
  const NetworkState& state() const noexcept { return state_; }
  NetworkState& state() noexcept { return state_; }
  /// Per-link carried Gbps at the end of each simulated step.
  const std::vector<std::vector<double>>& link_history() const noexcept { return history_; }
  /// Set when invariants should be checked after every step; violations collected.
  void set_check_invariants(bool on) { check_ = on; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::shared_ptr<const Topology> topology_;
  std::shared_ptr<const TrafficModel> traffic_;
  NetworkState state_;
  std::vector<Rng> pair_rng_;
  std::uint64_t next_id_ = 0;
  int next_step_ = 0;
  std::vector<double> targets_;
  std::vector<std::vector<double>> history_;  // [link][step]
  bool check_ = false;
  std::vector<std::string> violations_;
};

/// Replays an event log: value at step = sum of bitrate of demands whose
/// active lightpath uses `link` at the end of that step.
TrafficSeries link_load_series(const std::vector<SimEvent>& events, const Topology& t, LinkId link,
                               int horizon);

/// All links at once, [link][step].
std::vector<std::vector<double>> replay_link_loads(const std::vector<SimEvent>& events,
                                                   std::size_t link_count, int horizon);

/// CSV: step,kind,demand,src,dst,gbps,path (path as '|'-joined link keys).
void write_event_log_csv(std::ostream& out, const Topology& t, const std::vector<SimEvent>& events);

/// CSV: link,step,gbps for the given links.
void write_link_loads_csv(std::ostream& out, const Topology& t,
                          const std::vector<std::vector<double>>& history,
                          const std::vector<LinkId>& links);

}  // namespace linkdrift
