#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "linkdrift/rng.hpp"
#include "linkdrift/topology.hpp"

namespace linkdrift {

enum class TransmissionType : std::uint8_t { CityToCity = 0, CityToDc = 1, DcToCity = 2, DcToDc = 3 };

const char* to_string(TransmissionType type);

struct TrafficModelConfig {
  int steps = 6400;
  /// Mean total offered load in Tbps. Zero means "calibrate before use".
  double total_load_tbps = 10.0;
  int period = 24;
  double amplitude_fraction = 0.3;
  std::uint64_t seed = 1;
  /// Share of the total load carried by each transmission type, indexed by
  /// TransmissionType. Renormalized over the types present in the topology.
  std::array<double, 4> type_share{0.40, 0.15, 0.35, 0.10};
  /// Per-type period multipliers (period_i = period * multiplier).
  std::array<double, 4> period_scale{1.0, 1.0, 1.0, 1.0};
  /// Uniform per-flow phase jitter (radians) around the per-type phase.
  double phase_jitter = 0.5;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

/// One sine process. For anycast types `client` is the requesting city and
/// the DC end is resolved at use time; otherwise src/dst are fixed.
struct TrafficFlow {
  TransmissionType type = TransmissionType::CityToCity;
  NodeId src = 0;
  NodeId dst = 0;
  double base_gbps = 0.0;
  double angular = 0.0;  // 2*pi / period_i
  double phase = 0.0;
  double amplitude_fraction = 0.0;

  bool anycast() const noexcept {
    return type == TransmissionType::CityToDc || type == TransmissionType::DcToCity;
  }
  NodeId client() const noexcept { return type == TransmissionType::CityToDc ? src : dst; }
  double value(int step) const;
};

using NodePair = std::pair<NodeId, NodeId>;

struct TrafficSeries {
  std::string entity;
  std::vector<double> values;  // Gbps per time step
};

using AnycastMap = std::map<NodeId, NodeId>;

/// The full set of sine processes with the global scale already applied.
class TrafficModel {
 public:
  TrafficModel(const Topology& topology, const TrafficModelConfig& cfg);

  const TrafficModelConfig& config() const noexcept { return cfg_; }
  const std::vector<TrafficFlow>& flows() const noexcept { return flows_; }

  /// Offered Gbps per ordered node pair at `step`, as a dense
  /// node_count x node_count row-major matrix, anycast resolved through `dc_of`.
  void pair_targets(int step, const AnycastMap& dc_of, std::vector<double>& out) const;

  /// Sum of all flows at `step` (independent of anycast resolution).
  double total_offered(int step) const;

 private:
  TrafficModelConfig cfg_;
  std::size_t node_count_;
  std::vector<TrafficFlow> flows_;
};

/// Per-pair series with anycast resolved on the intact topology.
std::map<NodePair, TrafficSeries> generate_pair_series(const Topology& t, const TrafficModelConfig& cfg);

/// Closest working DC for every non-DC node.
AnycastMap anycast_resolve(const Topology& t, const LinkSet& failed = {});

struct Demand {
  std::uint64_t id = 0;
  NodeId s = 0;
  NodeId t = 0;
  double gbps = 0.0;
  int holding = 0;
  int arrival = 0;
};

inline constexpr double kMaxDemandGbps = 250.0;
inline constexpr double kDemandGranularityGbps = 5.0;
inline constexpr int kMaxHoldingSteps = 30;

/// Splits the gap between `target` and `carried` into new demands. Empty when
/// the pair already carries at least its target. Ids are taken from `next_id`.
std::vector<Demand> demands_for_step(NodePair pair, double target, double carried, Rng& rng,
                                     int step, std::uint64_t& next_id);

/// CSV with columns pair_src,pair_dst,step,gbps (node keys).
void write_pair_series_csv(std::ostream& out, const Topology& t,
                           const std::map<NodePair, TrafficSeries>& series);

}  // namespace linkdrift
