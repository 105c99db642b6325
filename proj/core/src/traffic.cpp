#include "linkdrift/traffic.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"

namespace linkdrift {

const char* to_string(TransmissionType type) {
  switch (type) {
    case TransmissionType::CityToCity: return "city_to_city";
    case TransmissionType::CityToDc: return "city_to_dc";
    case TransmissionType::DcToCity: return "dc_to_city";
    case TransmissionType::DcToDc: return "dc_to_dc";
  }
  return "unknown";
}

void TrafficModelConfig::validate() const {
  if (steps <= 0) throw ConfigError("traffic.steps must be positive");
  if (!(total_load_tbps > 0.0)) throw ConfigError("traffic.total_load_tbps must be positive");
  if (period < 2) throw ConfigError("traffic.period must be at least 2");
  if (!(amplitude_fraction >= 0.0 && amplitude_fraction < 1.0))
    throw ConfigError("traffic.amplitude_fraction must lie in [0, 1)");
  double share = 0.0;
  for (double s : type_share) {
    if (!(s >= 0.0)) throw ConfigError("traffic.type_share entries must be non-negative");
    share += s;
  }
  if (!(share > 0.0)) throw ConfigError("traffic.type_share must not be all zero");
  for (double p : period_scale)
    if (!(p * period >= 2.0)) throw ConfigError("traffic.period_scale yields a period below 2");
  if (!(phase_jitter >= 0.0)) throw ConfigError("traffic.phase_jitter must be non-negative");
}

double TrafficFlow::value(int step) const {
  return base_gbps * (1.0 + amplitude_fraction * std::sin(angular * step + phase));
}

TrafficModel::TrafficModel(const Topology& topology, const TrafficModelConfig& cfg)
    : cfg_(cfg), node_count_(topology.node_count()) {
  cfg_.validate();
  const auto& nodes = topology.nodes();
  const auto clients = topology.clients();
  const auto& dcs = topology.dc_nodes();

  Rng rng(derive_seed(cfg_.seed, 0x7452'4146'4649'43ULL));
  std::array<double, 4> type_phase{};
  for (double& p : type_phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Unscaled weights per type; each type is normalized to its share below.
  std::array<std::vector<TrafficFlow>, 4> by_type;
  auto add = [&](TransmissionType type, NodeId src, NodeId dst, double weight) {
    const auto ti = static_cast<std::size_t>(type);
    TrafficFlow f;
    f.type = type;
    f.src = src;
    f.dst = dst;
    f.base_gbps = weight;
    f.angular = 2.0 * std::numbers::pi / (cfg_.period * cfg_.period_scale[ti]);
    f.phase = type_phase[ti] + rng.uniform(-cfg_.phase_jitter, cfg_.phase_jitter);
    f.amplitude_fraction = cfg_.amplitude_fraction;
    by_type[ti].push_back(f);
  };
  for (NodeId s = 0; s < nodes.size(); ++s)
    for (NodeId d = 0; d < nodes.size(); ++d)
      if (s != d)
        add(TransmissionType::CityToCity, s, d, nodes[s].population_weight * nodes[d].population_weight);
  // Anycast endpoints are placeholders (the client at both ends) until resolved.
  for (NodeId c : clients) add(TransmissionType::CityToDc, c, c, nodes[c].population_weight);
  for (NodeId c : clients) add(TransmissionType::DcToCity, c, c, nodes[c].population_weight);
  for (NodeId a : dcs)
    for (NodeId b : dcs)
      if (a != b) add(TransmissionType::DcToDc, a, b, nodes[a].population_weight * nodes[b].population_weight);

  double active_share = 0.0;
  for (std::size_t ti = 0; ti < 4; ++ti)
    if (!by_type[ti].empty()) active_share += cfg_.type_share[ti];
  if (!(active_share > 0.0)) throw ConfigError("no transmission type with positive share is present");

  for (std::size_t ti = 0; ti < 4; ++ti) {
    double weight_sum = 0.0;
    for (const auto& f : by_type[ti]) weight_sum += f.base_gbps;
    const double type_gbps = cfg_.total_load_tbps * 1000.0 * cfg_.type_share[ti] / active_share;
    for (auto& f : by_type[ti]) {
      f.base_gbps = weight_sum > 0.0 ? type_gbps * f.base_gbps / weight_sum : 0.0;
      flows_.push_back(f);
    }
  }

  // The sines do not average to exactly zero over a finite horizon; rescale
  // so that the time-mean of the total offered load is B.
  double total = 0.0;
  for (int step = 0; step < cfg_.steps; ++step) total += total_offered(step);
  const double mean = total / cfg_.steps;
  const double scale = cfg_.total_load_tbps * 1000.0 / mean;
  for (auto& f : flows_) f.base_gbps *= scale;
}

double TrafficModel::total_offered(int step) const {
  double sum = 0.0;
  for (const auto& f : flows_) sum += f.value(step);
  return sum;
}

void TrafficModel::pair_targets(int step, const AnycastMap& dc_of, std::vector<double>& out) const {
  out.assign(node_count_ * node_count_, 0.0);
  for (const auto& f : flows_) {
    NodeId s = f.src;
    NodeId d = f.dst;
    if (f.type == TransmissionType::CityToDc) {
      d = dc_of.at(f.src);
    } else if (f.type == TransmissionType::DcToCity) {
      s = dc_of.at(f.dst);
    }
    if (s == d) continue;
    out[s * node_count_ + d] += f.value(step);
  }
}

std::map<NodePair, TrafficSeries> generate_pair_series(const Topology& t, const TrafficModelConfig& cfg) {
  const TrafficModel model(t, cfg);
  const auto dc_of = anycast_resolve(t);
  const std::size_t n = t.node_count();
  std::map<NodePair, TrafficSeries> series;
  std::vector<double> targets;
  for (int step = 0; step < cfg.steps; ++step) {
    model.pair_targets(step, dc_of, targets);
    for (NodeId s = 0; s < n; ++s) {
      for (NodeId d = 0; d < n; ++d) {
        if (s == d) continue;
        auto& entry = series[{s, d}];
        if (entry.values.empty()) {
          entry.entity = t.node(s).key + "->" + t.node(d).key;
          entry.values.reserve(static_cast<std::size_t>(cfg.steps));
        }
        entry.values.push_back(targets[s * n + d]);
      }
    }
  }
  return series;
}

AnycastMap anycast_resolve(const Topology& t, const LinkSet& failed) {
  AnycastMap out;
  for (NodeId c : t.clients()) out.emplace(c, nearest_dc(t, c, failed));
  return out;
}

std::vector<Demand> demands_for_step(NodePair pair, double target, double carried, Rng& rng,
                                     int step, std::uint64_t& next_id) {
  std::vector<Demand> out;
  if (target < 0.0 || carried < 0.0) throw PreconditionError("demands_for_step: negative bitrate");
  double remaining = target - carried;
  // Stopping below half a granule keeps the total within +-2.5 Gbps of the gap.
  while (remaining >= 0.5 * kDemandGranularityGbps) {
    const double hi = std::min(kMaxDemandGbps, remaining);
    const double draw = hi * rng.uniform_open_closed();
    double gbps = std::round(draw / kDemandGranularityGbps) * kDemandGranularityGbps;
    gbps = std::clamp(gbps, kDemandGranularityGbps, kMaxDemandGbps);
    Demand d;
    d.id = next_id++;
    d.s = pair.first;
    d.t = pair.second;
    d.gbps = gbps;
    d.holding = static_cast<int>(rng.uniform_int(1, kMaxHoldingSteps));
    d.arrival = step;
    out.push_back(d);
    remaining -= gbps;
  }
  return out;
}

void write_pair_series_csv(std::ostream& out, const Topology& t,
                           const std::map<NodePair, TrafficSeries>& series) {
  out << "pair_src,pair_dst,step,gbps\n";
  for (const auto& [pair, s] : series) {
    const auto& src = t.node(pair.first).key;
    const auto& dst = t.node(pair.second).key;
    for (std::size_t step = 0; step < s.values.size(); ++step)
      out << src << ',' << dst << ',' << step << ',' << format_double(s.values[step]) << '\n';
  }
}

}  // namespace linkdrift
