#include "linkdrift/simulator.hpp"

#include <algorithm>
#include <ostream>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"

namespace linkdrift {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Allocated: return "allocated";
    case EventKind::Rejected: return "rejected";
    case EventKind::Expired: return "expired";
    case EventKind::FailedAffected: return "failed_affected";
    case EventKind::Restored: return "restored";
    case EventKind::RestorationRejected: return "restoration_rejected";
  }
  return "unknown";
}

NetworkState::NetworkState(std::shared_ptr<const Topology> topology, SimConfig cfg)
    : topology_(std::move(topology)), cfg_(cfg), grid_(topology_->link_count(), cfg.slices),
      paths_(std::make_shared<PathCache>(*topology_, cfg.k_paths)),
      anycast_(anycast_resolve(*topology_)),
      carried_(topology_->node_count() * topology_->node_count(), 0.0) {
  if (cfg.k_paths == 0) throw ConfigError("k_paths must be at least 1");
}

void NetworkState::record(std::vector<SimEvent>& out, SimEvent e) {
  if (keep_log_) events_.push_back(e);
  out.push_back(std::move(e));
}

void NetworkState::allocate(const Lightpath& lp) {
  for (int first : lp.channel_starts)
    grid_.occupy(lp.path.links, first, kSlicesPerChannel, static_cast<std::int64_t>(lp.demand));
  by_expiry_.emplace(lp.expiry, lp.demand);
  carried_[lp.src * topology_->node_count() + lp.dst] += lp.gbps;
  active_.emplace(lp.demand, lp);
}

void NetworkState::release(const Lightpath& lp) {
  for (int first : lp.channel_starts)
    grid_.release(lp.path.links, first, kSlicesPerChannel, static_cast<std::int64_t>(lp.demand));
  auto range = by_expiry_.equal_range(lp.expiry);
  for (auto it = range.first; it != range.second; ++it) {
    if (it->second == lp.demand) {
      by_expiry_.erase(it);
      break;
    }
  }
  double& c = carried_[lp.src * topology_->node_count() + lp.dst];
  c = std::max(0.0, c - lp.gbps);
}

std::vector<SimEvent> NetworkState::advance_step(int step, const std::vector<Demand>& arrivals) {
  std::vector<SimEvent> out;
  std::vector<std::uint64_t> expiring;
  for (auto it = by_expiry_.begin(); it != by_expiry_.end() && it->first <= step; ++it)
    expiring.push_back(it->second);
  std::sort(expiring.begin(), expiring.end());
  for (std::uint64_t id : expiring) {
    const Lightpath lp = active_.at(id);
    release(lp);
    active_.erase(id);
    ++counters_.expired;
    record(out, {step, EventKind::Expired, id, lp.src, lp.dst, lp.gbps, {}});
  }

  for (const Demand& d : arrivals) {
    if (d.arrival != step) throw PreconditionError("advance_step: demand arrival differs from step");
    auto lp = select_lightpath(*topology_, grid_, d, *paths_);
    if (!lp) {
      ++counters_.rejected;
      if (!first_failure_step_) ++counters_.rejected_before_failure;
      record(out, {step, EventKind::Rejected, d.id, d.s, d.t, d.gbps, {}});
      continue;
    }
    allocate(*lp);
    ++counters_.allocated;
    record(out, {step, EventKind::Allocated, d.id, d.s, d.t, d.gbps, lp->path.links});
  }
  return out;
}

std::vector<SimEvent> NetworkState::inject_failure(int step, LinkId link) {
  if (link >= topology_->link_count()) throw PreconditionError("inject_failure: unknown link");
  if (failed_.count(link)) throw PreconditionError("inject_failure: link already failed");
  std::vector<SimEvent> out;
  failed_.insert(link);
  if (!first_failure_step_) first_failure_step_ = step;
  paths_ = std::make_shared<PathCache>(*topology_, cfg_.k_paths, failed_);

  std::vector<Lightpath> affected;
  for (const auto& [id, lp] : active_)
    if (std::find(lp.path.links.begin(), lp.path.links.end(), link) != lp.path.links.end())
      affected.push_back(lp);
  for (const auto& lp : affected) {
    release(lp);
    active_.erase(lp.demand);
    ++counters_.failed_affected;
    record(out, {step, EventKind::FailedAffected, lp.demand, lp.src, lp.dst, lp.gbps, {}});
  }
  std::stable_sort(affected.begin(), affected.end(), [](const Lightpath& a, const Lightpath& b) {
    return a.gbps != b.gbps ? a.gbps > b.gbps : a.demand < b.demand;
  });
  for (const auto& old : affected) {
    if (old.expiry <= step) {
      // Nothing left to serve; it would have been released this step anyway.
      ++counters_.expired;
      record(out, {step, EventKind::Expired, old.demand, old.src, old.dst, old.gbps, {}});
      continue;
    }
    Demand d;
    d.id = old.demand;
    d.s = old.src;
    d.t = old.dst;
    d.gbps = old.gbps;
    d.arrival = step;
    d.holding = old.expiry - step;
    auto lp = select_lightpath(*topology_, grid_, d, *paths_);
    if (!lp) {
      ++counters_.restoration_rejected;
      record(out, {step, EventKind::RestorationRejected, d.id, d.s, d.t, d.gbps, {}});
      continue;
    }
    allocate(*lp);
    ++counters_.restored;
    record(out, {step, EventKind::Restored, d.id, d.s, d.t, d.gbps, lp->path.links});
  }
  anycast_ = anycast_resolve(*topology_, failed_);
  return out;
}

std::vector<double> NetworkState::link_loads() const {
  std::vector<double> load(topology_->link_count(), 0.0);
  for (const auto& [id, lp] : active_)
    for (LinkId l : lp.path.links) load[l] += lp.gbps;
  return load;
}

std::vector<std::string> NetworkState::check_invariants() const {
  std::vector<std::string> issues;
  const int slices = grid_.slices();
  // Expected ownership reconstructed from the active lightpaths.
  std::vector<std::int64_t> expected(topology_->link_count() * static_cast<std::size_t>(slices), kFreeSlice);
  for (const auto& [id, lp] : active_) {
    const std::string tag = "demand " + std::to_string(id) + ": ";
    const auto& fmt = lp.format();
    if (static_cast<int>(lp.channel_starts.size()) != channels_needed(lp.gbps, fmt))
      issues.push_back(tag + "channel count does not match bitrate and modulation");
    if (lp.capacity_gbps() < lp.gbps) issues.push_back(tag + "capacity below demand bitrate");
    if (lp.regenerators != regenerators_needed(lp.path.length_km, fmt))
      issues.push_back(tag + "regenerator count inconsistent with reach");
    if (lp.path.length_km > (lp.regenerators + 1) * fmt.reach_km)
      issues.push_back(tag + "modulation reach exceeded");
    if (lp.path.links.empty()) {
      issues.push_back(tag + "empty path");
      continue;
    }
    // Path continuity and simplicity.
    const auto nodes = path_nodes(*topology_, lp.path);
    if (nodes.front() != lp.src || nodes.back() != lp.dst) issues.push_back(tag + "path endpoints mismatch");
    for (std::size_t i = 1; i < lp.path.links.size(); ++i)
      if (topology_->link(lp.path.links[i - 1]).dst != topology_->link(lp.path.links[i]).src)
        issues.push_back(tag + "path is not continuous");
    auto sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      issues.push_back(tag + "path repeats a node");
    for (LinkId l : lp.path.links)
      if (failed_.count(l)) issues.push_back(tag + "active path uses failed link " + topology_->link(l).key);
    for (int first : lp.channel_starts) {
      if (first < 0 || first + kSlicesPerChannel > slices) {
        issues.push_back(tag + "channel outside the grid");
        continue;
      }
      for (LinkId l : lp.path.links) {
        for (int s = first; s < first + kSlicesPerChannel; ++s) {
          auto& slot = expected[static_cast<std::size_t>(l) * static_cast<std::size_t>(slices) +
                                static_cast<std::size_t>(s)];
          if (slot != kFreeSlice) issues.push_back(tag + "slice double-booked");
          slot = static_cast<std::int64_t>(id);
        }
      }
    }
  }
  for (LinkId l = 0; l < topology_->link_count(); ++l)
    for (int s = 0; s < slices; ++s)
      if (grid_.owner(l, s) != expected[static_cast<std::size_t>(l) * static_cast<std::size_t>(slices) +
                                        static_cast<std::size_t>(s)]) {
        issues.push_back("grid ownership disagrees with active lightpaths on link " + topology_->link(l).key);
        s = slices;
      }
  return issues;
}

Simulation::Simulation(std::shared_ptr<const Topology> topology, std::shared_ptr<const TrafficModel> traffic,
                       SimConfig cfg, std::uint64_t demand_seed)
    : topology_(std::move(topology)), traffic_(std::move(traffic)), state_(topology_, cfg),
      history_(topology_->link_count()) {
  const std::size_t n = topology_->node_count();
  pair_rng_.reserve(n * n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t d = 0; d < n; ++d) pair_rng_.emplace_back(derive_seed(demand_seed, s + 1, d + 1));
}

void Simulation::step(std::optional<LinkId> fail) {
  const int step = next_step_;
  if (fail) state_.inject_failure(step, *fail);
  const std::size_t n = topology_->node_count();
  traffic_->pair_targets(step, state_.anycast(), targets_);
  // Carried bitrate excludes demands expiring at this step, which advance_step
  // releases before allocating the arrivals.
  std::vector<double> carried = state_.carried();
  for (const auto& [id, lp] : state_.active())
    if (lp.expiry <= step) carried[lp.src * n + lp.dst] -= lp.gbps;
  std::vector<Demand> arrivals;
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId d = 0; d < n; ++d) {
      if (s == d) continue;
      const std::size_t i = s * n + d;
      auto batch = demands_for_step({s, d}, targets_[i], std::max(0.0, carried[i]), pair_rng_[i], step, next_id_);
      arrivals.insert(arrivals.end(), batch.begin(), batch.end());
    }
  }
  state_.advance_step(step, arrivals);
  const auto loads = state_.link_loads();
  for (std::size_t l = 0; l < loads.size(); ++l) history_[l].push_back(loads[l]);
  if (check_) {
    for (auto& v : state_.check_invariants()) violations_.push_back("step " + std::to_string(step) + ": " + v);
  }
  ++next_step_;
}

void Simulation::run_until(int end_step, std::optional<std::pair<int, LinkId>> failure) {
  while (next_step_ < end_step) {
    std::optional<LinkId> fail;
    if (failure && failure->first == next_step_) fail = failure->second;
    step(fail);
  }
}

std::vector<std::vector<double>> replay_link_loads(const std::vector<SimEvent>& events,
                                                   std::size_t link_count, int horizon) {
  std::vector<std::vector<double>> out(link_count, std::vector<double>(static_cast<std::size_t>(std::max(horizon, 0)), 0.0));
  std::map<std::uint64_t, std::pair<double, std::vector<LinkId>>> live;
  std::vector<double> load(link_count, 0.0);
  int step = 0;
  auto flush_until = [&](int until) {
    for (; step < until && step < horizon; ++step)
      for (std::size_t l = 0; l < link_count; ++l) out[l][static_cast<std::size_t>(step)] = load[l];
  };
  for (const auto& e : events) {
    if (e.step >= horizon) break;
    flush_until(e.step);
    switch (e.kind) {
      case EventKind::Allocated:
      case EventKind::Restored:
        for (LinkId l : e.path) load.at(l) += e.gbps;
        live[e.demand] = {e.gbps, e.path};
        break;
      case EventKind::Expired:
      case EventKind::FailedAffected: {
        auto it = live.find(e.demand);
        if (it == live.end()) break;
        for (LinkId l : it->second.second) load[l] -= it->second.first;
        live.erase(it);
        break;
      }
      case EventKind::Rejected:
      case EventKind::RestorationRejected:
        break;
    }
  }
  flush_until(horizon);
  return out;
}

TrafficSeries link_load_series(const std::vector<SimEvent>& events, const Topology& t, LinkId link,
                               int horizon) {
  if (link >= t.link_count()) throw PreconditionError("link_load_series: unknown link");
  // Single-link replay; avoids materializing every link.
  TrafficSeries out;
  out.entity = t.link(link).key;
  out.values.assign(static_cast<std::size_t>(std::max(horizon, 0)), 0.0);
  std::map<std::uint64_t, double> live;
  double load = 0.0;
  int step = 0;
  auto flush_until = [&](int until) {
    for (; step < until && step < horizon; ++step) out.values[static_cast<std::size_t>(step)] = load;
  };
  for (const auto& e : events) {
    if (e.step >= horizon) break;
    flush_until(e.step);
    if (e.kind == EventKind::Allocated || e.kind == EventKind::Restored) {
      if (std::find(e.path.begin(), e.path.end(), link) != e.path.end()) {
        load += e.gbps;
        live[e.demand] = e.gbps;
      }
    } else if (e.kind == EventKind::Expired || e.kind == EventKind::FailedAffected) {
      auto it = live.find(e.demand);
      if (it != live.end()) {
        load -= it->second;
        live.erase(it);
      }
    }
  }
  flush_until(horizon);
  return out;
}

void write_event_log_csv(std::ostream& out, const Topology& t, const std::vector<SimEvent>& events) {
  out << "step,kind,demand,src,dst,gbps,path\n";
  for (const auto& e : events) {
    out << e.step << ',' << to_string(e.kind) << ',' << e.demand << ',' << t.node(e.src).key << ','
        << t.node(e.dst).key << ',' << format_double(e.gbps) << ',';
    for (std::size_t i = 0; i < e.path.size(); ++i) out << (i ? "|" : "") << t.link(e.path[i]).key;
    out << '\n';
  }
}

void write_link_loads_csv(std::ostream& out, const Topology& t,
                          const std::vector<std::vector<double>>& history,
                          const std::vector<LinkId>& links) {
  out << "link,step,gbps\n";
  for (LinkId l : links) {
    const auto& series = history.at(l);
    for (std::size_t s = 0; s < series.size(); ++s)
      out << t.link(l).key << ',' << s << ',' << format_double(series[s]) << '\n';
  }
}

}  // namespace linkdrift
