#include "linkdrift/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "linkdrift/errors.hpp"

namespace linkdrift {

int channels_needed(double gbps, const ModulationFormat& m) {
  return static_cast<int>(std::ceil(gbps / m.gbps));
}

int regenerators_needed(double length_km, const ModulationFormat& m) {
  return std::max(0, static_cast<int>(std::ceil(length_km / m.reach_km)) - 1);
}

SpectrumGrid::SpectrumGrid(std::size_t links, int slices)
    : slices_(slices), owner_(links * static_cast<std::size_t>(slices), kFreeSlice) {
  if (slices < kSlicesPerChannel) throw ConfigError("a link needs at least one channel worth of slices");
}

bool SpectrumGrid::is_free(LinkId link, int first, int count) const {
  if (first < 0 || first + count > slices_) return false;
  const std::int64_t* row = owner_.data() + index(link, first);
  for (int i = 0; i < count; ++i)
    if (row[i] != kFreeSlice) return false;
  return true;
}

bool SpectrumGrid::is_free(std::span<const LinkId> path, int first, int count) const {
  return std::all_of(path.begin(), path.end(), [&](LinkId l) { return is_free(l, first, count); });
}

std::optional<int> SpectrumGrid::first_fit(std::span<const LinkId> path, int count) const {
  // Scan with a running count of consecutive slices free on the whole path.
  int run = 0;
  for (int s = 0; s < slices_; ++s) {
    bool free = true;
    for (LinkId l : path) {
      if (owner_[index(l, s)] != kFreeSlice) {
        free = false;
        break;
      }
    }
    run = free ? run + 1 : 0;
    if (run == count) return s - count + 1;
  }
  return std::nullopt;
}

void SpectrumGrid::occupy(std::span<const LinkId> path, int first, int count, std::int64_t owner) {
  for (LinkId l : path) {
    for (int i = 0; i < count; ++i) {
      auto& slot = owner_.at(index(l, first + i));
      if (slot != kFreeSlice) throw Error("spectrum slice double-booked");
      slot = owner;
    }
  }
}

void SpectrumGrid::release(std::span<const LinkId> path, int first, int count, std::int64_t owner) {
  for (LinkId l : path) {
    for (int i = 0; i < count; ++i) {
      auto& slot = owner_.at(index(l, first + i));
      if (slot != owner) throw Error("releasing a slice not owned by the demand");
      slot = kFreeSlice;
    }
  }
}

std::size_t SpectrumGrid::occupied_slices(LinkId link) const {
  const auto begin = owner_.begin() + static_cast<std::ptrdiff_t>(index(link, 0));
  return static_cast<std::size_t>(
      std::count_if(begin, begin + slices_, [](std::int64_t o) { return o != kFreeSlice; }));
}

PathCache::PathCache(const Topology& topology, std::size_t k, LinkSet failed)
    : topology_(&topology), k_(k), failed_(std::move(failed)) {}

const std::vector<CandidatePath>& PathCache::paths(NodeId s, NodeId d) {
  auto it = cache_.find({s, d});
  if (it == cache_.end())
    it = cache_.emplace(NodePair{s, d}, k_shortest_paths(*topology_, s, d, k_, failed_)).first;
  return it->second;
}

std::optional<Lightpath> select_lightpath(const SpectrumGrid& grid, const Demand& d,
                                          std::span<const CandidatePath> candidates) {
  struct Option {
    int regenerators;
    double gbps;
    double km;
    std::size_t path;
    std::size_t modulation;
  };
  std::vector<Option> options;
  options.reserve(candidates.size() * kModulationFormats.size());
  for (std::size_t p = 0; p < candidates.size(); ++p)
    for (std::size_t m = 0; m < kModulationFormats.size(); ++m)
      options.push_back({regenerators_needed(candidates[p].length_km, kModulationFormats[m]),
                         kModulationFormats[m].gbps, candidates[p].length_km, p, m});
  std::stable_sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
    return std::tie(a.regenerators, b.gbps, a.km, a.path) < std::tie(b.regenerators, a.gbps, b.km, b.path);
  });

  // Slices free on every link of a path, computed lazily per path.
  std::vector<std::vector<char>> path_free(candidates.size());
  for (const Option& o : options) {
    const CandidatePath& path = candidates[o.path];
    auto& mask = path_free[o.path];
    if (mask.empty()) {
      mask.assign(static_cast<std::size_t>(grid.slices()), 1);
      for (LinkId l : path.links)
        for (int s = 0; s < grid.slices(); ++s)
          if (grid.owner(l, s) != kFreeSlice) mask[static_cast<std::size_t>(s)] = 0;
    }
    const int channels = channels_needed(d.gbps, kModulationFormats[o.modulation]);
    std::vector<char> avail = mask;
    std::vector<int> starts;
    int run = 0;
    for (int s = 0; s < grid.slices() && static_cast<int>(starts.size()) < channels; ++s) {
      run = avail[static_cast<std::size_t>(s)] ? run + 1 : 0;
      if (run == kSlicesPerChannel) {
        const int first = s - kSlicesPerChannel + 1;
        starts.push_back(first);
        for (int i = first; i <= s; ++i) avail[static_cast<std::size_t>(i)] = 0;
        run = 0;
      }
    }
    if (static_cast<int>(starts.size()) != channels) continue;
    Lightpath lp;
    lp.demand = d.id;
    lp.src = d.s;
    lp.dst = d.t;
    lp.gbps = d.gbps;
    lp.path = path;
    lp.modulation = o.modulation;
    lp.channel_starts = std::move(starts);
    lp.regenerators = o.regenerators;
    lp.expiry = d.arrival + d.holding;
    return lp;
  }
  return std::nullopt;
}

std::optional<Lightpath> select_lightpath(const Topology&, const SpectrumGrid& grid, const Demand& d,
                                          PathCache& cache) {
  return select_lightpath(grid, d, cache.paths(d.s, d.t));
}

}  // namespace linkdrift
