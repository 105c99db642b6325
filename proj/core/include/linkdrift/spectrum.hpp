#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "linkdrift/topology.hpp"
#include "linkdrift/traffic.hpp"

namespace linkdrift {

inline constexpr double kSliceWidthGhz = 12.5;
inline constexpr int kSlicesPerChannel = 3;  // 37.5 GHz transceiver
inline constexpr std::int64_t kFreeSlice = -1;

struct ModulationFormat {
  std::string_view name;
  double gbps;      // per transceiver
  double reach_km;  // without regeneration
};

/// Ordered from least to most spectrally efficient.
inline constexpr std::array<ModulationFormat, 4> kModulationFormats{{
    {"BPSK", 50.0, 6300.0},
    {"QPSK", 100.0, 3500.0},
    {"8QAM", 150.0, 1200.0},
    {"16QAM", 200.0, 600.0},
}};

int channels_needed(double gbps, const ModulationFormat& m);
int regenerators_needed(double length_km, const ModulationFormat& m);

/// Per-link slice occupancy. Each slice records the id of the demand that owns
/// it, or kFreeSlice.
class SpectrumGrid {
 public:
  SpectrumGrid() = default;
  SpectrumGrid(std::size_t links, int slices);

  int slices() const noexcept { return slices_; }
  std::size_t links() const noexcept { return owner_.size() / static_cast<std::size_t>(std::max(slices_, 1)); }

  std::int64_t owner(LinkId link, int slice) const { return owner_[index(link, slice)]; }
  bool is_free(LinkId link, int first, int count) const;
  bool is_free(std::span<const LinkId> path, int first, int count) const;

  /// Lowest starting slice where `count` contiguous slices are free on every
  /// link of `path`.
  std::optional<int> first_fit(std::span<const LinkId> path, int count) const;

  void occupy(std::span<const LinkId> path, int first, int count, std::int64_t owner);
  void release(std::span<const LinkId> path, int first, int count, std::int64_t owner);

  std::size_t occupied_slices(LinkId link) const;

 private:
  std::size_t index(LinkId link, int slice) const {
    return static_cast<std::size_t>(link) * static_cast<std::size_t>(slices_) + static_cast<std::size_t>(slice);
  }

  int slices_ = 0;
  std::vector<std::int64_t> owner_;
};

struct Lightpath {
  std::uint64_t demand = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double gbps = 0.0;
  CandidatePath path;
  std::size_t modulation = 0;  // index into kModulationFormats
  std::vector<int> channel_starts;
  int regenerators = 0;
  int expiry = 0;

  const ModulationFormat& format() const { return kModulationFormats[modulation]; }
  double capacity_gbps() const { return format().gbps * static_cast<double>(channel_starts.size()); }
};

/// Candidate paths per node pair for a fixed failure set.
class PathCache {
 public:
  PathCache(const Topology& topology, std::size_t k, LinkSet failed = {});

  const std::vector<CandidatePath>& paths(NodeId s, NodeId d);
  const LinkSet& failed() const noexcept { return failed_; }
  std::size_t k() const noexcept { return k_; }

 private:
  const Topology* topology_;
  std::size_t k_;
  LinkSet failed_;
  std::map<NodePair, std::vector<CandidatePath>> cache_;
};

/// Distance-adaptive selection: over every (candidate path, modulation) pair,
/// prefer fewer regenerators, then higher per-transceiver bitrate, then shorter
/// path, and take the first combination for which every channel can be placed
/// first-fit. All channels of a demand ride one path. Does not modify `grid`.
/// Returns nullopt when the demand is blocked.
std::optional<Lightpath> select_lightpath(const SpectrumGrid& grid, const Demand& d,
                                          std::span<const CandidatePath> candidates);

std::optional<Lightpath> select_lightpath(const Topology& t, const SpectrumGrid& grid, const Demand& d,
                                          PathCache& cache);

}  // namespace linkdrift
