#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace linkdrift {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;
using LinkSet = std::set<LinkId>;

struct Node {
  std::string key;
  std::string name;
  double population_weight = 1.0;
};

/// Directed fiber link.
struct Link {
  std::string key;
  NodeId src = 0;
  NodeId dst = 0;
  double length_km = 0.0;
};

/// Directed, km-weighted network graph with data-center placement.
/// Immutable once constructed; share it read-only between runs.
class Topology {
 public:
  Topology(std::string name, std::vector<Node> nodes, std::vector<Link> links,
           std::vector<NodeId> dc_nodes);

  const std::string& name() const noexcept { return name_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t link_count() const noexcept { return links_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Link& link(LinkId id) const { return links_.at(id); }

  /// Sorted ascending.
  const std::vector<NodeId>& dc_nodes() const noexcept { return dc_nodes_; }
  bool is_dc(NodeId id) const { return is_dc_.at(id); }
  /// Non-DC nodes, ascending.
  std::vector<NodeId> clients() const;

  const std::vector<LinkId>& out_links(NodeId id) const { return out_.at(id); }
  std::size_t degree(NodeId id) const { return out_.at(id).size() + in_degree_.at(id); }

  std::optional<NodeId> find_node(std::string_view key) const;
  std::optional<LinkId> find_link(std::string_view key) const;
  NodeId node_id(std::string_view key) const;
  LinkId link_id(std::string_view key) const;

  /// True if every node reaches every other node while avoiding `failed`.
  bool strongly_connected(const LinkSet& failed = {}) const;

 private:
  std::string name_;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<NodeId> dc_nodes_;
  std::vector<bool> is_dc_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::size_t> in_degree_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::unordered_map<std::string, LinkId> link_index_;
};

/// R highest-degree nodes, ties broken by lower NodeId.
std::vector<NodeId> default_dc_placement(const std::vector<Node>& nodes,
                                         const std::vector<Link>& links, std::size_t count);

struct DcPlacement {
  std::size_t count = 7;
  /// Node keys; overrides `count` when non-empty.
  std::vector<std::string> explicit_nodes;
};

/// Parses a topology document (JSON with `nodes` and `links` tables).
/// A `dc_nodes` array in the document takes precedence over the default
/// placement unless `placement.explicit_nodes` is set.
Topology load_topology(std::string_view document, const DcPlacement& placement = {});
Topology load_topology_file(const std::filesystem::path& path, const DcPlacement& placement = {});

struct CandidatePath {
  std::vector<LinkId> links;
  double length_km = 0.0;

  std::size_t hops() const noexcept { return links.size(); }
  bool operator==(const CandidatePath&) const = default;
};

/// Node sequence visited by a path, starting at the source.
std::vector<NodeId> path_nodes(const Topology& t, const CandidatePath& p);

/// Up to k loopless paths from s to d avoiding `failed`, ascending by length,
/// ties broken by lexicographic link-id sequence. Yen's algorithm.
/// Returns an empty list when d is unreachable.
std::vector<CandidatePath> k_shortest_paths(const Topology& t, NodeId s, NodeId d, std::size_t k,
                                            const LinkSet& failed = {});

/// Single-source shortest distances (km) over the graph without `failed`.
/// Unreachable nodes get +infinity.
std::vector<double> shortest_distances(const Topology& t, NodeId source, const LinkSet& failed = {});

/// Data center with the smallest km distance from `client` over the surviving
/// graph; ties go to the lower NodeId. Throws NoDcError if none is reachable.
NodeId nearest_dc(const Topology& t, NodeId client, const LinkSet& failed = {});

}  // namespace linkdrift
