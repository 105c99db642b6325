#pragma once

#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "linkdrift/topology.hpp"

namespace linkdrift::testing {

struct Edge {
  std::string src;
  std::string dst;
  double km;
};

// Nodes are named by the keys used in `edges` plus `extra`; the link key is
// "SRC-DST". DCs default to the first two nodes in order of appearance.
inline Topology make_topology(const std::vector<std::string>& nodes, const std::vector<Edge>& edges,
                              std::vector<std::string> dcs = {}) {
  std::vector<Node> ns;
  for (const auto& k : nodes) ns.push_back({k, k, 1.0});
  auto id = [&](const std::string& k) {
    for (NodeId i = 0; i < ns.size(); ++i)
      if (ns[i].key == k) return i;
    return static_cast<NodeId>(ns.size());
  };
  std::vector<Link> ls;
  for (const auto& e : edges) ls.push_back({e.src + "-" + e.dst, id(e.src), id(e.dst), e.km});
  std::vector<NodeId> dc_ids;
  if (dcs.empty()) dcs = {nodes.at(0), nodes.at(1)};
  for (const auto& d : dcs) dc_ids.push_back(id(d));
  return Topology("test", std::move(ns), std::move(ls), std::move(dc_ids));
}

// Both directions of every fiber.
inline std::vector<Edge> bidirectional(const std::vector<Edge>& fibers) {
  std::vector<Edge> out;
  for (const auto& f : fibers) {
    out.push_back(f);
    out.push_back({f.dst, f.src, f.km});
  }
  return out;
}

inline std::shared_ptr<const Topology> share(Topology t) { return std::make_shared<const Topology>(std::move(t)); }

}  // namespace linkdrift::testing
