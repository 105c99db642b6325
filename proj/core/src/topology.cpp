#include "linkdrift/topology.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"

namespace linkdrift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double path_length(const Topology& t, const std::vector<LinkId>& links) {
  double km = 0.0;
  for (LinkId l : links) km += t.link(l).length_km;
  return km;
}

bool path_less(const CandidatePath& a, const CandidatePath& b) {
  if (a.length_km != b.length_km) return a.length_km < b.length_km;
  return a.links < b.links;
}

// Dijkstra from s to d over links not in `banned_links` and nodes not in
// `banned_nodes`. Among equal-distance predecessors the lower link id wins so
// the result is deterministic.
std::optional<std::vector<LinkId>> dijkstra_path(const Topology& t, NodeId s, NodeId d,
                                                 const std::vector<bool>& banned_links,
                                                 const std::vector<bool>& banned_nodes) {
  const std::size_t n = t.node_count();
  std::vector<double> dist(n, kInf);
  std::vector<LinkId> via(n, std::numeric_limits<LinkId>::max());
  std::vector<bool> done(n, false);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0.0;
  pq.emplace(0.0, s);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == d) break;
    for (LinkId l : t.out_links(u)) {
      if (banned_links[l]) continue;
      const Link& link = t.link(l);
      if (banned_nodes[link.dst] || done[link.dst]) continue;
      const double nd = du + link.length_km;
      if (nd < dist[link.dst] || (nd == dist[link.dst] && l < via[link.dst])) {
        dist[link.dst] = nd;
        via[link.dst] = l;
        pq.emplace(nd, link.dst);
      }
    }
  }
  if (dist[d] == kInf) return std::nullopt;
  std::vector<LinkId> links;
  for (NodeId v = d; v != s; v = t.link(via[v]).src) links.push_back(via[v]);
  std::reverse(links.begin(), links.end());
  return links;
}

}  // namespace

Topology::Topology(std::string name, std::vector<Node> nodes, std::vector<Link> links,
                   std::vector<NodeId> dc_nodes)
    : name_(std::move(name)), nodes_(std::move(nodes)), links_(std::move(links)),
      dc_nodes_(std::move(dc_nodes)) {
  if (nodes_.empty()) throw TopologyError("topology has no nodes");
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (!node_index_.emplace(nodes_[i].key, i).second)
      throw TopologyError("duplicate node id '" + nodes_[i].key + "'");
    if (!(nodes_[i].population_weight > 0.0))
      throw TopologyError("node '" + nodes_[i].key + "' needs a positive population_weight");
  }
  out_.assign(nodes_.size(), {});
  in_degree_.assign(nodes_.size(), 0);
  for (LinkId i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (l.src >= nodes_.size() || l.dst >= nodes_.size())
      throw TopologyError("link '" + l.key + "' references an unknown node");
    if (l.src == l.dst) throw TopologyError("link '" + l.key + "' is a self-loop");
    if (!(l.length_km > 0.0)) throw TopologyError("link '" + l.key + "' has non-positive length");
    if (!link_index_.emplace(l.key, i).second)
      throw TopologyError("duplicate link id '" + l.key + "'");
    out_[l.src].push_back(i);
    ++in_degree_[l.dst];
  }
  std::sort(dc_nodes_.begin(), dc_nodes_.end());
  dc_nodes_.erase(std::unique(dc_nodes_.begin(), dc_nodes_.end()), dc_nodes_.end());
  if (dc_nodes_.size() < 2) throw TopologyError("at least two data-center nodes are required");
  is_dc_.assign(nodes_.size(), false);
  for (NodeId dc : dc_nodes_) {
    if (dc >= nodes_.size()) throw TopologyError("data-center node out of range");
    is_dc_[dc] = true;
  }
}

std::vector<NodeId> Topology::clients() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (!is_dc_[i]) out.push_back(i);
  return out;
}

std::optional<NodeId> Topology::find_node(std::string_view key) const {
  auto it = node_index_.find(std::string(key));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<LinkId> Topology::find_link(std::string_view key) const {
  auto it = link_index_.find(std::string(key));
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

NodeId Topology::node_id(std::string_view key) const {
  if (auto id = find_node(key)) return *id;
  throw TopologyError("unknown node '" + std::string(key) + "'");
}

LinkId Topology::link_id(std::string_view key) const {
  if (auto id = find_link(key)) return *id;
  throw TopologyError("unknown link '" + std::string(key) + "'");
}

bool Topology::strongly_connected(const LinkSet& failed) const {
  for (NodeId s = 0; s < nodes_.size(); ++s) {
    auto dist = shortest_distances(*this, s, failed);
    if (std::any_of(dist.begin(), dist.end(), [](double d) { return d == kInf; })) return false;
  }
  return true;
}

std::vector<NodeId> default_dc_placement(const std::vector<Node>& nodes,
                                         const std::vector<Link>& links, std::size_t count) {
  std::vector<std::size_t> degree(nodes.size(), 0);
  for (const Link& l : links) {
    if (l.src < nodes.size()) ++degree[l.src];
    if (l.dst < nodes.size()) ++degree[l.dst];
  }
  std::vector<NodeId> order(nodes.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return degree[a] > degree[b]; });
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

Topology load_topology(std::string_view document, const DcPlacement& placement) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(std::string("malformed topology document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links") ||
      !doc["nodes"].is_array() || !doc["links"].is_array())
    throw TopologyError("malformed topology document: expected `nodes` and `links` tables");

  std::vector<Node> nodes;
  std::unordered_map<std::string, NodeId> index;
  try {
    for (const auto& n : doc["nodes"]) {
      Node node;
      node.key = n.at("id").get<std::string>();
      node.name = n.value("name", node.key);
      node.population_weight = n.value("population_weight", 1.0);
      index.emplace(node.key, static_cast<NodeId>(nodes.size()));
      nodes.push_back(std::move(node));
    }
    std::vector<Link> links;
    for (const auto& l : doc["links"]) {
      Link link;
      link.key = l.at("id").get<std::string>();
      const auto src = l.at("src").get<std::string>();
      const auto dst = l.at("dst").get<std::string>();
      auto s = index.find(src);
      auto d = index.find(dst);
      if (s == index.end() || d == index.end())
        throw TopologyError("link '" + link.key + "' references unknown node '" +
                            (s == index.end() ? src : dst) + "'");
      link.src = s->second;
      link.dst = d->second;
      link.length_km = l.at("length_km").get<double>();
      if (!(link.length_km > 0.0))
        throw TopologyError("link '" + link.key + "' has non-positive length");
      links.push_back(std::move(link));
    }

    auto resolve = [&](const std::vector<std::string>& keys) {
      std::vector<NodeId> ids;
      for (const auto& k : keys) {
        auto it = index.find(k);
        if (it == index.end()) throw TopologyError("unknown data-center node '" + k + "'");
        ids.push_back(it->second);
      }
      return ids;
    };
    std::vector<NodeId> dcs;
    if (!placement.explicit_nodes.empty()) {
      dcs = resolve(placement.explicit_nodes);
    } else if (doc.contains("dc_nodes")) {
      dcs = resolve(doc["dc_nodes"].get<std::vector<std::string>>());
    } else {
      dcs = default_dc_placement(nodes, links, placement.count);
    }
    return Topology(doc.value("name", std::string("unnamed")), std::move(nodes), std::move(links),
                    std::move(dcs));
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(std::string("malformed topology document: ") + e.what());
  }
}

Topology load_topology_file(const std::filesystem::path& path, const DcPlacement& placement) {
  return load_topology(read_text_file(path), placement);
}

std::vector<NodeId> path_nodes(const Topology& t, const CandidatePath& p) {
  std::vector<NodeId> out;
  if (p.links.empty()) return out;
  out.push_back(t.link(p.links.front()).src);
  for (LinkId l : p.links) out.push_back(t.link(l).dst);
  return out;
}

std::vector<CandidatePath> k_shortest_paths(const Topology& t, NodeId s, NodeId d, std::size_t k,
                                            const LinkSet& failed) {
  if (s == d) throw PreconditionError("k_shortest_paths: source equals destination");
  if (k == 0) throw PreconditionError("k_shortest_paths: k must be at least 1");
  if (s >= t.node_count() || d >= t.node_count())
    throw PreconditionError("k_shortest_paths: node out of range");

  std::vector<bool> base_banned(t.link_count(), false);
  for (LinkId l : failed)
    if (l < base_banned.size()) base_banned[l] = true;
  const std::vector<bool> no_nodes(t.node_count(), false);

  std::vector<CandidatePath> accepted;
  auto first = dijkstra_path(t, s, d, base_banned, no_nodes);
  if (!first) return accepted;
  accepted.push_back({*first, path_length(t, *first)});

  std::vector<CandidatePath> pool;
  auto known = [&](const std::vector<LinkId>& links) {
    auto same = [&](const CandidatePath& p) { return p.links == links; };
    return std::any_of(accepted.begin(), accepted.end(), same) ||
           std::any_of(pool.begin(), pool.end(), same);
  };

  while (accepted.size() < k) {
    const CandidatePath& last = accepted.back();
    const auto last_nodes = path_nodes(t, last);
    for (std::size_t i = 0; i < last.links.size(); ++i) {
      const NodeId spur = last_nodes[i];
      std::vector<bool> banned = base_banned;
      for (const auto& p : accepted) {
        if (p.links.size() > i && std::equal(p.links.begin(), p.links.begin() + i, last.links.begin()))
          banned[p.links[i]] = true;
      }
      std::vector<bool> banned_nodes(t.node_count(), false);
      for (std::size_t j = 0; j < i; ++j) banned_nodes[last_nodes[j]] = true;
      auto spur_path = dijkstra_path(t, spur, d, banned, banned_nodes);
      if (!spur_path) continue;
      std::vector<LinkId> total(last.links.begin(), last.links.begin() + i);
      total.insert(total.end(), spur_path->begin(), spur_path->end());
      if (!known(total)) pool.push_back({total, path_length(t, total)});
    }
    if (pool.empty()) break;
    auto best = std::min_element(pool.begin(), pool.end(), path_less);
    accepted.push_back(std::move(*best));
    pool.erase(best);
  }
  std::sort(accepted.begin(), accepted.end(), path_less);
  return accepted;
}

std::vector<double> shortest_distances(const Topology& t, NodeId source, const LinkSet& failed) {
  std::vector<double> dist(t.node_count(), kInf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist.at(source) = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    for (LinkId l : t.out_links(u)) {
      if (failed.count(l)) continue;
      const Link& link = t.link(l);
      const double nd = du + link.length_km;
      if (nd < dist[link.dst]) {
        dist[link.dst] = nd;
        pq.emplace(nd, link.dst);
      }
    }
  }
  return dist;
}

NodeId nearest_dc(const Topology& t, NodeId client, const LinkSet& failed) {
  const auto dist = shortest_distances(t, client, failed);
  std::optional<NodeId> best;
  for (NodeId dc : t.dc_nodes()) {
    if (dist[dc] == kInf) continue;
    if (!best || dist[dc] < dist[*best]) best = dc;
  }
  if (!best)
    throw NoDcError("no data center reachable from node '" + t.node(client).key + "'");
  return *best;
}

}  // namespace linkdrift
