#pragma once

// Concept hierarchy as a directed multi-parent DAG. External string codes are
// interned to dense ids; the code table rides along so every artifact written
// from a graph speaks the original vocabulary.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hypertax/errors.hpp"

namespace hypertax {

using NodeId = std::uint32_t;

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Parses "parent<TAB>child" lines. '#' lines and blank lines are skipped,
  // duplicate edges collapse, self-loops and malformed lines are rejected
  // with their line number, cycles are rejected after the full read.
  static KnowledgeGraph parse_edge_list(std::istream& in) {
    KnowledgeGraph g;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::uint64_t> seen;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected exactly two tab-separated fields");
      }
      const std::string parent = line.substr(0, tab);
      const std::string child = line.substr(tab + 1);
      if (parent.empty() || child.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty field");
      }
      if (parent == child) {
        throw ParseError("line " + std::to_string(line_no) + ": self-loop on '" + parent + "'");
      }
      const NodeId p = g.intern(parent);
      const NodeId c = g.intern(child);
      const std::uint64_t key = (static_cast<std::uint64_t>(p) << 32) | c;
      if (seen.insert(key).second) g.edges_.emplace_back(p, c);
    }
    g.finalize();
    return g;
  }

  static KnowledgeGraph parse_edge_list(const std::string& text) {
    std::istringstream in(text);
    return parse_edge_list(in);
  }

  // Programmatic construction; extra_codes admits nodes with no edges, which
  // the text format cannot express.
  static KnowledgeGraph from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                   const std::vector<std::string>& extra_codes = {}) {
    KnowledgeGraph g;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& [parent, child] : edges) {
      if (parent == child) throw GraphError("self-loop on '" + parent + "'");
      const NodeId p = g.intern(parent);
      const NodeId c = g.intern(child);
      const std::uint64_t key = (static_cast<std::uint64_t>(p) << 32) | c;
      if (seen.insert(key).second) g.edges_.emplace_back(p, c);
    }
    for (const auto& code : extra_codes) g.intern(code);
    g.finalize();
    return g;
  }

  std::size_t node_count() const { return codes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

  const std::string& code(NodeId id) const {
    require_node(id);
    return codes_[id];
  }

  std::optional<NodeId> find(std::string_view code) const {
    const auto it = index_.find(std::string(code));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<NodeId>& children(NodeId id) const {
    require_node(id);
    return children_[id];
  }

  const std::vector<NodeId>& parents(NodeId id) const {
    require_node(id);
    return parents_[id];
  }

  // directed: true iff the edge u -> v exists. undirected: either direction.
  bool is_connected(NodeId u, NodeId v, bool directed) const {
    require_node(u);
    require_node(v);
    if (has_child(u, v)) return true;
    if (directed) return false;
    return has_child(v, u);
  }

  // Number of nodes counted as connected to u under the given mode. Children
  // and parents are disjoint sets in a DAG, so the undirected count is a sum.
  std::size_t connected_count(NodeId u, bool directed) const {
    require_node(u);
    return children_[u].size() + (directed ? 0 : parents_[u].size());
  }

  std::vector<NodeId> roots() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < codes_.size(); ++i) {
      if (parents_[i].empty()) out.push_back(i);
    }
    return out;
  }

 private:
  NodeId intern(const std::string& code) {
    const auto it = index_.find(code);
    if (it != index_.end()) return it->second;
    const NodeId id = static_cast<NodeId>(codes_.size());
    codes_.push_back(code);
    index_.emplace(code, id);
    return id;
  }

  void require_node(NodeId id) const {
    if (id >= codes_.size()) {
      throw LookupError("unknown node id " + std::to_string(id));
    }
  }

  bool has_child(NodeId u, NodeId v) const {
    const auto& c = children_[u];
    return std::binary_search(c.begin(), c.end(), v);
  }

  // Builds sorted adjacency and rejects cycles (Kahn).
  void finalize() {
    const std::size_t n = codes_.size();
    children_.assign(n, {});
    parents_.assign(n, {});
    for (const auto& [p, c] : edges_) {
      children_[p].push_back(c);
      parents_[c].push_back(p);
    }
    for (auto& v : children_) std::sort(v.begin(), v.end());
    for (auto& v : parents_) std::sort(v.begin(), v.end());

    std::vector<std::size_t> indegree(n);
    std::deque<NodeId> ready;
    for (NodeId i = 0; i < n; ++i) {
      indegree[i] = parents_[i].size();
      if (indegree[i] == 0) ready.push_back(i);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const NodeId u = ready.front();
      ready.pop_front();
      ++visited;
      for (const NodeId c : children_[u]) {
        if (--indegree[c] == 0) ready.push_back(c);
      }
    }
    if (visited != n) {
      std::string sample;
      for (NodeId i = 0; i < n; ++i) {
        if (indegree[i] > 0) {
          sample = codes_[i];
          break;
        }
      }
      throw GraphError("hierarchy contains a cycle (involving '" + sample + "')");
    }
  }

  friend KnowledgeGraph extract_ancestral_subtree(const KnowledgeGraph&,
                                                  const struct ObservedSet&);

  std::vector<std::string> codes_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<std::vector<NodeId>> parents_;
};

// Concepts marked as observed in source data; always a subset of a graph's
// nodes after resolution.
struct ObservedSet {
  std::vector<NodeId> ids;  // unique, sorted
};

struct ObservedResolution {
  ObservedSet observed;
  std::vector<std::string> unresolved;  // reported, never silently dropped
};

inline ObservedResolution resolve_observed(const KnowledgeGraph& graph,
                                           const std::vector<std::string>& codes) {
  ObservedResolution out;
  std::unordered_set<NodeId> uniq;
  for (const auto& code : codes) {
    if (const auto id = graph.find(code)) {
      if (uniq.insert(*id).second) out.observed.ids.push_back(*id);
    } else {
      out.unresolved.push_back(code);
    }
  }
  std::sort(out.observed.ids.begin(), out.observed.ids.end());
  return out;
}

// Keeps every observed concept plus every node on any parent-path from a
// root down to an observed concept, with all edges among retained nodes.
// Reverse BFS (child -> parents) from the observed set computes exactly that
// closure in time linear in the retained edges.
inline KnowledgeGraph extract_ancestral_subtree(const KnowledgeGraph& graph,
                                                const ObservedSet& observed) {
  if (observed.ids.empty()) {
    throw GraphError("observed set is empty; nothing to extract");
  }
  const std::size_t n = graph.node_count();
  std::vector<char> keep(n, 0);
  std::deque<NodeId> frontier;
  for (const NodeId id : observed.ids) {
    if (id >= n) throw LookupError("observed id " + std::to_string(id) + " not in graph");
    if (!keep[id]) {
      keep[id] = 1;
      frontier.push_back(id);
    }
  }
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (const NodeId p : graph.parents(u)) {
      if (!keep[p]) {
        keep[p] = 1;
        frontier.push_back(p);
      }
    }
  }

  KnowledgeGraph sub;
  std::vector<NodeId> remap(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    if (keep[i]) remap[i] = sub.intern(graph.codes_[i]);
  }
  for (const auto& [p, c] : graph.edges_) {
    if (keep[p] && keep[c]) sub.edges_.emplace_back(remap[p], remap[c]);
  }
  sub.finalize();
  return sub;
}

}  // namespace hypertax
