#include <catch2/catch_amalgamated.hpp>

#include <deque>
#include <string>
#include <vector>

#include <hypertax/graph.hpp>

#include "support/fixtures.hpp"

using namespace hypertax;

namespace {

std::vector<std::pair<std::string, std::string>> edge_codes(const KnowledgeGraph& g) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [p, c] : g.edges()) out.emplace_back(g.code(p), g.code(c));
  return out;
}

ObservedSet observe(const KnowledgeGraph& g, const std::vector<std::string>& codes) {
  const auto res = resolve_observed(g, codes);
  REQUIRE(res.unresolved.empty());
  return res.observed;
}

}  // namespace

TEST_CASE("parse_edge_list basics") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\nb\tc"));
  REQUIRE(g.node_count() == 3);
  REQUIRE(g.edge_count() == 2);
  REQUIRE(g.find("a").has_value());
  REQUIRE(g.code(*g.find("b")) == "b");
  REQUIRE_FALSE(g.find("zzz").has_value());
}

TEST_CASE("parse_edge_list collapses duplicates") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\na\tb\n"));
  REQUIRE(g.node_count() == 2);
  REQUIRE(g.edge_count() == 1);
}

TEST_CASE("parse_edge_list skips comments, blanks, and CR line endings") {
  const auto g =
      KnowledgeGraph::parse_edge_list(std::string("# taxonomy\n\na\tb\r\n\nb\tc\n# done\n"));
  REQUIRE(g.node_count() == 3);
  REQUIRE(g.edge_count() == 2);
}

TEST_CASE("parse_edge_list rejects malformed lines with their line number") {
  try {
    KnowledgeGraph::parse_edge_list(std::string("a\tb\nbad line no tab\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }

  REQUIRE_THROWS_AS(KnowledgeGraph::parse_edge_list(std::string("a\tb\tc\n")), ParseError);
  REQUIRE_THROWS_AS(KnowledgeGraph::parse_edge_list(std::string("a\t\n")), ParseError);
}

TEST_CASE("parse_edge_list rejects self-loops") {
  try {
    KnowledgeGraph::parse_edge_list(std::string("a\tb\nc\tc\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("line 2") != std::string::npos);
    REQUIRE(msg.find("self-loop") != std::string::npos);
  }
}

TEST_CASE("cycles are rejected") {
  REQUIRE_THROWS_AS(KnowledgeGraph::parse_edge_list(std::string("a\tb\nb\tc\nc\ta\n")),
                    GraphError);
}

TEST_CASE("is_connected under both directedness modes") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\n"));
  const NodeId a = *g.find("a");
  const NodeId b = *g.find("b");
  REQUIRE(g.is_connected(a, b, true));
  REQUIRE_FALSE(g.is_connected(b, a, true));
  REQUIRE(g.is_connected(b, a, false));
  REQUIRE_FALSE(g.is_connected(a, a, true));
  REQUIRE_FALSE(g.is_connected(a, a, false));
}

TEST_CASE("undirected connectivity is symmetric on random dags") {
  const auto g = fixtures::make_random_dag(40, 15, 77);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    for (NodeId v = 0; v < g.node_count(); ++v) {
      REQUIRE(g.is_connected(u, v, false) == g.is_connected(v, u, false));
    }
  }
}

TEST_CASE("connected_count matches adjacency") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\na\tc\nd\ta\n"));
  const NodeId a = *g.find("a");
  REQUIRE(g.connected_count(a, true) == 2);   // children only
  REQUIRE(g.connected_count(a, false) == 3);  // plus the parent d
}

TEST_CASE("roots are the parentless nodes") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\nc\tb\n"));
  const auto roots = g.roots();
  REQUIRE(roots.size() == 2);
}

TEST_CASE("from_edges admits isolated nodes through extra_codes") {
  const auto g = KnowledgeGraph::from_edges({{"a", "b"}}, {"lonely"});
  REQUIRE(g.node_count() == 3);
  REQUIRE(g.edge_count() == 1);
  const NodeId lonely = *g.find("lonely");
  REQUIRE(g.children(lonely).empty());
  REQUIRE(g.parents(lonely).empty());
}

TEST_CASE("resolve_observed reports unresolved codes") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\n"));
  const auto res = resolve_observed(g, {"b", "ghost", "b", "phantom"});
  REQUIRE(res.observed.ids.size() == 1);
  REQUIRE(res.unresolved == std::vector<std::string>{"ghost", "phantom"});
}

TEST_CASE("subtree of a chain keeps the full ancestor path") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\nb\tc\n"));
  const auto sub = extract_ancestral_subtree(g, observe(g, {"c"}));
  REQUIRE(sub.node_count() == 3);
  REQUIRE(sub.edge_count() == 2);
  REQUIRE(edge_codes(sub) ==
          std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "c"}});
}

TEST_CASE("subtree drops non-observed leaves") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\nb\tc\n"));
  const auto sub = extract_ancestral_subtree(g, observe(g, {"b"}));
  REQUIRE(sub.node_count() == 2);
  REQUIRE(sub.edge_count() == 1);
  REQUIRE_FALSE(sub.find("c").has_value());
}

TEST_CASE("subtree keeps both parents of a diamond") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\na\tc\nb\td\nc\td\n"));
  const auto sub = extract_ancestral_subtree(g, observe(g, {"d"}));
  REQUIRE(sub.node_count() == 4);
  REQUIRE(sub.edge_count() == 4);
}

TEST_CASE("subtree extraction rejects an empty observed set") {
  const auto g = KnowledgeGraph::parse_edge_list(std::string("a\tb\n"));
  REQUIRE_THROWS_AS(extract_ancestral_subtree(g, ObservedSet{}), GraphError);
}

TEST_CASE("subtree extraction is idempotent") {
  const auto g = fixtures::make_random_dag(60, 25, 5);
  const std::vector<std::string> observed_codes = {"n7", "n23", "n41", "n59"};
  const auto once = extract_ancestral_subtree(g, observe(g, observed_codes));
  const auto twice = extract_ancestral_subtree(once, observe(once, observed_codes));
  REQUIRE(once.node_count() == twice.node_count());
  REQUIRE(edge_codes(once) == edge_codes(twice));
}

TEST_CASE("every subtree node reaches an observed node downward") {
  const auto g = fixtures::make_random_dag(80, 30, 9);
  const std::vector<std::string> observed_codes = {"n12", "n34", "n56", "n78"};
  const auto sub = extract_ancestral_subtree(g, observe(g, observed_codes));
  REQUIRE(sub.node_count() >= observed_codes.size());
  REQUIRE(sub.edge_count() <= g.edge_count());

  std::vector<char> observed(sub.node_count(), 0);
  for (const auto& code : observed_codes) observed[*sub.find(code)] = 1;
  for (NodeId start = 0; start < sub.node_count(); ++start) {
    bool reached = false;
    std::deque<NodeId> frontier = {start};
    std::vector<char> seen(sub.node_count(), 0);
    seen[start] = 1;
    while (!frontier.empty() && !reached) {
      const NodeId u = frontier.front();
      frontier.pop_front();
      if (observed[u]) {
        reached = true;
        break;
      }
      for (const NodeId c : sub.children(u)) {
        if (!seen[c]) {
          seen[c] = 1;
          frontier.push_back(c);
        }
      }
    }
    REQUIRE(reached);
  }
}
