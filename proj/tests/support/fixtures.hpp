#pragma once

// Shared fixtures for the test binaries: synthetic graphs, random embedding
// tables, an independent brute-force rank oracle, and process helpers for
// driving the CLI.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include <hypertax/hypertax.hpp>

namespace fixtures {

// Balanced tree with the root at level 0 and `depth` levels below it;
// branching 3, depth 5 gives 364 nodes and 363 edges.
inline hypertax::KnowledgeGraph make_balanced_tree(std::size_t branching, std::size_t depth) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::size_t level_start = 0;
  std::size_t level_size = 1;
  std::size_t next = 1;
  for (std::size_t level = 0; level < depth; ++level) {
    for (std::size_t i = 0; i < level_size; ++i) {
      const std::size_t parent = level_start + i;
      for (std::size_t b = 0; b < branching; ++b) {
        edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(next));
        ++next;
      }
    }
    level_start += level_size;
    level_size *= branching;
  }
  return hypertax::KnowledgeGraph::from_edges(edges);
}

// Random tree: node i > 0 hangs under a uniform parent in [0, i).
inline hypertax::KnowledgeGraph make_random_tree(std::size_t n, std::uint64_t seed) {
  hypertax::Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = rng.uniform_index(i);
    edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(i));
  }
  return hypertax::KnowledgeGraph::from_edges(edges);
}

// Random tree plus extra parent links, giving multi-parent (diamond) nodes.
inline hypertax::KnowledgeGraph make_random_dag(std::size_t n, std::size_t extra_edges,
                                                std::uint64_t seed) {
  hypertax::Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = rng.uniform_index(i);
    edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(i));
  }
  std::size_t added = 0;
  while (added < extra_edges) {
    const std::size_t child = 1 + rng.uniform_index(n - 1);
    const std::size_t parent = rng.uniform_index(child);
    edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(child));
    ++added;  // duplicates collapse inside from_edges
  }
  return hypertax::KnowledgeGraph::from_edges(edges);
}

inline std::vector<double> random_interior_point(hypertax::Rng& rng, std::size_t dim,
                                                 double max_norm) {
  std::vector<double> x(dim);
  double n2 = 0.0;
  for (double& v : x) {
    v = rng.uniform(-1.0, 1.0);
    n2 += v * v;
  }
  const double target = max_norm * rng.uniform01();
  const double scale = n2 > 0.0 ? target / std::sqrt(n2) : 0.0;
  for (double& v : x) v *= scale;
  return x;
}

// Rows at uniformly random directions with norms up to max_norm; unlike a
// freshly initialized table, distances here are well spread out.
inline hypertax::EmbeddingTable random_ball_table(const hypertax::KnowledgeGraph& graph,
                                                  std::size_t dim, std::uint64_t seed,
                                                  double max_norm = 0.8) {
  std::vector<std::string> codes;
  for (hypertax::NodeId i = 0; i < graph.node_count(); ++i) codes.push_back(graph.code(i));
  hypertax::EmbeddingTable table(std::move(codes), dim);
  hypertax::Rng rng(seed);
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto x = random_interior_point(rng, dim, max_norm);
    std::copy(x.begin(), x.end(), table.row(r).begin());
  }
  return table;
}

// Independent mean-rank oracle: per edge, materialize the full candidate
// list, sort it by distance, and locate the true child behind every
// candidate it ties with.
inline double brute_force_mean_rank(const hypertax::KnowledgeGraph& graph,
                                    const hypertax::EmbeddingTable& table) {
  double total = 0.0;
  for (const auto& [u, v] : graph.edges()) {
    const auto row_u = table.row(*table.row_of(graph.code(u)));
    const auto row_v = table.row(*table.row_of(graph.code(v)));
    const double d_uv = hypertax::distance(row_u, row_v, table.config.epsilon);
    std::vector<double> dists;
    for (hypertax::NodeId w = 0; w < graph.node_count(); ++w) {
      if (w == u || w == v) continue;
      if (graph.is_connected(u, w, false)) continue;
      const auto row_w = table.row(*table.row_of(graph.code(w)));
      dists.push_back(hypertax::distance(row_u, row_w, table.config.epsilon));
    }
    std::sort(dists.begin(), dists.end());
    std::size_t rank = 1;
    for (const double d : dists) {
      if (d <= d_uv) ++rank;
    }
    total += static_cast<double>(rank);
  }
  return total / static_cast<double>(graph.edge_count());
}

// Random orthogonal matrix via Gram-Schmidt on a random square matrix.
inline std::vector<std::vector<double>> random_orthogonal(std::size_t dim, std::uint64_t seed) {
  hypertax::Rng rng(seed);
  std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
  for (auto& row : q) {
    for (double& v : row) {
      v = rng.uniform(-1.0, 1.0) + rng.uniform(-1.0, 1.0) + rng.uniform(-1.0, 1.0);
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double proj = hypertax::dot(q[i], q[j]);
      for (std::size_t k = 0; k < dim; ++k) q[i][k] -= proj * q[j][k];
    }
    const double norm = std::sqrt(hypertax::squared_norm(q[i]));
    for (double& v : q[i]) v /= norm;
  }
  return q;
}

inline std::vector<double> apply_matrix(const std::vector<std::vector<double>>& m,
                                        std::span<const double> x) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) out[i] += m[i][j] * x[j];
  }
  return out;
}

// Fresh per-test scratch directory under the build tree's working dir.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path("test_scratch") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Runs the CLI binary with the given arguments; returns the exit code and
// optionally captures combined stdout+stderr.
inline int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(HYPERTAX_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string captured;
  std::array<char, 4096> buf;
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) captured.append(buf.data(), got);
  const int status = pclose(pipe);
  if (output) *output = std::move(captured);
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

}  // namespace fixtures
