#pragma once

// Embedding quality evaluation: per-edge rank of the true child among
// non-neighbor candidates, and the hyperparameter sweep harness that trains
// one embedding per grid cell and reports mean rank per cell.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hypertax/config.hpp"
#include "hypertax/errors.hpp"
#include "hypertax/geometry.hpp"
#include "hypertax/graph.hpp"
#include "hypertax/rng.hpp"
#include "hypertax/trainer.hpp"

namespace hypertax {

// How the candidate set per positive edge is formed: every non-neighbor of
// the anchor (exact) or a per-edge uniform sample of them (tractable on
// large graphs).
struct CandidatePolicy {
  enum class Kind { All, Sampled };
  Kind kind = Kind::All;
  std::size_t sample_k = 0;
  std::uint64_t seed = 42;  // sampling only; each edge gets its own stream

  static CandidatePolicy all() { return {}; }

  static CandidatePolicy sampled(std::size_t k, std::uint64_t seed = 42) {
    if (k < 1) throw ConfigError("sampled candidate policy needs k >= 1");
    CandidatePolicy p;
    p.kind = Kind::Sampled;
    p.sample_k = k;
    p.seed = seed;
    return p;
  }

  // "all" or "sampled:<k>"
  static CandidatePolicy parse(std::string_view text, std::uint64_t seed = 42) {
    if (text == "all") return all();
    const std::string_view prefix = "sampled:";
    if (text.substr(0, prefix.size()) == prefix) {
      const std::string ks(text.substr(prefix.size()));
      std::size_t k = 0;
      std::size_t pos = 0;
      try {
        k = std::stoull(ks, &pos);
      } catch (const std::exception&) {
        throw ConfigError("bad candidate policy '" + std::string(text) + "'");
      }
      if (pos != ks.size() || k < 1) {
        throw ConfigError("bad candidate policy '" + std::string(text) + "'");
      }
      return sampled(k, seed);
    }
    throw ConfigError("bad candidate policy '" + std::string(text) +
                      "' (expected all or sampled:<k>)");
  }

  std::string label() const {
    if (kind == Kind::All) return "all";
    return "sampled:" + std::to_string(sample_k);
  }
};

struct RankReport {
  double mean_rank = 0.0;
  std::vector<std::size_t> ranks;  // one per evaluated edge, graph edge order
  std::size_t evaluated_edges = 0;
  std::string candidate_policy;
};

namespace detail {

// Rows aligned to graph node ids, plus cached 1 - ||x||^2 per row. Built
// once so the per-pair distance loop does no hashing and no revalidation.
struct AlignedTable {
  std::size_t dim = 0;
  std::vector<const double*> rows;
  std::vector<double> alpha;
};

inline AlignedTable align_table(const KnowledgeGraph& graph, const EmbeddingTable& table) {
  AlignedTable at;
  at.dim = table.dim();
  at.rows.resize(graph.node_count());
  at.alpha.resize(graph.node_count());
  std::vector<std::string> missing;
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    const auto row = table.row_of(graph.code(i));
    if (!row) {
      missing.push_back(graph.code(i));
      continue;
    }
    const auto span = table.row(*row);
    require_in_ball(span, table.config.epsilon, "mean_rank");
    at.rows[i] = span.data();
    at.alpha[i] = 1.0 - squared_norm(span);
  }
  if (!missing.empty()) {
    std::string msg = "embedding table is missing " + std::to_string(missing.size()) + " node(s):";
    for (std::size_t i = 0; i < missing.size() && i < 8; ++i) msg += " '" + missing[i] + "'";
    if (missing.size() > 8) msg += " ...";
    throw MetricError(msg);
  }
  return at;
}

inline double aligned_distance(const AlignedTable& at, NodeId a, NodeId b) {
  double diff2 = 0.0;
  const double* pa = at.rows[a];
  const double* pb = at.rows[b];
  for (std::size_t i = 0; i < at.dim; ++i) {
    const double d = pa[i] - pb[i];
    diff2 += d * d;
  }
  return arcosh(1.0 + 2.0 * diff2 / (at.alpha[a] * at.alpha[b]));
}

// Rank of v among {v} + candidates, pessimistic ties: candidates at the same
// distance as v count as ranked ahead of it.
inline std::size_t rank_of_edge(const AlignedTable& at, const KnowledgeGraph& graph, NodeId u,
                                NodeId v, const CandidatePolicy& policy, std::size_t edge_index) {
  const double d_uv = aligned_distance(at, u, v);
  std::size_t rank = 1;
  const std::size_t n = graph.node_count();

  if (policy.kind == CandidatePolicy::Kind::All) {
    for (NodeId w = 0; w < n; ++w) {
      if (w == u || w == v) continue;
      if (graph.is_connected(u, w, false)) continue;
      if (aligned_distance(at, u, w) <= d_uv) ++rank;
    }
    return rank;
  }

  const std::size_t connected = graph.connected_count(u, false);
  const std::size_t eligible = n - 1 - connected;
  Rng rng(split_seed(policy.seed, static_cast<std::uint64_t>(edge_index)));
  if (eligible <= policy.sample_k) {
    for (NodeId w = 0; w < n; ++w) {
      if (w == u || w == v) continue;
      if (graph.is_connected(u, w, false)) continue;
      if (aligned_distance(at, u, w) <= d_uv) ++rank;
    }
    return rank;
  }
  std::vector<NodeId> taken;
  taken.reserve(policy.sample_k);
  std::size_t drawn = 0;
  while (drawn < policy.sample_k) {
    const NodeId w = static_cast<NodeId>(rng.uniform_index(n));
    if (w == u) continue;
    const auto it = std::lower_bound(taken.begin(), taken.end(), w);
    if (it != taken.end() && *it == w) continue;
    if (graph.is_connected(u, w, false)) continue;
    taken.insert(it, w);
    ++drawn;
    if (aligned_distance(at, u, w) <= d_uv) ++rank;
  }
  return rank;
}

}  // namespace detail

// Mean rank of the true child over all positive edges. Evaluation is always
// undirected: an edge in either direction disqualifies a candidate. Rows are
// matched to graph nodes by concept code; any gap is an error.
inline RankReport mean_rank(const KnowledgeGraph& graph, const EmbeddingTable& table,
                            const CandidatePolicy& policy = CandidatePolicy::all(),
                            std::size_t threads = 1) {
  if (graph.edge_count() == 0) throw MetricError("graph has no edges to evaluate");
  const detail::AlignedTable at = detail::align_table(graph, table);
  const auto& edges = graph.edges();

  RankReport report;
  report.candidate_policy = policy.label();
  report.evaluated_edges = edges.size();
  report.ranks.resize(edges.size());

  const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(threads, 1), edges.size());
  if (workers <= 1) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      report.ranks[e] = detail::rank_of_edge(at, graph, edges[e].first, edges[e].second, policy, e);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t e = next.fetch_add(1);
          if (e >= edges.size()) return;
          report.ranks[e] =
              detail::rank_of_edge(at, graph, edges[e].first, edges[e].second, policy, e);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0;
  for (const std::size_t r : report.ranks) sum += static_cast<double>(r);
  report.mean_rank = sum / static_cast<double>(report.ranks.size());
  return report;
}

// One axis combination of the sweep grid, in row order dim, burn-in,
// negatives, directedness.
struct SweepRow {
  std::size_t dim = 0;
  std::size_t burn_in_epochs = 0;
  std::size_t negatives_k = 0;
  bool directed = true;
  double mean_rank = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  std::string error;  // empty on success
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

struct SweepGrid {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> burn_ins;
  std::vector<std::size_t> negatives;
  std::vector<bool> directed_modes;
  TrainingConfig base;

  std::size_t cell_count() const {
    return dims.size() * burn_ins.size() * negatives.size() * directed_modes.size();
  }

  // {"dims": [...], "burn_in_epochs": [...], "negatives_k": [...],
  //  "directed": [...], "base": {training config}} with every axis required
  // and non-empty.
  static SweepGrid from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("sweep grid must be a JSON object");
    static const std::unordered_set<std::string> known = {"dims", "burn_in_epochs", "negatives_k",
                                                          "directed", "base"};
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (!known.count(key)) throw ConfigError("unknown sweep grid key: '" + key + "'");
    }
    SweepGrid g;
    try {
      g.dims = j.at("dims").get<std::vector<std::size_t>>();
      g.burn_ins = j.at("burn_in_epochs").get<std::vector<std::size_t>>();
      g.negatives = j.at("negatives_k").get<std::vector<std::size_t>>();
      g.directed_modes = j.at("directed").get<std::vector<bool>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("invalid sweep grid: ") + e.what());
    }
    // Base may be incomplete on its own (grid axes override dim, burn-in,
    // negatives and directedness per cell), so defer cross-field validation
    // to the effective cell configs.
    if (j.contains("base")) g.base = TrainingConfig::from_json_partial(j.at("base"));
    if (g.dims.empty() || g.burn_ins.empty() || g.negatives.empty() || g.directed_modes.empty()) {
      throw ConfigError("sweep grid axes must all be non-empty");
    }
    return g;
  }
};

struct SweepOptions {
  std::size_t threads = 1;  // cells run in parallel; each cell stays deterministic
  CandidatePolicy policy = CandidatePolicy::all();
  std::function<void(const SweepRow&)> progress;
};

// Trains and evaluates one embedding per grid cell. All cells share the
// base seed so row differences reflect hyperparameters, not initialization.
// Rows keep grid order regardless of thread count; a failed cell records
// its error and leaves mean_rank NaN.
inline SweepReport run_sweep(const KnowledgeGraph& graph, const SweepGrid& grid,
                             const SweepOptions& options = {}) {
  if (grid.cell_count() == 0) throw ConfigError("sweep grid is empty");

  std::vector<SweepRow> rows(grid.cell_count());
  std::size_t cell = 0;
  for (const std::size_t dim : grid.dims) {
    for (const std::size_t burn : grid.burn_ins) {
      for (const std::size_t k : grid.negatives) {
        for (const bool dir : grid.directed_modes) {
          auto& row = rows[cell++];
          row.dim = dim;
          row.burn_in_epochs = burn;
          row.negatives_k = k;
          row.directed = dir;
        }
      }
    }
  }

  std::mutex progress_mu;
  const auto run_cell = [&](SweepRow& row) {
    const auto started = std::chrono::steady_clock::now();
    try {
      TrainingConfig config = grid.base;
      config.dim = row.dim;
      config.burn_in_epochs = row.burn_in_epochs;
      config.negatives_k = row.negatives_k;
      config.directed = row.directed;
      const EmbeddingTable table = train(graph, config);
      row.mean_rank = mean_rank(graph, table, options.policy).mean_rank;
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (options.progress) {
      const std::lock_guard<std::mutex> lock(progress_mu);
      options.progress(row);
    }
  };

  const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(options.threads, 1),
                                                    rows.size());
  if (workers <= 1) {
    for (auto& row : rows) run_cell(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= rows.size()) return;
          run_cell(rows[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  return {std::move(rows)};
}

}  // namespace hypertax
