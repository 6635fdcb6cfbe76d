#pragma once

// Embedding trainer: negative-sampling cross-entropy loss over hyperbolic
// distances, minimized with Riemannian SGD (inverse-metric rescale of the
// Euclidean gradient, step, retract into the ball). Burn-in epochs run at a
// tenth of the learning rate to stabilize the early geometry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypertax/config.hpp"
#include "hypertax/errors.hpp"
#include "hypertax/geometry.hpp"
#include "hypertax/graph.hpp"
#include "hypertax/rng.hpp"

namespace hypertax {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  EmbeddingTable(std::vector<std::string> codes, std::size_t dim)
      : dim_(dim), codes_(std::move(codes)), data_(codes_.size() * dim, 0.0) {
    rebuild_index();
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return codes_.size(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  const std::vector<std::string>& codes() const { return codes_; }
  const std::string& code(std::size_t i) const { return codes_[i]; }

  std::optional<std::size_t> row_of(std::string_view code) const {
    const auto it = index_.find(std::string(code));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void rebuild_index() {
    index_.clear();
    index_.reserve(codes_.size());
    for (std::size_t i = 0; i < codes_.size(); ++i) index_.emplace(codes_[i], i);
  }

  // Provenance metadata.
  TrainingConfig config;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::size_t epochs_run = 0;
  std::string graph_digest;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> codes_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Coordinates drawn uniformly from [-init_range, +init_range]: everything
// starts near the origin. Deterministic given config.seed.
inline EmbeddingTable init_embeddings(const KnowledgeGraph& graph, const TrainingConfig& config) {
  config.validate();
  if (graph.node_count() == 0) throw GraphError("cannot initialize embeddings of an empty graph");
  std::vector<std::string> codes;
  codes.reserve(graph.node_count());
  for (NodeId i = 0; i < graph.node_count(); ++i) codes.push_back(graph.code(i));
  EmbeddingTable table(std::move(codes), config.dim);
  table.config = config;
  Rng rng(split_seed(config.seed, 0));
  for (double& v : table.data()) v = rng.uniform(-config.init_range, config.init_range);
  return table;
}

struct NegativeSample {
  NodeId anchor = 0;
  std::vector<NodeId> sampled;
};

// Uniform sample, without replacement, from the nodes not connected to u
// under the configured directedness. The anchor itself is never sampled. If
// fewer than negatives_k nodes are eligible, all of them are returned.
inline NegativeSample sample_negatives(const KnowledgeGraph& graph, NodeId u,
                                       const TrainingConfig& config, Rng& rng) {
  const std::size_t n = graph.node_count();
  const std::size_t connected = graph.connected_count(u, config.directed);
  const std::size_t eligible = n - 1 - connected;
  if (eligible == 0) {
    throw GraphError("node '" + graph.code(u) + "' has no non-neighbors to sample");
  }
  const std::size_t k = config.negatives_k;
  NegativeSample out;
  out.anchor = u;

  const bool enumerate = eligible <= k || eligible < 2 * k || eligible * 4 < n;
  if (enumerate) {
    std::vector<NodeId> pool;
    pool.reserve(eligible);
    for (NodeId w = 0; w < n; ++w) {
      if (w == u) continue;
      if (graph.is_connected(u, w, config.directed)) continue;
      pool.push_back(w);
    }
    if (pool.size() <= k) {
      out.sampled = std::move(pool);
      return out;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    out.sampled = std::move(pool);
    return out;
  }

  out.sampled.reserve(k);
  std::vector<NodeId> taken;  // small, kept sorted
  taken.reserve(k);
  while (out.sampled.size() < k) {
    const NodeId w = static_cast<NodeId>(rng.uniform_index(n));
    if (w == u) continue;
    const auto it = std::lower_bound(taken.begin(), taken.end(), w);
    if (it != taken.end() && *it == w) continue;
    if (graph.is_connected(u, w, config.directed)) continue;
    taken.insert(it, w);
    out.sampled.push_back(w);
  }
  return out;
}

struct PairLoss {
  double loss = 0.0;
  std::vector<double> grad_u;
  std::vector<double> grad_v;
  std::vector<std::vector<double>> grad_negatives;  // aligned with sampled order
};

namespace detail {

struct PairLossScratch {
  std::vector<double> tmp_u;
  std::vector<double> tmp_other;
  std::vector<double> neg_dist;
};

// loss = -ln( e^{-d(u,v)} / Z ),  Z = e^{-d(u,v)} + sum_w e^{-d(u,w)} [+ 1]
// The optional +1 is the anchor's own e^{-d(u,u)} term, kept behind
// include_self for comparison runs. Gradients go through the analytic
// distance derivatives: d loss / d d(u,v) = 1 - p_v, d loss / d d(u,w) = -p_w
// with p the softmax weights.
inline void pair_loss_into(const EmbeddingTable& table, NodeId u, NodeId v,
                           const NegativeSample& negatives, bool include_self,
                           PairLoss& out, PairLossScratch& scratch) {
  if (u == v) throw TrainError("positive pair must join two distinct nodes");
  const std::size_t dim = table.dim();
  const double eps = table.config.epsilon;
  const auto row_u = table.row(u);
  const auto row_v = table.row(v);
  const std::size_t k = negatives.sampled.size();

  scratch.tmp_u.resize(dim);
  scratch.tmp_other.resize(dim);
  scratch.neg_dist.resize(k);

  const double d_uv = distance(row_u, row_v, eps);
  double z = std::exp(-d_uv);
  const double s_v = z;
  for (std::size_t i = 0; i < k; ++i) {
    scratch.neg_dist[i] = distance(row_u, table.row(negatives.sampled[i]), eps);
    z += std::exp(-scratch.neg_dist[i]);
  }
  if (include_self) z += 1.0;  // e^{-d(u,u)} = 1, a constant competitor

  out.loss = d_uv + std::log(z);
  out.grad_u.assign(dim, 0.0);
  out.grad_v.assign(dim, 0.0);
  out.grad_negatives.resize(k);

  const double coeff_v = 1.0 - s_v / z;
  distance_grad(row_u, row_v, scratch.tmp_u, scratch.tmp_other, eps);
  for (std::size_t i = 0; i < dim; ++i) {
    out.grad_u[i] += coeff_v * scratch.tmp_u[i];
    out.grad_v[i] = coeff_v * scratch.tmp_other[i];
  }
  for (std::size_t w = 0; w < k; ++w) {
    const double coeff_w = -std::exp(-scratch.neg_dist[w]) / z;
    auto& grad_w = out.grad_negatives[w];
    grad_w.resize(dim);
    distance_grad(row_u, table.row(negatives.sampled[w]), scratch.tmp_u, scratch.tmp_other, eps);
    for (std::size_t i = 0; i < dim; ++i) {
      out.grad_u[i] += coeff_w * scratch.tmp_u[i];
      grad_w[i] = coeff_w * scratch.tmp_other[i];
    }
  }
}

}  // namespace detail

inline PairLoss pair_loss(const EmbeddingTable& table, NodeId u, NodeId v,
                          const NegativeSample& negatives, bool include_self = false) {
  PairLoss out;
  detail::PairLossScratch scratch;
  detail::pair_loss_into(table, u, v, negatives, include_self, out, scratch);
  return out;
}

// One RSGD update: rescale the Euclidean gradient by the inverse metric,
// step against it, retract into the ball.
inline void rsgd_step(EmbeddingTable& table, NodeId node, std::span<const double> euclidean_grad,
                      double effective_lr) {
  auto row = table.row(node);
  for (const double g : euclidean_grad) {
    if (!std::isfinite(g)) {
      throw TrainError("non-finite gradient for node '" + table.code(node) + "'");
    }
  }
  const double a = 1.0 - squared_norm(row);
  const double f = effective_lr * a * a / 4.0;
  for (std::size_t i = 0; i < row.size(); ++i) row[i] -= f * euclidean_grad[i];
  project_to_ball_inplace(row, table.config.epsilon);
}

// Stable fingerprint of a graph's content (codes + edges), FNV-1a 64.
inline std::string graph_digest(const KnowledgeGraph& graph) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::string_view s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;  // separator
    h *= 0x100000001b3ULL;
  };
  for (NodeId i = 0; i < graph.node_count(); ++i) mix(graph.code(i));
  for (const auto& [p, c] : graph.edges()) {
    mix(graph.code(p));
    mix(graph.code(c));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double effective_lr = 0.0;
};

struct TrainOptions {
  std::size_t threads = 1;  // 1 = deterministic; >1 trades determinism for speed
  std::function<void(const EpochStats&)> progress;
  // Called after every single node update with the node and its new row.
  // Deterministic mode only; ignored when threads > 1.
  std::function<void(NodeId, std::span<const double>)> step_observer;
};

namespace detail {

inline void train_edge_range(const KnowledgeGraph& graph, const TrainingConfig& config,
                             EmbeddingTable& table, const std::vector<std::size_t>& order,
                             std::size_t begin, std::size_t end, double effective_lr, Rng& rng,
                             double& loss_sum,
                             const std::function<void(NodeId, std::span<const double>)>& observer) {
  PairLoss pair;
  PairLossScratch scratch;
  const auto& edges = graph.edges();
  for (std::size_t idx = begin; idx < end; ++idx) {
    const auto [u, v] = edges[order[idx]];
    const NegativeSample negatives = sample_negatives(graph, u, config, rng);
    pair_loss_into(table, u, v, negatives, config.include_self_in_denominator, pair, scratch);
    rsgd_step(table, u, pair.grad_u, effective_lr);
    if (observer) observer(u, table.row(u));
    rsgd_step(table, v, pair.grad_v, effective_lr);
    if (observer) observer(v, table.row(v));
    for (std::size_t w = 0; w < negatives.sampled.size(); ++w) {
      rsgd_step(table, negatives.sampled[w], pair.grad_negatives[w], effective_lr);
      if (observer) observer(negatives.sampled[w], table.row(negatives.sampled[w]));
    }
    loss_sum += pair.loss;
  }
}

}  // namespace detail

// Runs the full schedule: per epoch, shuffle the positive edges, draw fresh
// negatives per edge, update u, v and every sampled negative. Epochs before
// burn_in_epochs use learning_rate / 10. Single-threaded mode is
// bit-reproducible for a given (graph, config); parallel mode partitions
// each epoch's edges across workers with unsynchronized row updates and is
// documented as nondeterministic.
inline EmbeddingTable train(const KnowledgeGraph& graph, const TrainingConfig& config,
                            const TrainOptions& options = {}) {
  config.validate();
  if (graph.node_count() == 0) throw GraphError("cannot train on an empty graph");
  if (graph.edge_count() == 0) throw GraphError("graph has no edges to train on");

  EmbeddingTable table = init_embeddings(graph, config);
  table.graph_digest = graph_digest(graph);

  std::vector<std::size_t> order(graph.edge_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Rng shuffle_rng(split_seed(config.seed, 1));
  const std::size_t threads =
      options.threads > 1 ? std::min<std::size_t>(options.threads, order.size()) : 1;

  double mean_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double effective_lr =
        epoch < config.burn_in_epochs ? config.learning_rate / 10.0 : config.learning_rate;
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    if (threads == 1) {
      Rng rng(split_seed(config.seed, 2 + epoch));
      detail::train_edge_range(graph, config, table, order, 0, order.size(), effective_lr, rng,
                               loss_sum, options.step_observer);
    } else {
      std::vector<std::thread> workers;
      std::vector<double> partial(threads, 0.0);
      const std::size_t chunk = (order.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(order.size(), begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, t, begin, end] {
          Rng rng(split_seed(config.seed, 2 + epoch * threads + t));
          detail::train_edge_range(graph, config, table, order, begin, end, effective_lr, rng,
                                   partial[t], nullptr);
        });
      }
      for (auto& w : workers) w.join();
      for (const double p : partial) loss_sum += p;
    }

    mean_loss = loss_sum / static_cast<double>(order.size());
    if (options.progress) options.progress({epoch, mean_loss, effective_lr});
  }

  table.final_loss = mean_loss;
  table.epochs_run = config.epochs;
  return table;
}

}  // namespace hypertax
