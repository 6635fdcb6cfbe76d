#pragma once

// Downstream feature construction: frozen tangent-space projections of a
// trained embedding plus trainable additive offsets, a separate Euclidean
// table for out-of-taxonomy covariates, patient-level averaging and padded
// token sequences, and a from-scratch logistic probe for scoring feature
// quality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypertax/errors.hpp"
#include "hypertax/geometry.hpp"
#include "hypertax/rng.hpp"
#include "hypertax/trainer.hpp"

namespace hypertax {

struct PatientRecord {
  std::string patient_id;
  int label = 0;
  std::vector<std::string> concepts;    // taxonomy codes, no duplicates
  std::vector<std::string> covariates;  // non-taxonomy ids, no duplicates
  double age = 0.0;
  double sex = 0.0;
  double cci = 0.0;
};

// Frozen log-mapped concept vectors with zero-initialized trainable offsets,
// frozen raw ball coordinates (for the raw-averaging comparison mode), and a
// trainable Euclidean table for covariates. Concepts and covariates live in
// separate vector spaces and may have different dimensions.
class FeatureSpace {
 public:
  FeatureSpace(const EmbeddingTable& table, const std::vector<std::string>& covariate_ids,
               std::size_t euclidean_dim, std::uint64_t seed)
      : tangent_dim_(table.dim()), euclidean_dim_(euclidean_dim) {
    if (table.size() == 0) throw DataError("feature space needs a non-empty embedding table");
    if (tangent_dim_ == 0) throw DataError("embedding table has dimension 0");
    if (euclidean_dim_ == 0) throw DataError("euclidean_dim must be >= 1");

    concept_codes_ = table.codes();
    concept_index_.reserve(concept_codes_.size());
    for (std::size_t i = 0; i < concept_codes_.size(); ++i) {
      concept_index_.emplace(concept_codes_[i], i);
    }
    frozen_.resize(concept_codes_.size() * tangent_dim_);
    ball_.resize(concept_codes_.size() * tangent_dim_);
    offsets_.assign(concept_codes_.size() * tangent_dim_, 0.0);
    for (std::size_t i = 0; i < concept_codes_.size(); ++i) {
      const auto row = table.row(i);
      const std::vector<double> tangent = log_map_origin(row, table.config.epsilon);
      std::copy(tangent.begin(), tangent.end(), frozen_.begin() + i * tangent_dim_);
      std::copy(row.begin(), row.end(), ball_.begin() + i * tangent_dim_);
    }

    for (const auto& id : covariate_ids) {
      if (concept_index_.count(id)) {
        throw DataError("covariate id '" + id + "' collides with a taxonomy concept");
      }
      if (!covariate_index_.emplace(id, covariate_ids_.size()).second) {
        throw DataError("duplicate covariate id '" + id + "'");
      }
      covariate_ids_.push_back(id);
    }
    euclidean_.resize(covariate_ids_.size() * euclidean_dim_);
    Rng rng(split_seed(seed, 0));
    const double r = 1.0 / std::sqrt(static_cast<double>(euclidean_dim_));
    for (double& v : euclidean_) v = rng.uniform(-r, r);
  }

  std::size_t tangent_dim() const { return tangent_dim_; }
  std::size_t euclidean_dim() const { return euclidean_dim_; }
  std::size_t concept_count() const { return concept_codes_.size(); }
  std::size_t covariate_count() const { return covariate_ids_.size(); }

  bool has_concept(std::string_view id) const {
    return concept_index_.count(std::string(id)) > 0;
  }
  bool has_covariate(std::string_view id) const {
    return covariate_index_.count(std::string(id)) > 0;
  }

  std::span<const double> frozen(std::string_view concept_id) const {
    return {frozen_.data() + concept_row(concept_id) * tangent_dim_, tangent_dim_};
  }

  std::span<const double> ball(std::string_view concept_id) const {
    return {ball_.data() + concept_row(concept_id) * tangent_dim_, tangent_dim_};
  }

  std::span<double> offset(std::string_view concept_id) {
    return {offsets_.data() + concept_row(concept_id) * tangent_dim_, tangent_dim_};
  }

  std::span<const double> offset(std::string_view concept_id) const {
    return {offsets_.data() + concept_row(concept_id) * tangent_dim_, tangent_dim_};
  }

  std::span<double> euclidean(std::string_view covariate_id) {
    return {euclidean_.data() + covariate_row(covariate_id) * euclidean_dim_, euclidean_dim_};
  }

  std::span<const double> euclidean(std::string_view covariate_id) const {
    return {euclidean_.data() + covariate_row(covariate_id) * euclidean_dim_, euclidean_dim_};
  }

  const std::vector<double>& frozen_data() const { return frozen_; }

 private:
  std::size_t concept_row(std::string_view id) const {
    const auto it = concept_index_.find(std::string(id));
    if (it == concept_index_.end()) {
      throw LookupError("unknown taxonomy concept '" + std::string(id) + "'");
    }
    return it->second;
  }

  std::size_t covariate_row(std::string_view id) const {
    const auto it = covariate_index_.find(std::string(id));
    if (it == covariate_index_.end()) {
      throw LookupError("unknown covariate '" + std::string(id) + "'");
    }
    return it->second;
  }

  std::size_t tangent_dim_;
  std::size_t euclidean_dim_;
  std::vector<std::string> concept_codes_;
  std::unordered_map<std::string, std::size_t> concept_index_;
  std::vector<std::string> covariate_ids_;
  std::unordered_map<std::string, std::size_t> covariate_index_;
  std::vector<double> frozen_;  // never mutated after construction
  std::vector<double> ball_;    // raw coordinates, same layout as frozen_
  std::vector<double> offsets_;
  std::vector<double> euclidean_;
};

inline FeatureSpace build_feature_space(const EmbeddingTable& table,
                                        const std::vector<std::string>& covariate_ids = {},
                                        std::size_t euclidean_dim = 256,
                                        std::uint64_t seed = 42) {
  return FeatureSpace(table, covariate_ids, euclidean_dim, seed);
}

// Taxonomy concept: frozen tangent vector plus its offset. Covariate: its
// Euclidean row. The two never mix.
inline std::vector<double> effective_embedding(const FeatureSpace& space, std::string_view id) {
  if (space.has_concept(id)) {
    const auto f = space.frozen(id);
    const auto o = space.offset(id);
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] + o[i];
    return out;
  }
  const auto e = space.euclidean(id);  // throws LookupError when unknown to both
  return {e.begin(), e.end()};
}

enum class AverageDomain {
  Tangent,  // mean of log-mapped vectors plus offsets (default)
  Ball,     // mean of raw ball coordinates, offsets ignored; comparison mode
};

struct PatientVector {
  std::vector<double> values;
  std::size_t concepts_used = 0;  // 0 means the zero-vector fallback fired
};

inline PatientVector average_patient_vector(const FeatureSpace& space, const PatientRecord& record,
                                            AverageDomain domain = AverageDomain::Tangent) {
  PatientVector out;
  out.values.assign(space.tangent_dim(), 0.0);
  if (record.concepts.empty()) return out;
  for (const auto& code : record.concepts) {
    if (domain == AverageDomain::Tangent) {
      const auto f = space.frozen(code);
      const auto o = space.offset(code);
      for (std::size_t i = 0; i < f.size(); ++i) out.values[i] += f[i] + o[i];
    } else {
      const auto b = space.ball(code);
      for (std::size_t i = 0; i < b.size(); ++i) out.values[i] += b[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(record.concepts.size());
  for (double& v : out.values) v *= inv;
  out.concepts_used = record.concepts.size();
  return out;
}

// Mean of the record's covariate embeddings; zero vector when the record
// has none.
inline PatientVector average_covariate_vector(const FeatureSpace& space,
                                              const PatientRecord& record) {
  PatientVector out;
  out.values.assign(space.euclidean_dim(), 0.0);
  if (record.covariates.empty()) return out;
  for (const auto& id : record.covariates) {
    const auto e = space.euclidean(id);
    for (std::size_t i = 0; i < e.size(); ++i) out.values[i] += e[i];
  }
  const double inv = 1.0 / static_cast<double>(record.covariates.size());
  for (double& v : out.values) v *= inv;
  out.concepts_used = record.covariates.size();
  return out;
}

struct PaddedSequence {
  std::vector<std::vector<double>> tokens;  // max_len entries, pad = zeros
  std::vector<bool> mask;                   // true exactly on real tokens
};

// Taxonomy concepts in record order, zero-padded to max_len. Covariates are
// not sequence tokens (they live in a different vector space).
inline PaddedSequence padded_sequence(const FeatureSpace& space, const PatientRecord& record,
                                      std::size_t max_len) {
  if (record.concepts.size() > max_len) {
    throw DataError("patient '" + record.patient_id + "' has " +
                    std::to_string(record.concepts.size()) + " concepts, max_len is " +
                    std::to_string(max_len));
  }
  PaddedSequence out;
  out.tokens.reserve(max_len);
  out.mask.assign(max_len, false);
  for (std::size_t i = 0; i < record.concepts.size(); ++i) {
    out.tokens.push_back(effective_embedding(space, record.concepts[i]));
    out.mask[i] = true;
  }
  out.tokens.resize(max_len, std::vector<double>(space.tangent_dim(), 0.0));
  return out;
}

struct ProbeConfig {
  std::size_t max_iters = 2000;
  double tolerance = 1e-7;  // stop when no gradient entry exceeds this
  double l2 = 0.0;
};

struct LogisticProbe {
  std::vector<double> weights;
  double bias = 0.0;

  double score(std::span<const double> x) const {
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
    return 1.0 / (1.0 + std::exp(-z));
  }
};

// Full-batch gradient descent on mean logistic loss. The step size
// 4 / max_i(||x_i||^2 + 1) is the inverse curvature bound of the loss (the
// +1 accounts for the bias column), which makes plain GD monotone without a
// line search.
inline LogisticProbe linear_probe_train(const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels,
                                        const ProbeConfig& config = {}) {
  if (features.size() < 2) throw DataError("probe needs at least 2 examples");
  if (features.size() != labels.size()) throw DataError("features/labels size mismatch");
  const std::size_t dim = features.front().size();
  if (dim == 0) throw DataError("probe features are empty");
  bool saw_pos = false;
  bool saw_neg = false;
  double max_sq = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) throw DataError("inconsistent feature dimensions");
    if (!all_finite(features[i])) throw DataError("non-finite feature value");
    if (labels[i] == 1) {
      saw_pos = true;
    } else if (labels[i] == 0) {
      saw_neg = true;
    } else {
      throw DataError("probe labels must be 0 or 1");
    }
    max_sq = std::max(max_sq, squared_norm(features[i]));
  }
  if (!saw_pos || !saw_neg) throw DataError("probe needs both classes present");

  const std::size_t n = features.size();
  const double step = 4.0 / (max_sq + 1.0);
  LogisticProbe probe;
  probe.weights.assign(dim, 0.0);

  std::vector<double> grad_w(dim);
  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = probe.score(features[i]) - static_cast<double>(labels[i]);
      for (std::size_t d = 0; d < dim; ++d) grad_w[d] += r * features[i][d];
      grad_b += r;
    }
    double max_g = std::abs(grad_b / static_cast<double>(n));
    for (std::size_t d = 0; d < dim; ++d) {
      grad_w[d] = grad_w[d] / static_cast<double>(n) + config.l2 * probe.weights[d];
      max_g = std::max(max_g, std::abs(grad_w[d]));
    }
    grad_b /= static_cast<double>(n);
    if (max_g < config.tolerance) break;
    for (std::size_t d = 0; d < dim; ++d) probe.weights[d] -= step * grad_w[d];
    probe.bias -= step * grad_b;
  }
  return probe;
}

}  // namespace hypertax
