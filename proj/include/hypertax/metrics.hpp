#pragma once

// Downstream scalar metrics on probability predictions: AUROC in the
// Mann-Whitney formulation and the binned calibration error E_avg.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "hypertax/errors.hpp"

namespace hypertax {

struct ProbPrediction {
  double prediction = 0.0;  // in [0, 1]
  int label = 0;            // 0 or 1
};

namespace detail {

inline void check_predictions(const std::vector<ProbPrediction>& preds) {
  if (preds.empty()) throw MetricError("empty prediction set");
  for (const auto& p : preds) {
    if (!std::isfinite(p.prediction) || p.prediction < 0.0 || p.prediction > 1.0) {
      throw MetricError("prediction out of [0, 1]");
    }
    if (p.label != 0 && p.label != 1) throw MetricError("label must be 0 or 1");
  }
}

}  // namespace detail

// P(score of random positive > score of random negative), ties counted 1/2.
// Computed from average ranks: U = R_pos - n_pos(n_pos+1)/2, AUROC = U /
// (n_pos * n_neg). Rank arithmetic is exact here (half-integers), so the
// result matches all-pairs brute force bit for bit.
inline double auroc(const std::vector<ProbPrediction>& preds) {
  detail::check_predictions(preds);
  const std::size_t n = preds.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].prediction < preds[b].prediction;
  });

  std::size_t n_pos = 0;
  for (const auto& p : preds) n_pos += static_cast<std::size_t>(p.label);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("auroc undefined: predictions contain a single class");
  }

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && preds[idx[j]].prediction == preds[idx[i]].prediction) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (preds[idx[t]].label == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// E_avg: sort by prediction, split into n_bins equal-count bins (bin b spans
// indices [b*N/n_bins, (b+1)*N/n_bins)), then weight each bin's absolute gap
// between mean label and mean prediction by its share of the data.
inline double calibration_eavg(const std::vector<ProbPrediction>& preds, std::size_t n_bins = 10) {
  detail::check_predictions(preds);
  if (n_bins < 1) throw MetricError("n_bins must be >= 1");
  const std::size_t n = preds.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].prediction < preds[b].prediction;
  });

  double total = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t lo = b * n / n_bins;
    const std::size_t hi = (b + 1) * n / n_bins;
    if (lo >= hi) continue;
    double sum_pred = 0.0;
    double sum_obs = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
      sum_pred += preds[idx[t]].prediction;
      sum_obs += static_cast<double>(preds[idx[t]].label);
    }
    const double count = static_cast<double>(hi - lo);
    total += (count / static_cast<double>(n)) * std::abs(sum_obs / count - sum_pred / count);
  }
  return total;
}

}  // namespace hypertax
