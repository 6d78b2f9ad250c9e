#pragma once

// Exact brute-force nearest-neighbour search in float64.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "vpb/embedding.hpp"
#include "vpb/error.hpp"
#include "vpb/parallel.hpp"
#include "vpb/probe.hpp"

namespace vpb {

enum class Metric { Euclidean, Cosine };

inline constexpr std::string_view to_string(Metric m) { return m == Metric::Euclidean ? "Euclidean" : "Cosine"; }

inline Metric parse_metric(std::string_view s) {
  if (s == "Euclidean" || s == "euclidean") return Metric::Euclidean;
  if (s == "Cosine" || s == "cosine") return Metric::Cosine;
  throw Error(ErrorCode::InvalidConfig, "unknown metric '" + std::string(s) + "'");
}

namespace detail {

/// Norm used to scale a row onto the unit sphere: 0 for a zero row, and
/// exactly 1 for rows already unit length up to rounding, so normalizing twice
/// changes nothing.
inline double unit_norm(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  if (s == 0.0) return 0.0;
  const double n = std::sqrt(s);
  const double tol = static_cast<double>(r.size() + 2) * std::numeric_limits<double>::epsilon();
  return std::abs(n - 1.0) <= tol ? 1.0 : n;
}

inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace detail

/// Squared Euclidean distance, or 1 - cosine similarity evaluated as half the
/// squared distance between the unit-scaled rows. The latter makes Cosine rank
/// exactly like Euclidean on rows that are already normalized. A zero vector is
/// at cosine distance 1 from everything.
inline double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (metric == Metric::Euclidean) return detail::squared_euclidean(a, b);
  const double na = detail::unit_norm(a), nb = detail::unit_norm(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = a[d] / na - b[d] / nb;
    s += t * t;
  }
  return 0.5 * s;
}

inline void l2_normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    const double n = detail::unit_norm(r);
    if (n == 0.0 || n == 1.0) continue;
    for (double& v : r) v /= n;
  }
}

/// For each query row, the k nearest train rows ordered by (distance, index).
inline std::vector<std::vector<std::size_t>> nearest(const Matrix& query, const Matrix& train, std::size_t k,
                                                     Metric metric, unsigned threads = 1) {
  if (query.cols != train.cols) throw Error(ErrorCode::ShapeMismatch, "query dim != train dim");
  if (k == 0 || k > train.rows) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(train.rows) + " train rows");
  }
  // Cosine: scale rows once up front, then rank by half the squared distance
  Matrix qs = query, ts = train;
  std::vector<bool> q_zero(query.rows, false), t_zero(train.rows, false);
  if (metric == Metric::Cosine) {
    for (std::size_t i = 0; i < qs.rows; ++i) q_zero[i] = detail::unit_norm(qs.row(i)) == 0.0;
    for (std::size_t j = 0; j < ts.rows; ++j) t_zero[j] = detail::unit_norm(ts.row(j)) == 0.0;
    l2_normalize_rows(qs);
    l2_normalize_rows(ts);
  }
  const auto dist = [&](std::size_t q, std::size_t j) {
    if (metric == Metric::Euclidean) return detail::squared_euclidean(query.row(q), train.row(j));
    if (q_zero[q] || t_zero[j]) return 1.0;
    return 0.5 * detail::squared_euclidean(qs.row(q), ts.row(j));
  };
  std::vector<std::vector<std::size_t>> out(query.rows);
  parallel_for(query.rows, threads, [&](std::size_t q) {
    std::vector<std::pair<double, std::size_t>> best;  // sorted, at most k entries
    best.reserve(k + 1);
    for (std::size_t j = 0; j < train.rows; ++j) {
      const std::pair<double, std::size_t> cand{dist(q, j), j};
      if (best.size() == k && !(cand < best.back())) continue;
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (best.size() > k) best.pop_back();
    }
    auto& idx = out[q];
    for (const auto& [dist, j] : best) idx.push_back(j);
  });
  return out;
}

/// Fraction of test rows whose nearest train row (k = 1) has the same label.
inline double nn_accuracy(const EmbeddingSet& test, const EmbeddingSet& train, Metric metric = Metric::Cosine,
                          bool normalize = true, unsigned threads = 1) {
  if (test.dim() != train.dim()) throw Error(ErrorCode::ShapeMismatch, "test dim != train dim");
  if (test.meta.num_classes != train.meta.num_classes) {
    throw Error(ErrorCode::ShapeMismatch, "test and train label spaces differ");
  }
  if (test.count() == 0) throw Error(ErrorCode::EmptyInput, "empty test set");
  Matrix q = to_matrix(test), t = to_matrix(train);
  if (normalize) {
    l2_normalize_rows(q);
    l2_normalize_rows(t);
  }
  const auto nn = nearest(q, t, 1, metric, threads);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < nn.size(); ++i) hits += train.labels[nn[i][0]] == test.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(nn.size());
}

}  // namespace vpb
