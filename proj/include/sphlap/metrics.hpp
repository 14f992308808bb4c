#pragma once

/// Relabel-invariant clustering agreement indices: Jaccard, Rand and
/// normalized mutual information, all in [0, 1].
///
/// Pair counts come from the contingency table n_ij = #{n : a_n = i, b_n = j}:
///   S11 = sum_ij C(n_ij, 2)   (pairs together in both partitions)
///   A   = sum_i C(a_i, 2),  B = sum_j C(b_j, 2)
///   Jaccard = S11 / (A + B - S11),  Rand = (C(N, 2) - A - B + 2 S11) / C(N, 2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sphlap {

using LabelVector = std::vector<int>;

/// Row labels of a, column labels of b, counts n_ij.
struct Contingency {
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;
};

[[nodiscard]] inline Contingency contingency(const LabelVector& a, const LabelVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
  if (a.empty()) throw std::invalid_argument("label vectors must be non-empty");
  const auto negative = [](int v) { return v < 0; };
  if (std::any_of(a.begin(), a.end(), negative) || std::any_of(b.begin(), b.end(), negative)) {
    throw std::invalid_argument("labels must be non-negative");
  }
  const auto ka = static_cast<std::size_t>(*std::max_element(a.begin(), a.end())) + 1;
  const auto kb = static_cast<std::size_t>(*std::max_element(b.begin(), b.end())) + 1;
  Contingency t;
  t.counts.assign(ka, std::vector<std::int64_t>(kb, 0));
  t.row_sums.assign(ka, 0);
  t.col_sums.assign(kb, 0);
  t.n = static_cast<std::int64_t>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto r = static_cast<std::size_t>(a[i]);
    const auto c = static_cast<std::size_t>(b[i]);
    ++t.counts[r][c];
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  return t;
}

namespace detail {

inline std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

struct PairCounts {
  std::int64_t both = 0;    // S11
  std::int64_t in_a = 0;    // same cluster in a
  std::int64_t in_b = 0;    // same cluster in b
  std::int64_t total = 0;   // C(N, 2)
};

inline PairCounts pair_counts(const Contingency& t) {
  PairCounts pc;
  for (const auto& row : t.counts) {
    for (std::int64_t v : row) pc.both += pairs(v);
  }
  for (std::int64_t v : t.row_sums) pc.in_a += pairs(v);
  for (std::int64_t v : t.col_sums) pc.in_b += pairs(v);
  pc.total = pairs(t.n);
  return pc;
}

}  // namespace detail

/// |S11| / (|S11| + |S10| + |S01|). Returns 1 when neither partition puts any
/// pair together (both all-singletons, hence identical).
[[nodiscard]] inline double jaccard_index(const LabelVector& a, const LabelVector& b) {
  const auto pc = detail::pair_counts(contingency(a, b));
  const std::int64_t denom = pc.in_a + pc.in_b - pc.both;
  if (denom == 0) return 1.0;
  return static_cast<double>(pc.both) / static_cast<double>(denom);
}

/// Fraction of point pairs on which the partitions agree. Returns 1 for N = 1.
[[nodiscard]] inline double rand_index(const LabelVector& a, const LabelVector& b) {
  const auto pc = detail::pair_counts(contingency(a, b));
  if (pc.total == 0) return 1.0;
  const std::int64_t agree = pc.total - pc.in_a - pc.in_b + 2 * pc.both;
  return static_cast<double>(agree) / static_cast<double>(pc.total);
}

/// MI(a, b) / sqrt(H(a) H(b)), entropies in nats. Returns 0 when either
/// partition has a single cluster (zero entropy).
[[nodiscard]] inline double nmi(const LabelVector& a, const LabelVector& b) {
  const Contingency t = contingency(a, b);
  const double n = static_cast<double>(t.n);
  const auto entropy = [n](const std::vector<std::int64_t>& sums) {
    double h = 0.0;
    for (std::int64_t v : sums) {
      if (v > 0) {
        const double q = static_cast<double>(v) / n;
        h -= q * std::log(q);
      }
    }
    return h;
  };
  const double ha = entropy(t.row_sums);
  const double hb = entropy(t.col_sums);
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      const auto v = t.counts[i][j];
      if (v == 0) continue;
      const double nij = static_cast<double>(v);
      mi += nij / n *
            std::log(nij * n / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
    }
  }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

struct ClusterIndices {
  double jaccard = 0.0;
  double rand = 0.0;
  double nmi = 0.0;
};

[[nodiscard]] inline ClusterIndices cluster_indices(const LabelVector& truth, const LabelVector& labels) {
  return {jaccard_index(truth, labels), rand_index(truth, labels), nmi(truth, labels)};
}

}  // namespace sphlap
