#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osd/geometry.hpp"

namespace osd {

/// Flat partition of n points into k dense, non-empty clusters.
struct ClusterLabeling {
  std::vector<std::size_t> assignments;
  std::size_t k = 0;
};

/// One agglomeration step. Leaves are nodes 0..n-1; the i-th merge creates
/// node n+i. `left` is always the child holding the smaller leaf index.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;  // n - 1 entries, non-decreasing distance
};

/// Average-linkage AHC over a cosine distance matrix.
///
/// Each active cluster lives in the slot of its smallest leaf. Among
/// equal-distance candidates the lexicographically smallest slot pair merges
/// first. Cluster distances are kept with the Lance-Williams average update
/// and a cached nearest neighbour per slot, which makes the common case
/// O(n^2) rather than O(n^3).
inline Dendrogram ahc_build(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n == 0) throw std::invalid_argument("ahc_build: empty matrix");
  if (!dist.is_symmetric(1e-9)) {
    throw std::invalid_argument("ahc_build: distance matrix is not symmetric");
  }

  Dendrogram tree;
  tree.n = n;
  tree.merges.reserve(n - 1);
  if (n == 1) return tree;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = dist(i, j);

  std::vector<std::size_t> size(n, 1), node(n), nn(n, 0);
  std::vector<double> nnd(n, kInf);
  std::vector<bool> active(n, true);
  std::iota(node.begin(), node.end(), std::size_t{0});

  auto refresh = [&](std::size_t i) {
    nnd[i] = kInf;
    nn[i] = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (d[i * n + j] < nnd[i]) {
        nnd[i] = d[i * n + j];
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    // The first slot attaining the global minimum has all of its minimal
    // partners above it, so (a, nn[a]) is the lexicographically smallest pair.
    std::size_t a = n;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && nnd[i] < best) {
        best = nnd[i];
        a = i;
      }
    }
    const std::size_t b = nn[a];

    tree.merges.push_back({node[a], node[b], best, size[a] + size[b]});

    const double wa = static_cast<double>(size[a]);
    const double wb = static_cast<double>(size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double v = (wa * d[a * n + k] + wb * d[b * n + k]) / (wa + wb);
      d[a * n + k] = v;
      d[k * n + a] = v;
    }
    active[b] = false;
    size[a] += size[b];
    node[a] = n + step;

    refresh(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        refresh(k);
      } else if (d[k * n + a] < nnd[k] ||
                 (d[k * n + a] == nnd[k] && a < nn[k])) {
        nnd[k] = d[k * n + a];
        nn[k] = a;
      }
    }
  }
  return tree;
}

namespace detail {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

// Applies the merges selected by `take` and densifies cluster ids in order of
// first leaf.
template <typename Pred>
ClusterLabeling apply_merges(const Dendrogram& tree, Pred take) {
  const std::size_t n = tree.n;
  UnionFind uf(n);
  std::vector<std::size_t> rep(n + tree.merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n),
            std::size_t{0});
  for (std::size_t m = 0; m < tree.merges.size(); ++m) {
    const Merge& mg = tree.merges[m];
    rep[n + m] = rep[mg.left];
    if (take(m, mg)) uf.unite(rep[mg.left], rep[mg.right]);
  }
  ClusterLabeling out;
  out.assignments.assign(n, 0);
  std::vector<std::size_t> dense(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (dense[r] == n) dense[r] = out.k++;
    out.assignments[i] = dense[r];
  }
  return out;
}

}  // namespace detail

/// Keeps every merge whose linkage distance is strictly below `threshold`.
inline ClusterLabeling cut_threshold(const Dendrogram& tree, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("cut_threshold: t < 0");
  return detail::apply_merges(
      tree, [&](std::size_t, const Merge& m) { return m.distance < threshold; });
}

/// Exactly k clusters: the last k-1 merges are undone.
inline ClusterLabeling cut_count(const Dendrogram& tree, std::size_t k) {
  if (k < 1 || k > tree.n) {
    throw std::invalid_argument("cut_count: k=" + std::to_string(k) +
                                " outside [1, " + std::to_string(tree.n) + "]");
  }
  const std::size_t keep = tree.n - k;
  return detail::apply_merges(
      tree, [&](std::size_t m, const Merge&) { return m < keep; });
}

/// Mean silhouette coefficient. Points in singleton clusters score 0, as do
/// points with a = b = 0.
inline double silhouette(const DistanceMatrix& dist,
                         const ClusterLabeling& labeling) {
  const std::size_t n = dist.size();
  if (labeling.assignments.size() != n) {
    throw std::invalid_argument("silhouette: labeling size mismatch");
  }
  if (labeling.k < 2 || n < 2) {
    throw std::invalid_argument("silhouette: needs at least two clusters");
  }
  const std::size_t k = labeling.k;
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t c : labeling.assignments) ++counts[c];

  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = labeling.assignments[i];
    if (counts[own] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[labeling.assignments[j]] += dist(i, j);
    }
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own && counts[c] > 0) {
        b = std::min(b, sums[c] / static_cast<double>(counts[c]));
      }
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

struct CandidateScore {
  double score = 0.0;
  ClusterLabeling labeling;
};

/// Silhouette of the k-cluster cut. k = 1 scores 0 by convention.
inline CandidateScore score_candidate(const DistanceMatrix& dist,
                                      const Dendrogram& tree, std::size_t k) {
  CandidateScore out;
  out.labeling = cut_count(tree, k);
  out.score = k == 1 ? 0.0 : silhouette(dist, out.labeling);
  return out;
}

struct CountEstimate {
  std::size_t k = 0;
  double score = 0.0;
  ClusterLabeling labeling;
  std::vector<std::pair<std::size_t, double>> scores;  // every k evaluated
};

inline constexpr double kScoreTieTolerance = 1e-12;

/// Silhouette argmax over [k_min, k_max]; near-ties go to the smaller k.
inline CountEstimate estimate_count(const DistanceMatrix& dist,
                                    const Dendrogram& tree, std::size_t k_min,
                                    std::size_t k_max) {
  if (k_min < 1 || k_min > k_max || k_max > tree.n) {
    throw std::invalid_argument("estimate_count: invalid range [" +
                                std::to_string(k_min) + ", " +
                                std::to_string(k_max) + "]");
  }
  CountEstimate best;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    CandidateScore c = score_candidate(dist, tree, k);
    best.scores.emplace_back(k, c.score);
    if (best.k == 0 || c.score > best.score + kScoreTieTolerance) {
      best.k = k;
      best.score = c.score;
      best.labeling = std::move(c.labeling);
    }
  }
  return best;
}

}  // namespace osd
