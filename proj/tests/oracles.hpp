#pragma once

// Slow, direct re-implementations used to cross-check the library. None of
// them share code with include/osd beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "osd/clustering.hpp"
#include "osd/scoring.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline osd::DistanceMatrix to_distance_matrix(const Matrix& m) {
  osd::DistanceMatrix d(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) d(i, j) = m[i][j];
  return d;
}

/// Symmetric, zero diagonal, entries uniform in (0, 2).
inline Matrix random_matrix(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i][j] = m[j][i] = u(rng);
  return m;
}

/// Average-linkage AHC that recomputes every cluster-pair linkage from the
/// leaf distances at every step.
inline std::vector<osd::Merge> naive_ahc(const Matrix& d) {
  const std::size_t n = d.size();
  struct Cluster {
    std::vector<std::size_t> leaves;
    std::size_t node;
  };
  std::vector<Cluster> live;
  for (std::size_t i = 0; i < n; ++i) live.push_back({{i}, i});

  std::vector<osd::Merge> out;
  while (live.size() > 1) {
    // Clusters are kept ordered by smallest leaf, so index order is slot order.
    std::sort(live.begin(), live.end(), [](const Cluster& a, const Cluster& b) {
      return a.leaves.front() < b.leaves.front();
    });
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        double s = 0.0;
        for (std::size_t a : live[i].leaves)
          for (std::size_t b : live[j].leaves) s += d[a][b];
        s /= static_cast<double>(live[i].leaves.size() * live[j].leaves.size());
        if (s < best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster merged;
    merged.leaves = live[bi].leaves;
    merged.leaves.insert(merged.leaves.end(), live[bj].leaves.begin(),
                         live[bj].leaves.end());
    std::sort(merged.leaves.begin(), merged.leaves.end());
    merged.node = n + out.size();
    out.push_back({live[bi].node, live[bj].node, best, merged.leaves.size()});
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
    live[bi] = std::move(merged);
  }
  return out;
}

/// Mean silhouette by the textbook per-point definition.
inline double silhouette(const Matrix& d, const std::vector<std::size_t>& label) {
  const std::size_t n = d.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a_sum = 0.0;
    std::size_t a_cnt = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && label[j] == label[i]) {
        a_sum += d[i][j];
        ++a_cnt;
      }
    }
    if (a_cnt == 0) continue;  // singleton
    const double a = a_sum / static_cast<double>(a_cnt);
    double b = std::numeric_limits<double>::infinity();
    std::set<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (label[j] != label[i]) others.insert(label[j]);
    for (std::size_t c : others) {
      double s = 0.0;
      std::size_t cnt = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (label[j] == c) {
          s += d[i][j];
          ++cnt;
        }
      }
      b = std::min(b, s / static_cast<double>(cnt));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

/// Every set partition of n points as a restricted-growth labeling.
inline std::vector<std::vector<std::size_t>> all_labelings(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::size_t used) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (std::size_t c = 0; c <= used && c < n; ++c) {
      cur[i] = c;
      self(self, i + 1, std::max(used, c + 1));
    }
  };
  if (n > 0) {
    cur[0] = 0;
    rec(rec, 1, 1);
  }
  return out;
}

/// Best total weight over all injective row -> column assignments.
inline std::int64_t best_assignment_value(
    const std::vector<std::vector<std::int64_t>>& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::int64_t best = 0;
  do {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < rows; ++i)
      if (perm[i] < cols) s += w[i][perm[i]];
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Random annotation on a millisecond grid with up to `max_speakers`.
inline osd::Annotation random_annotation(std::mt19937_64& rng,
                                         std::size_t max_speakers,
                                         const std::string& prefix) {
  std::uniform_int_distribution<std::size_t> nspk(1, max_speakers);
  std::uniform_int_distribution<int> nseg(1, 4);
  std::uniform_int_distribution<int> start_ms(0, 20000);
  std::uniform_int_distribution<int> dur_ms(1, 5000);
  osd::Annotation a;
  const std::size_t k = nspk(rng);
  for (std::size_t s = 0; s < k; ++s) {
    const int m = nseg(rng);
    for (int i = 0; i < m; ++i) {
      a.segments.push_back({start_ms(rng) / 1000.0, dur_ms(rng) / 1000.0,
                            prefix + std::to_string(s)});
    }
  }
  return a;
}

/// DER by 1 ms rasterization; inputs must lie on the millisecond grid.
struct FrameDer {
  std::int64_t fa = 0, ms = 0, sc = 0, total = 0;
};

inline FrameDer frame_der(const osd::Annotation& ref, const osd::Annotation& hyp,
                          double collar) {
  auto ms_of = [](double s) { return static_cast<std::int64_t>(std::llround(s * 1000)); };
  std::int64_t horizon = 0;
  for (const auto* ann : {&ref, &hyp})
    for (const auto& s : ann->segments) horizon = std::max(horizon, ms_of(s.end()));
  const std::int64_t half = ms_of(collar / 2.0);
  horizon += half + 1;

  auto raster = [&](const osd::Annotation& ann, std::vector<std::string>& names) {
    std::set<std::string> set;
    for (const auto& s : ann.segments) set.insert(s.speaker);
    names.assign(set.begin(), set.end());
    std::vector<std::vector<char>> on(names.size(),
                                      std::vector<char>(static_cast<std::size_t>(horizon), 0));
    for (const auto& s : ann.segments) {
      const auto k = static_cast<std::size_t>(
          std::find(names.begin(), names.end(), s.speaker) - names.begin());
      for (std::int64_t t = ms_of(s.start); t < ms_of(s.end()); ++t)
        on[k][static_cast<std::size_t>(t)] = 1;
    }
    return on;
  };
  std::vector<std::string> rn, hn;
  const auto r = raster(ref, rn);
  const auto h = raster(hyp, hn);

  std::vector<char> scored(static_cast<std::size_t>(horizon), 1);
  if (half > 0) {
    for (const auto& s : ref.segments) {
      for (std::int64_t b : {ms_of(s.start), ms_of(s.end())}) {
        for (std::int64_t t = std::max<std::int64_t>(0, b - half);
             t < std::min(horizon, b + half); ++t)
          scored[static_cast<std::size_t>(t)] = 0;
      }
    }
  }

  std::vector<std::vector<std::int64_t>> overlap(rn.size(),
                                                 std::vector<std::int64_t>(hn.size(), 0));
  FrameDer out;
  std::int64_t sum_max = 0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const auto u = static_cast<std::size_t>(t);
    std::int64_t nr = 0, nh = 0;
    for (const auto& row : r) nr += row[u];
    for (const auto& row : h) nh += row[u];
    out.total += nr;
    if (!scored[u]) continue;
    for (std::size_t i = 0; i < rn.size(); ++i)
      for (std::size_t j = 0; j < hn.size(); ++j)
        if (r[i][u] && h[j][u]) ++overlap[i][j];
    out.ms += std::max<std::int64_t>(0, nr - nh);
    out.fa += std::max<std::int64_t>(0, nh - nr);
    sum_max += std::min(nr, nh);
  }
  out.sc = sum_max - best_assignment_value(overlap);
  return out;
}

}  // namespace oracle
