#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osd/core.hpp"

namespace osd {

struct Segment {
  double start = 0.0;     // seconds
  double duration = 0.0;  // seconds, > 0
  std::string speaker;

  double end() const { return start + duration; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Speaker-attributed time regions; the in-memory form of an RTTM file.
struct Annotation {
  std::vector<Segment> segments;

  std::vector<std::string> speakers() const {
    std::set<std::string> s;
    for (const auto& seg : segments) s.insert(seg.speaker);
    return {s.begin(), s.end()};
  }
  bool empty() const { return segments.empty(); }
};

/// Exact maximum-weight assignment on a rectangular integer matrix
/// (Hungarian algorithm with potentials, O(n^2 m)). Returns, for each row,
/// the chosen column or -1 when there are more rows than columns.
inline std::vector<int> max_weight_assignment(
    const std::vector<std::vector<std::int64_t>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};

  std::int64_t top = 0;
  for (const auto& r : weight)
    for (std::int64_t w : r) top = std::max(top, w);
  // Square cost matrix, 1-based as in the classic potentials formulation.
  auto cost = [&](std::size_t i, std::size_t j) -> std::int64_t {
    const std::int64_t w = (i - 1 < rows && j - 1 < cols) ? weight[i - 1][j - 1] : 0;
    return top - w;
  };

  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] - 1 < rows && j - 1 < cols) {
      row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return row_to_col;
}

namespace detail {

// Elementary interval of the time axis with the speakers active inside it.
struct Region {
  Micros start = 0;
  Micros end = 0;
  std::vector<std::size_t> ref;  // indices into ref speaker list
  std::vector<std::size_t> hyp;
  bool scored = true;
};

struct Partition {
  std::vector<std::string> ref_speakers;
  std::vector<std::string> hyp_speakers;
  std::vector<Region> regions;
};

// Sweeps all segment and collar boundaries. A collar of c seconds removes
// [b - c/2, b + c/2] around every reference boundary b from scoring.
inline Partition partition(const Annotation& ref, const Annotation& hyp,
                           double collar) {
  Partition part;
  part.ref_speakers = ref.speakers();
  part.hyp_speakers = hyp.speakers();
  auto index = [](const std::vector<std::string>& names, const std::string& s) {
    return static_cast<std::size_t>(
        std::lower_bound(names.begin(), names.end(), s) - names.begin());
  };

  // Event: time, kind (0 ref, 1 hyp, 2 collar), speaker index, +1/-1.
  struct Event {
    Micros t;
    int kind;
    std::size_t who;
    int delta;
  };
  std::vector<Event> events;
  const Micros half = to_micros(collar / 2.0);
  for (const auto& s : ref.segments) {
    const Micros a = to_micros(s.start), b = to_micros(s.end());
    if (b <= a) continue;
    const std::size_t who = index(part.ref_speakers, s.speaker);
    events.push_back({a, 0, who, +1});
    events.push_back({b, 0, who, -1});
    if (half > 0) {
      for (Micros x : {a, b}) {
        events.push_back({x - half, 2, 0, +1});
        events.push_back({x + half, 2, 0, -1});
      }
    }
  }
  for (const auto& s : hyp.segments) {
    const Micros a = to_micros(s.start), b = to_micros(s.end());
    if (b <= a) continue;
    const std::size_t who = index(part.hyp_speakers, s.speaker);
    events.push_back({a, 1, who, +1});
    events.push_back({b, 1, who, -1});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& x, const Event& y) { return x.t < y.t; });

  std::vector<int> ref_count(part.ref_speakers.size(), 0);
  std::vector<int> hyp_count(part.hyp_speakers.size(), 0);
  int collar_depth = 0;
  std::size_t e = 0;
  while (e < events.size()) {
    const Micros t = events[e].t;
    for (; e < events.size() && events[e].t == t; ++e) {
      const Event& ev = events[e];
      if (ev.kind == 0) ref_count[ev.who] += ev.delta;
      else if (ev.kind == 1) hyp_count[ev.who] += ev.delta;
      else collar_depth += ev.delta;
    }
    if (e == events.size()) break;
    Region r;
    r.start = t;
    r.end = events[e].t;
    for (std::size_t i = 0; i < ref_count.size(); ++i)
      if (ref_count[i] > 0) r.ref.push_back(i);
    for (std::size_t i = 0; i < hyp_count.size(); ++i)
      if (hyp_count[i] > 0) r.hyp.push_back(i);
    r.scored = collar_depth == 0;
    if (!r.ref.empty() || !r.hyp.empty()) part.regions.push_back(std::move(r));
  }
  return part;
}

// ref index -> hyp index (or -1), maximizing total co-active scored time.
inline std::vector<int> mapping_indices(const Partition& part) {
  std::vector<std::vector<std::int64_t>> overlap(
      part.ref_speakers.size(),
      std::vector<std::int64_t>(part.hyp_speakers.size(), 0));
  for (const Region& r : part.regions) {
    if (!r.scored) continue;
    for (std::size_t i : r.ref)
      for (std::size_t j : r.hyp) overlap[i][j] += r.end - r.start;
  }
  std::vector<int> m = max_weight_assignment(overlap);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] >= 0 && overlap[i][static_cast<std::size_t>(m[i])] == 0) m[i] = -1;
  }
  return m;
}

}  // namespace detail

/// Reference speaker -> hypothesis speaker bijection maximizing total
/// overlap. Pairs with zero overlap are left unmapped.
inline std::map<std::string, std::string> optimal_mapping(const Annotation& ref,
                                                          const Annotation& hyp,
                                                          double collar = 0.0) {
  const detail::Partition part = detail::partition(ref, hyp, collar);
  const std::vector<int> m = detail::mapping_indices(part);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] >= 0) {
      out[part.ref_speakers[i]] = part.hyp_speakers[static_cast<std::size_t>(m[i])];
    }
  }
  return out;
}

struct DerBreakdown {
  double der = 0.0;
  double fa = 0.0;
  double ms = 0.0;
  double sc = 0.0;
  double total_time = 0.0;   // reference speech time (overlap counted per speaker)
  double scored_time = 0.0;  // reference speech time outside the collars
};

/// Diarisation error rate with the md-eval overlap convention. Error
/// components are fractions of total reference speech time.
inline DerBreakdown der(const Annotation& ref, const Annotation& hyp,
                        double collar = 0.0) {
  if (collar < 0.0) throw std::invalid_argument("collar must be >= 0");
  const detail::Partition part = detail::partition(ref, hyp, collar);
  const std::vector<int> map = detail::mapping_indices(part);

  Micros total = 0, scored = 0, fa = 0, ms = 0, sc = 0;
  std::vector<bool> hyp_on(part.hyp_speakers.size(), false);
  for (const detail::Region& r : part.regions) {
    const Micros dur = r.end - r.start;
    const auto nref = static_cast<Micros>(r.ref.size());
    const auto nhyp = static_cast<Micros>(r.hyp.size());
    total += nref * dur;
    if (!r.scored) continue;
    scored += nref * dur;
    for (std::size_t j : r.hyp) hyp_on[j] = true;
    Micros correct = 0;
    for (std::size_t i : r.ref) {
      if (map[i] >= 0 && hyp_on[static_cast<std::size_t>(map[i])]) ++correct;
    }
    for (std::size_t j : r.hyp) hyp_on[j] = false;
    ms += std::max<Micros>(0, nref - nhyp) * dur;
    fa += std::max<Micros>(0, nhyp - nref) * dur;
    sc += (std::min(nref, nhyp) - correct) * dur;
  }
  if (total == 0) throw DataError("reference annotation has no speech");

  DerBreakdown out;
  const double denom = static_cast<double>(total);
  out.fa = static_cast<double>(fa) / denom;
  out.ms = static_cast<double>(ms) / denom;
  out.sc = static_cast<double>(sc) / denom;
  out.der = out.fa + out.ms + out.sc;
  out.total_time = to_seconds(total);
  out.scored_time = to_seconds(scored);
  return out;
}

/// Jaccard error rate: mean over reference speakers of 1 - |ref ∩ hyp| /
/// |ref ∪ hyp| under the optimal mapping; unmapped reference speakers
/// contribute 1.
inline double jer(const Annotation& ref, const Annotation& hyp) {
  const detail::Partition part = detail::partition(ref, hyp, 0.0);
  if (part.ref_speakers.empty()) {
    throw DataError("reference annotation has no speech");
  }
  const std::vector<int> map = detail::mapping_indices(part);

  const std::size_t nr = part.ref_speakers.size();
  std::vector<Micros> inter(nr, 0), uni(nr, 0);
  for (const detail::Region& r : part.regions) {
    const Micros dur = r.end - r.start;
    for (std::size_t i = 0; i < nr; ++i) {
      if (map[i] < 0) continue;
      const auto h = static_cast<std::size_t>(map[i]);
      const bool in_ref = std::binary_search(r.ref.begin(), r.ref.end(), i);
      const bool in_hyp = std::binary_search(r.hyp.begin(), r.hyp.end(), h);
      if (in_ref && in_hyp) inter[i] += dur;
      if (in_ref || in_hyp) uni[i] += dur;
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    sum += (map[i] < 0 || uni[i] == 0)
               ? 1.0
               : 1.0 - static_cast<double>(inter[i]) / static_cast<double>(uni[i]);
  }
  return sum / static_cast<double>(nr);
}

}  // namespace osd
