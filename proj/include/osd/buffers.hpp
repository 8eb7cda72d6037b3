#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osd/core.hpp"
#include "osd/geometry.hpp"

namespace osd {

namespace detail {

// Unit-norm copy of a stored mean, or nullopt when the mean has no direction.
inline std::optional<Embedding> unit_or_none(const Vector& mean) {
  const double norm = l2_norm(mean);
  if (!(norm > 1e-12)) return std::nullopt;
  return normalize(mean);
}

}  // namespace detail

struct CheckpointEntry {
  Vector mean;               // exact weighted running mean, not normalized
  std::uint64_t weight = 1;  // embeddings absorbed
};

/// Fixed-capacity set of weighted running-mean embeddings summarising the
/// whole stream. Pairwise cosine distances between entries are cached so the
/// nearest-pair merge and the working-set matrix cost O(n D + n^2) per step.
class CheckpointBuffer {
 public:
  CheckpointBuffer(std::size_t capacity, std::size_t dim)
      : capacity_(capacity), dim_(dim) {
    if (capacity == 0) throw std::invalid_argument("checkpoint capacity is 0");
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  const std::vector<CheckpointEntry>& entries() const { return entries_; }

  std::uint64_t total_weight() const {
    std::uint64_t w = 0;
    for (const auto& e : entries_) w += e.weight;
    return w;
  }

  /// When full, merges the closest pair of entries first, then appends `e`
  /// with weight 1.
  void add(const Embedding& e) {
    if (e.dim() != dim_) {
      throw std::invalid_argument("checkpoint_add: dimension " +
                                  std::to_string(e.dim()) + ", expected " +
                                  std::to_string(dim_));
    }
    if (entries_.size() >= capacity_) {
      if (capacity_ == 1) {
        absorb_into(0, Vector(e.values().begin(), e.values().end()), 1);
        return;
      }
      merge_closest_pair();
    }
    append({Vector(e.values().begin(), e.values().end()), 1});
  }

  /// Normalized entry means in buffer order.
  std::vector<Embedding> snapshot() const {
    std::vector<Embedding> out;
    out.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!units_[i]) {
        std::clog << "checkpoint: skipping zero-norm entry " << i << "\n";
        continue;
      }
      out.push_back(*units_[i]);
    }
    return out;
  }

  /// Distances over snapshot() followed by `extra` (the working set used for
  /// the speaker-count decision), built from the cache.
  DistanceMatrix distances_with(const Embedding& extra) const {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (units_[i]) live.push_back(i);
    const std::size_t n = live.size();
    DistanceMatrix m(n + 1);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        m.set(a, b, dist_[live[a]][live[b]]);
      }
      m.set(a, n, cosine_distance(*units_[live[a]], extra));
    }
    return m;
  }

  /// The pair (i < j) with minimal cosine distance; ties go to the
  /// lexicographically smallest pair. Requires size() >= 2.
  std::pair<std::size_t, std::size_t> closest_pair() const {
    std::pair<std::size_t, std::size_t> best{0, 1};
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      for (std::size_t j = i + 1; j < entries_.size(); ++j) {
        if (dist_[i][j] < best_d) {
          best_d = dist_[i][j];
          best = {i, j};
        }
      }
    }
    return best;
  }

 private:
  static constexpr double kDegenerate = std::numeric_limits<double>::infinity();

  double distance(std::size_t i, std::size_t j) const {
    if (!units_[i] || !units_[j]) return kDegenerate;
    return cosine_distance(*units_[i], *units_[j]);
  }

  void append(CheckpointEntry entry) {
    units_.push_back(detail::unit_or_none(entry.mean));
    entries_.push_back(std::move(entry));
    const std::size_t k = entries_.size() - 1;
    for (auto& row : dist_) row.push_back(0.0);
    dist_.emplace_back(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double d = distance(i, k);
      dist_[i][k] = d;
      dist_[k][i] = d;
    }
  }

  // Folds (mean, weight) into entry i. An antipodal pair has no mean
  // direction; entry i then keeps its own vector and only gains the weight.
  void absorb_into(std::size_t i, const Vector& mean, std::uint64_t weight) {
    CheckpointEntry& dst = entries_[i];
    Vector merged = weighted_mean(dst.mean, static_cast<double>(dst.weight),
                                  mean, static_cast<double>(weight));
    if (l2_norm(merged) > 1e-12) dst.mean = std::move(merged);
    dst.weight += weight;
    units_[i] = detail::unit_or_none(dst.mean);
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      if (j == i) continue;
      const double d = distance(i, j);
      dist_[i][j] = d;
      dist_[j][i] = d;
    }
  }

  void merge_closest_pair() {
    const auto [i, j] = closest_pair();
    const CheckpointEntry victim = entries_[j];
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(j));
    units_.erase(units_.begin() + static_cast<std::ptrdiff_t>(j));
    dist_.erase(dist_.begin() + static_cast<std::ptrdiff_t>(j));
    for (auto& row : dist_) row.erase(row.begin() + static_cast<std::ptrdiff_t>(j));
    absorb_into(i, victim.mean, victim.weight);
  }

  std::size_t capacity_;
  std::size_t dim_;
  std::vector<CheckpointEntry> entries_;
  std::vector<std::optional<Embedding>> units_;
  std::vector<std::vector<double>> dist_;
};

/// A candidate speaker. `usage` counts emissions of this label; `weight`
/// counts embeddings folded into `mean`.
struct Centroid {
  Vector mean;
  SpeakerLabel label;
  std::uint64_t usage = 0;
  std::uint64_t weight = 1;
};

/// Live centroids ordered by label, plus the retired-label alias table used
/// when a speaker-count decrease folds one centroid into another.
class CentroidStore {
 public:
  explicit CentroidStore(std::size_t dim) : dim_(dim) {}

  std::size_t live_count() const { return live_.size(); }
  const std::vector<Centroid>& live() const { return live_; }
  const std::map<std::uint32_t, std::uint32_t>& aliases() const {
    return aliases_;
  }
  std::uint32_t next_label() const { return next_label_; }

  /// New centroid with a fresh label. Labels are never reused.
  SpeakerLabel create(Vector mean, std::uint64_t weight, std::uint64_t usage) {
    if (mean.size() != dim_) throw std::invalid_argument("centroid dimension");
    if (weight == 0) throw std::invalid_argument("centroid weight must be >= 1");
    const SpeakerLabel label{next_label_++};
    live_.push_back({std::move(mean), label, usage, weight});
    return label;
  }

  SpeakerLabel add_new(const Embedding& e) {
    return create(Vector(e.values().begin(), e.values().end()), 1, 1);
  }

  /// Follows the alias table; throws if the label was never issued.
  SpeakerLabel resolve(SpeakerLabel label) const {
    if (auto it = aliases_.find(label.id); it != aliases_.end()) {
      label = SpeakerLabel{it->second};
    }
    if (index_of(label) == live_.size()) {
      throw std::invalid_argument("unknown speaker label " + to_string(label));
    }
    return label;
  }

  const Centroid& get(SpeakerLabel label) const {
    return live_[index_of(resolve(label))];
  }

  /// Running-mean update plus one more emission of the label.
  void assign(SpeakerLabel label, const Embedding& e) {
    if (e.dim() != dim_) throw std::invalid_argument("centroid_assign: dimension");
    Centroid& c = live_[index_of(resolve(label))];
    Vector merged = weighted_mean(c.mean, static_cast<double>(c.weight),
                                  e.values(), 1.0);
    if (l2_norm(merged) > 1e-12) c.mean = std::move(merged);
    c.weight += 1;
    c.usage += 1;
  }

  /// Folds two live centroids. The one with larger usage survives (ties go
  /// to the smaller label); the other label becomes an alias of it.
  SpeakerLabel merge(SpeakerLabel a, SpeakerLabel b) {
    if (a == b) throw std::invalid_argument("centroid_merge: identical labels");
    const std::size_t ia = index_of(a);
    const std::size_t ib = index_of(b);
    if (ia == live_.size() || ib == live_.size()) {
      throw std::invalid_argument("centroid_merge: label is not live");
    }
    std::size_t keep = ia, drop = ib;
    const Centroid& ca = live_[ia];
    const Centroid& cb = live_[ib];
    if (cb.usage > ca.usage || (cb.usage == ca.usage && cb.label < ca.label)) {
      std::swap(keep, drop);
    }
    Centroid& survivor = live_[keep];
    const Centroid& loser = live_[drop];
    Vector merged = weighted_mean(survivor.mean, static_cast<double>(survivor.weight),
                                  loser.mean, static_cast<double>(loser.weight));
    if (l2_norm(merged) > 1e-12) survivor.mean = std::move(merged);
    survivor.weight += loser.weight;
    survivor.usage += loser.usage;

    const SpeakerLabel kept = survivor.label;
    const SpeakerLabel retired = loser.label;
    for (auto& [from, to] : aliases_) {
      if (to == retired.id) to = kept.id;
    }
    aliases_[retired.id] = kept.id;
    live_.erase(live_.begin() + static_cast<std::ptrdiff_t>(drop));
    return kept;
  }

  /// Live labels and unit-norm means, ordered by label.
  std::pair<std::vector<SpeakerLabel>, std::vector<Embedding>> vectors() const {
    std::pair<std::vector<SpeakerLabel>, std::vector<Embedding>> out;
    for (const Centroid& c : live_) {
      auto unit = detail::unit_or_none(c.mean);
      if (!unit) continue;
      out.first.push_back(c.label);
      out.second.push_back(std::move(*unit));
    }
    return out;
  }

 private:
  std::size_t index_of(SpeakerLabel label) const {
    auto it = std::lower_bound(
        live_.begin(), live_.end(), label,
        [](const Centroid& c, SpeakerLabel l) { return c.label < l; });
    if (it == live_.end() || it->label != label) return live_.size();
    return static_cast<std::size_t>(it - live_.begin());
  }

  std::size_t dim_;
  std::uint32_t next_label_ = 0;
  std::vector<Centroid> live_;
  std::map<std::uint32_t, std::uint32_t> aliases_;
};

}  // namespace osd
