#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osd/buffers.hpp"
#include "osd/clustering.hpp"
#include "osd/core.hpp"
#include "osd/geometry.hpp"

namespace osd {

enum class Phase { kStacking, kOnline };

/// Outcome of the {k-1, k, k+1} silhouette comparison for one embedding.
struct Decision {
  std::size_t current_k = 0;
  std::size_t chosen_k = 0;
  std::vector<std::pair<std::size_t, double>> scores;  // ascending k
};

enum class StepKind { kStacked, kInitialCluster, kNewSpeaker, kExisting, kDecrease };

/// Reported to the observer after every push.
struct StepInfo {
  std::size_t index = 0;  // position of the embedding in the stream
  StepKind kind = StepKind::kStacked;
  std::optional<Decision> decision;
  std::size_t live_centroids = 0;
  double seconds = 0.0;  // wall-clock time spent inside push()
};

/// One online diarisation session.
///
/// Embeddings are stacked until n_init have arrived; the stack is then
/// clustered offline and released as one batch of labels. Afterwards every
/// push emits exactly one label, which is never revised.
class Diarizer {
 public:
  using Observer = std::function<void(const StepInfo&)>;

  explicit Diarizer(DiarizerConfig config = default_config())
      : config_((validate(config), config)),
        checkpoint_(config_.n_ckpt, config_.dim),
        centroids_(config_.dim) {}

  const DiarizerConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  std::size_t current_k() const { return centroids_.live_count(); }
  std::size_t pushed() const { return pushed_; }
  const CheckpointBuffer& checkpoint() const { return checkpoint_; }
  const CentroidStore& centroids() const { return centroids_; }
  const std::vector<LabeledSegment>& emitted() const { return emitted_; }

  void set_observer(Observer observer) { observer_ = std::move(observer); }

  /// Feeds the next embedding. Returns the labels released by this call:
  /// nothing while stacking, n_init labels at the phase transition, and one
  /// label per call afterwards. Rejected input leaves the session unchanged.
  std::vector<LabeledSegment> push(const TimedEmbedding& te) {
    if (te.embedding.dim() != config_.dim) {
      throw std::invalid_argument("embedding dimension " +
                                  std::to_string(te.embedding.dim()) +
                                  ", expected " + std::to_string(config_.dim));
    }
    if (!(te.end > te.start)) {
      throw std::invalid_argument("embedding window must have end > start");
    }
    if (last_start_ && te.start < *last_start_) {
      throw std::invalid_argument("out-of-order embedding: start " +
                                  std::to_string(te.start) + " < " +
                                  std::to_string(*last_start_));
    }

    const auto t0 = std::chrono::steady_clock::now();
    StepInfo info;
    info.index = pushed_;
    std::vector<LabeledSegment> out;

    if (phase_ == Phase::kStacking) {
      stash_.push_back(te);
      if (stash_.size() >= config_.n_init) {
        const std::vector<SpeakerLabel> labels = initial_cluster();
        for (std::size_t i = 0; i < stash_.size(); ++i) {
          out.push_back({stash_[i].start, stash_[i].end, labels[i]});
        }
        stash_.clear();
        phase_ = Phase::kOnline;
        info.kind = StepKind::kInitialCluster;
      }
    } else {
      auto [segment, kind, decision] = online_step(te);
      out.push_back(segment);
      info.kind = kind;
      info.decision = std::move(decision);
    }

    last_start_ = te.start;
    ++pushed_;
    emitted_.insert(emitted_.end(), out.begin(), out.end());

    info.live_centroids = centroids_.live_count();
    info.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    if (observer_) observer_(info);
    return out;
  }

  /// Silhouette comparison of k-1, k and k+1 clusters over the checkpoint
  /// plus `e`. k-1 is skipped at k = 1; k+1 is skipped when it exceeds the
  /// working-set size.
  Decision decide_k(const Embedding& e) const {
    const DistanceMatrix dist = checkpoint_.distances_with(e);
    const Dendrogram tree = ahc_build(dist);
    const std::size_t n = dist.size();
    const std::size_t k = current_k();

    Decision d;
    d.current_k = k;
    const std::size_t lo = std::min(k > 1 ? k - 1 : 1, n);
    const std::size_t hi = std::min(k + 1, n);
    const CountEstimate est = estimate_count(dist, tree, lo, hi);
    d.chosen_k = est.k;
    d.scores = est.scores;
    return d;
  }

  /// Label routing through centroid clustering: the centroids are clustered
  /// by AHC at the link threshold, the centroid nearest to `e` picks a
  /// cluster, and the most-used centroid of that cluster supplies the label.
  SpeakerLabel map_label(const Embedding& e) const {
    const auto [labels, vecs] = centroids_.vectors();
    if (labels.empty()) throw std::logic_error("map_label: no live centroids");
    if (labels.size() == 1) return labels.front();

    const ClusterLabeling groups =
        cut_threshold(ahc_build(pairwise_distances(vecs)),
                      config_.centroid_link_threshold);

    std::size_t nearest = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      const double s = cosine_similarity(vecs[i], e);
      if (s > best_sim) {
        best_sim = s;
        nearest = i;
      }
    }

    const std::size_t group = groups.assignments[nearest];
    std::size_t pick = nearest;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (groups.assignments[i] != group) continue;
      const auto usage = centroids_.get(labels[i]).usage;
      const auto best = centroids_.get(labels[pick]).usage;
      if (usage > best || (usage == best && labels[i] < labels[pick])) pick = i;
    }
    return labels[pick];
  }

  /// Human-readable dump of the buffers; not a stable format.
  void dump_state(std::ostream& os) const {
    os << "phase " << (phase_ == Phase::kStacking ? "stacking" : "online")
       << "\npushed " << pushed_ << "\ncheckpoint " << checkpoint_.size() << "/"
       << checkpoint_.capacity() << " total_weight "
       << checkpoint_.total_weight() << "\n";
    for (std::size_t i = 0; i < checkpoint_.size(); ++i) {
      os << "  entry " << i << " weight " << checkpoint_.entries()[i].weight
         << "\n";
    }
    os << "centroids " << centroids_.live_count() << "\n";
    for (const Centroid& c : centroids_.live()) {
      os << "  " << to_string(c.label) << " usage " << c.usage << " weight "
         << c.weight << "\n";
    }
    for (const auto& [from, to] : centroids_.aliases()) {
      os << "  alias spk" << from << " -> spk" << to << "\n";
    }
  }

 private:
  struct OnlineResult {
    LabeledSegment segment;
    StepKind kind;
    Decision decision;
  };

  std::vector<SpeakerLabel> initial_cluster() {
    std::vector<Embedding> embs;
    embs.reserve(stash_.size());
    for (const auto& te : stash_) embs.push_back(te.embedding);

    const DistanceMatrix dist = pairwise_distances(embs);
    const Dendrogram tree = ahc_build(dist);
    const std::size_t k_max = std::min(config_.max_initial_speakers, embs.size());
    const CountEstimate est = estimate_count(dist, tree, 1, k_max);

    std::vector<std::vector<std::size_t>> members(est.k);
    for (std::size_t i = 0; i < embs.size(); ++i) {
      members[est.labeling.assignments[i]].push_back(i);
    }
    std::vector<SpeakerLabel> cluster_label(est.k);
    for (std::size_t c = 0; c < est.k; ++c) {
      std::vector<std::span<const double>> vs;
      for (std::size_t i : members[c]) vs.push_back(embs[i].values());
      const std::vector<double> ws(vs.size(), 1.0);
      Vector mean = weighted_mean(vs, ws);
      if (!(l2_norm(mean) > 1e-12)) mean.assign(vs[0].begin(), vs[0].end());
      cluster_label[c] = centroids_.create(std::move(mean), members[c].size(),
                                           members[c].size());
    }

    for (const auto& e : embs) checkpoint_.add(e);

    std::vector<SpeakerLabel> labels(embs.size());
    for (std::size_t i = 0; i < embs.size(); ++i) {
      labels[i] = cluster_label[est.labeling.assignments[i]];
    }
    return labels;
  }

  OnlineResult online_step(const TimedEmbedding& te) {
    const Embedding& e = te.embedding;
    Decision decision = decide_k(e);
    const std::size_t k = decision.current_k;

    if (decision.chosen_k > k) {
      const SpeakerLabel label = centroids_.add_new(e);
      checkpoint_.add(e);
      return {{te.start, te.end, label}, StepKind::kNewSpeaker, std::move(decision)};
    }

    StepKind kind = StepKind::kExisting;
    if (decision.chosen_k < k) {
      merge_closest_centroids();
      kind = StepKind::kDecrease;
    }
    const SpeakerLabel label = map_label(e);
    centroids_.assign(label, e);
    checkpoint_.add(e);
    return {{te.start, te.end, label}, kind, std::move(decision)};
  }

  void merge_closest_centroids() {
    const auto [labels, vecs] = centroids_.vectors();
    if (labels.size() < 2) return;
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      for (std::size_t j = i + 1; j < vecs.size(); ++j) {
        const double d = cosine_distance(vecs[i], vecs[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    centroids_.merge(labels[bi], labels[bj]);
  }

  DiarizerConfig config_;
  Phase phase_ = Phase::kStacking;
  std::vector<TimedEmbedding> stash_;
  CheckpointBuffer checkpoint_;
  CentroidStore centroids_;
  std::vector<LabeledSegment> emitted_;
  std::optional<double> last_start_;
  std::size_t pushed_ = 0;
  Observer observer_;
};

}  // namespace osd
