#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace osd {

using Vector = std::vector<double>;

/// Raised when input data (files, streams, vectors) cannot be processed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNoPosition = std::numeric_limits<std::size_t>::max();

/// Unit-norm speaker embedding. Only obtainable through normalize(), so
/// every instance has finite components and L2 norm 1 (to rounding).
class Embedding {
 public:
  Embedding() = default;

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(Vector v) : values_(std::move(v)) {}
  friend Embedding normalize(std::span<const double> v, std::size_t position);

  Vector values_;
};

/// Scales v to unit L2 norm. `position` is the index of the vector in its
/// stream and only appears in the error message.
inline Embedding normalize(std::span<const double> v,
                           std::size_t position = kNoPosition) {
  auto where = [&] {
    return position == kNoPosition
               ? std::string()
               : " at stream position " + std::to_string(position);
  };
  if (v.empty()) {
    throw DataError("empty embedding" + where());
  }
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DataError("non-finite embedding component" + where());
    }
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DataError("zero-norm embedding" + where());
  }
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return Embedding(std::move(out));
}

struct TimedEmbedding {
  Embedding embedding;
  double start = 0.0;  // seconds
  double end = 0.0;
};

/// Global speaker identity. Dense, assigned in order of first emission.
struct SpeakerLabel {
  std::uint32_t id = 0;

  friend auto operator<=>(const SpeakerLabel&, const SpeakerLabel&) = default;
};

inline std::string to_string(SpeakerLabel label) {
  return "spk" + std::to_string(label.id);
}

struct LabeledSegment {
  double start = 0.0;
  double end = 0.0;
  SpeakerLabel label;

  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

struct DiarizerConfig {
  std::size_t n_init = 60;        // embeddings stacked before going online
  std::size_t n_ckpt = 180;       // checkpoint buffer capacity
  double centroid_link_threshold = 0.25;  // cosine distance
  std::size_t max_initial_speakers = 5;
  std::size_t dim = 256;
  double window_len = 1.5;    // seconds
  double window_shift = 0.5;  // seconds
};

inline DiarizerConfig default_config() { return DiarizerConfig{}; }

/// Throws std::invalid_argument describing the first violated constraint.
inline void validate(const DiarizerConfig& c) {
  if (c.n_init == 0) throw std::invalid_argument("n_init must be positive");
  if (c.n_ckpt == 0) throw std::invalid_argument("n_ckpt must be positive");
  if (c.n_init > c.n_ckpt) {
    throw std::invalid_argument("n_init (" + std::to_string(c.n_init) +
                                ") must not exceed n_ckpt (" +
                                std::to_string(c.n_ckpt) + ")");
  }
  if (!(c.centroid_link_threshold > 0.0 && c.centroid_link_threshold < 2.0)) {
    throw std::invalid_argument("centroid_link_threshold must lie in (0, 2)");
  }
  if (c.max_initial_speakers == 0) {
    throw std::invalid_argument("max_initial_speakers must be positive");
  }
  if (c.dim == 0) throw std::invalid_argument("dim must be positive");
  if (!(c.window_shift > 0.0) || c.window_shift > c.window_len) {
    throw std::invalid_argument("window_shift must lie in (0, window_len]");
  }
}

// Times are carried as integer microseconds wherever intervals are compared.
using Micros = std::int64_t;

inline Micros to_micros(double seconds) {
  return static_cast<Micros>(std::llround(seconds * 1e6));
}
inline double to_seconds(Micros us) { return static_cast<double>(us) * 1e-6; }

}  // namespace osd
