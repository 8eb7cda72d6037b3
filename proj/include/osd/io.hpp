#pragma once

#include <algorithm>
#include <type_traits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "osd/core.hpp"
#include "osd/geometry.hpp"
#include "osd/scoring.hpp"

namespace osd {

// ---------------------------------------------------------------------------
// Embedding stream files
//
//   "SDEB1\n"
//   "<D>\n"
//   "<N>\n"
//   N records: start (f64 LE), end (f64 LE), D x f32 LE
// ---------------------------------------------------------------------------

inline constexpr char kStreamMagic[] = "SDEB1\n";

struct StreamRecord {
  double start = 0.0;
  double end = 0.0;
  std::vector<float> values;

  friend bool operator==(const StreamRecord&, const StreamRecord&) = default;
};

struct EmbeddingStream {
  std::size_t dim = 0;
  std::vector<StreamRecord> records;

  /// Last end minus first start; 0 for an empty stream.
  double audio_duration() const {
    if (records.empty()) return 0.0;
    double last_end = records.front().end;
    for (const auto& r : records) last_end = std::max(last_end, r.end);
    return last_end - records.front().start;
  }

  friend bool operator==(const EmbeddingStream&, const EmbeddingStream&) = default;
};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw DataError("embedding stream: truncated record");
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

inline std::size_t parse_count_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) {
    throw DataError(std::string("embedding stream: missing ") + what);
  }
  if (line.empty() ||
      !std::all_of(line.begin(), line.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError(std::string("embedding stream: bad ") + what + " '" + line + "'");
  }
  return static_cast<std::size_t>(std::stoull(line));
}

}  // namespace detail

inline void write_stream(std::ostream& os, const EmbeddingStream& s) {
  os.write(kStreamMagic, sizeof(kStreamMagic) - 1);
  os << s.dim << "\n" << s.records.size() << "\n";
  for (const auto& r : s.records) {
    if (r.values.size() != s.dim) {
      throw std::invalid_argument("write_stream: record dimension mismatch");
    }
    detail::put_le(os, r.start);
    detail::put_le(os, r.end);
    for (float v : r.values) detail::put_le(os, v);
  }
}

inline EmbeddingStream read_stream(std::istream& is) {
  char magic[sizeof(kStreamMagic) - 1];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kStreamMagic, sizeof(magic)) != 0) {
    throw DataError("embedding stream: bad magic");
  }
  EmbeddingStream s;
  s.dim = detail::parse_count_line(is, "dimension");
  const std::size_t n = detail::parse_count_line(is, "record count");
  if (n > 0 && s.dim == 0) throw DataError("embedding stream: zero dimension");
  s.records.reserve(std::min<std::size_t>(n, 1u << 16));  // header is untrusted
  for (std::size_t i = 0; i < n; ++i) {
    StreamRecord r;
    r.start = detail::get_le<double>(is);
    r.end = detail::get_le<double>(is);
    r.values.resize(s.dim);
    for (float& v : r.values) v = detail::get_le<float>(is);
    if (!s.records.empty() && r.start < s.records.back().start) {
      throw DataError("embedding stream: record " + std::to_string(i) +
                      " is out of time order");
    }
    s.records.push_back(std::move(r));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw DataError("embedding stream: trailing bytes after " +
                    std::to_string(n) + " records");
  }
  return s;
}

inline void write_stream_file(const std::string& path, const EmbeddingStream& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_stream(os, s);
  if (!os) throw DataError("write failed: " + path);
}

inline EmbeddingStream read_stream_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_stream(is);
}

/// Normalizes a record into a diarizer input.
inline TimedEmbedding to_timed(const StreamRecord& r, std::size_t position) {
  const Vector v(r.values.begin(), r.values.end());
  return {normalize(v, position), r.start, r.end};
}

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

inline Annotation read_rttm(std::istream& is) {
  Annotation ann;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.empty() || fields[0] != "SPEAKER") continue;
    if (fields.size() != 10) {
      throw DataError("rttm line " + std::to_string(lineno) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));
    }
    double start = 0.0, dur = 0.0;
    try {
      std::size_t used = 0;
      start = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("start");
      dur = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("duration");
    } catch (const std::exception&) {
      throw DataError("rttm line " + std::to_string(lineno) + ": bad number");
    }
    if (dur < 0.0) {
      throw DataError("rttm line " + std::to_string(lineno) + ": negative duration");
    }
    if (dur == 0.0) continue;
    ann.segments.push_back({start, dur, fields[7]});
  }
  return ann;
}

inline void write_rttm(std::ostream& os, const Annotation& ann,
                       const std::string& file_id = "session") {
  char buf[64];
  for (const auto& s : ann.segments) {
    os << "SPEAKER " << file_id << " 1 ";
    std::snprintf(buf, sizeof(buf), "%.3f %.3f", s.start, s.duration);
    os << buf << " <NA> <NA> " << s.speaker << " <NA> <NA>\n";
  }
}

inline Annotation read_rttm_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return read_rttm(is);
}

inline void write_rttm_file(const std::string& path, const Annotation& ann,
                            const std::string& file_id = "session") {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_rttm(os, ann, file_id);
  if (!os) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Window planning and label -> timeline conversion
// ---------------------------------------------------------------------------

struct Window {
  double start = 0.0;
  double end = 0.0;
};

/// Speaker-agnostic union of the annotation as sorted disjoint regions.
inline std::vector<std::pair<Micros, Micros>> speech_regions(const Annotation& speech) {
  std::vector<std::pair<Micros, Micros>> iv;
  for (const auto& s : speech.segments) {
    const Micros a = to_micros(s.start), b = to_micros(s.end());
    if (b > a) iv.emplace_back(a, b);
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<Micros, Micros>> out;
  for (const auto& [a, b] : iv) {
    if (!out.empty() && a <= out.back().second) {
      out.back().second = std::max(out.back().second, b);
    } else {
      out.emplace_back(a, b);
    }
  }
  return out;
}

/// Sliding windows inside each speech region. Windows never cross a region
/// boundary; the last windows are clipped at the region end, and a region
/// shorter than one window yields a single window covering it.
inline std::vector<Window> plan_windows(const Annotation& speech, double window_len,
                                        double shift) {
  if (!(shift > 0.0) || window_len < shift) {
    throw std::invalid_argument("plan_windows: need window_len >= shift > 0");
  }
  const Micros len = to_micros(window_len), step = to_micros(shift);
  std::vector<Window> out;
  for (const auto& [s, e] : speech_regions(speech)) {
    if (e - s < len) {
      out.push_back({to_seconds(s), to_seconds(e)});
      continue;
    }
    for (Micros t = s; t < e; t += step) {
      out.push_back({to_seconds(t), to_seconds(std::min(t + len, e))});
    }
  }
  return out;
}

/// Turns time-ordered labeled windows into speaker segments. Same-label
/// windows that touch or overlap are joined; where windows with different
/// labels overlap, the boundary goes to the midpoint of the overlap.
inline Annotation segments_from_labels(const std::vector<LabeledSegment>& windows) {
  struct Piece {
    Micros start, end;
    SpeakerLabel label;
  };
  std::vector<Piece> out;
  for (const auto& w : windows) {
    const Micros a = to_micros(w.start), b = to_micros(w.end);
    if (b <= a) continue;
    if (out.empty() || a > out.back().end ||
        (a == out.back().end && out.back().label != w.label)) {
      out.push_back({a, b, w.label});
      continue;
    }
    Piece& last = out.back();
    if (last.label == w.label) {
      last.end = std::max(last.end, b);
      continue;
    }
    const Micros old_end = last.end;
    const Micros mid = std::max(last.start, a + (std::min(old_end, b) - a) / 2);
    last.end = mid;
    const SpeakerLabel prev = last.label;
    if (last.end <= last.start) out.pop_back();
    out.push_back({mid, b, w.label});
    if (old_end > b) out.push_back({b, old_end, prev});
  }
  Annotation ann;
  for (const auto& p : out) {
    ann.segments.push_back({to_seconds(p.start), to_seconds(p.end - p.start),
                            to_string(p.label)});
  }
  return ann;
}

// ---------------------------------------------------------------------------
// Synthetic sessions
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_speakers = 3;
  double duration = 600.0;  // seconds
  std::size_t dim = 32;  // per-component noise grows with dim; 256 at sigma 0.05 is near-isotropic
  double noise_sigma = 0.05;
  double min_speaker_sim_gap = 0.3;  // max pairwise cosine between speakers
  double turn_mean = 3.0;            // seconds
  std::uint64_t seed = 42;
  double window_len = 1.5;
  double window_shift = 0.5;
};

/// Parses "key = value" lines (# comments allowed) on top of `base`.
inline SyntheticSpec parse_synthetic_spec(std::istream& is,
                                          SyntheticSpec base = SyntheticSpec{}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw DataError("synthetic spec line " + std::to_string(lineno) + ": missing '='");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "n_speakers") base.n_speakers = std::stoul(val);
      else if (key == "duration") base.duration = std::stod(val);
      else if (key == "dim") base.dim = std::stoul(val);
      else if (key == "noise_sigma") base.noise_sigma = std::stod(val);
      else if (key == "min_speaker_sim_gap") base.min_speaker_sim_gap = std::stod(val);
      else if (key == "turn_mean") base.turn_mean = std::stod(val);
      else if (key == "seed") base.seed = std::stoull(val);
      else if (key == "window_len") base.window_len = std::stod(val);
      else if (key == "window_shift") base.window_shift = std::stod(val);
      else throw DataError("unknown key '" + key + "'");
    } catch (const DataError& e) {
      throw DataError("synthetic spec line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception&) {
      throw DataError("synthetic spec line " + std::to_string(lineno) +
                      ": bad value for " + key);
    }
  }
  return base;
}

struct SyntheticSession {
  EmbeddingStream stream;
  Annotation reference;
  std::vector<std::size_t> window_speaker;  // ground truth per record
  std::vector<Vector> directions;           // unit speaker directions
};

inline constexpr std::size_t kMaxDirectionAttempts = 10000;

/// Speaker directions are uniform on the sphere, rejection-sampled so that
/// no two exceed the similarity cap. Turns have exponential lengths on a
/// millisecond grid; each window inside a turn is the speaker direction plus
/// isotropic Gaussian noise, renormalized. Deterministic in the seed.
inline SyntheticSession generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_speakers == 0) throw std::invalid_argument("n_speakers must be >= 1");
  if (spec.dim == 0) throw std::invalid_argument("dim must be >= 1");
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(spec.turn_mean > 0.0)) throw std::invalid_argument("turn_mean must be > 0");
  if (!(spec.duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  if (!(spec.window_shift > 0.0) || spec.window_len < spec.window_shift) {
    throw std::invalid_argument("need window_len >= window_shift > 0");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticSession out;
  std::size_t attempts = 0;
  while (out.directions.size() < spec.n_speakers) {
    if (++attempts > kMaxDirectionAttempts) {
      throw DataError("cannot place " + std::to_string(spec.n_speakers) +
                      " speakers with pairwise cosine <= " +
                      std::to_string(spec.min_speaker_sim_gap));
    }
    Vector v(spec.dim);
    for (double& x : v) x = gauss(rng);
    const double norm = l2_norm(v);
    if (!(norm > 0.0)) continue;
    for (double& x : v) x /= norm;
    bool ok = true;
    for (const auto& d : out.directions) {
      if (dot(d, v) > spec.min_speaker_sim_gap) {
        ok = false;
        break;
      }
    }
    if (ok) out.directions.push_back(std::move(v));
  }

  std::exponential_distribution<double> turn_len(1.0 / spec.turn_mean);
  std::uniform_int_distribution<std::size_t> pick(0, spec.n_speakers - 1);
  const Micros total = to_micros(spec.duration);
  Micros t = 0;
  std::size_t speaker = pick(rng);
  out.stream.dim = spec.dim;
  while (t < total) {
    const Micros len_ms = std::max<Micros>(1, std::llround(turn_len(rng) * 1e3));
    const Micros end = std::min(total, t + len_ms * 1000);
    const Segment turn{to_seconds(t), to_seconds(end - t),
                       "S" + std::to_string(speaker)};
    out.reference.segments.push_back(turn);

    Annotation region;
    region.segments.push_back(turn);
    for (const Window& w : plan_windows(region, spec.window_len, spec.window_shift)) {
      const Vector& dir = out.directions[speaker];
      StreamRecord rec{w.start, w.end, std::vector<float>(dir.begin(), dir.end())};
      if (spec.noise_sigma > 0.0) {
        Vector v = dir;
        for (double& x : v) x += spec.noise_sigma * gauss(rng);
        const double norm = l2_norm(v);
        if (norm > 0.0) {
          for (std::size_t i = 0; i < spec.dim; ++i) {
            rec.values[i] = static_cast<float>(v[i] / norm);
          }
        }
      }
      out.stream.records.push_back(std::move(rec));
      out.window_speaker.push_back(speaker);
    }

    t = end;
    if (spec.n_speakers > 1) {
      std::size_t next = pick(rng);
      while (next == speaker) next = pick(rng);
      speaker = next;
    }
  }
  return out;
}

}  // namespace osd
