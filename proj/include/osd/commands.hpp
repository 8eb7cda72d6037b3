#pragma once

// Implementations behind the `osd` command-line tool. Each command reports
// to the given streams and returns the process exit code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "osd/diarizer.hpp"
#include "osd/io.hpp"
#include "osd/scoring.hpp"

namespace osd::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

struct DiarizeOptions {
  std::string embeddings;
  std::string out;
  std::size_t n_init = default_config().n_init;
  std::size_t n_ckpt = default_config().n_ckpt;
  double centroid_threshold = default_config().centroid_link_threshold;
  std::optional<std::string> rtf_report;
  std::optional<std::string> state_dump;
};

struct RunResult {
  std::vector<LabeledSegment> emitted;
  std::vector<double> step_seconds;
  double total_seconds = 0.0;
  double audio_seconds = 0.0;
  double rtf() const { return audio_seconds > 0.0 ? total_seconds / audio_seconds : 0.0; }
};

/// The config with its dimension taken from the stream header.
inline DiarizerConfig config_for(const EmbeddingStream& stream, DiarizerConfig config) {
  if (stream.dim != 0) config.dim = stream.dim;
  return config;
}

/// Streams every record through `d`, timing each push.
inline RunResult run_session(const EmbeddingStream& stream, Diarizer& d) {
  RunResult r;
  r.step_seconds.reserve(stream.records.size());
  r.audio_seconds = stream.audio_duration();
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    d.push(to_timed(stream.records[i], i));
    r.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    r.total_seconds += r.step_seconds.back();
  }
  r.emitted = d.emitted();
  return r;
}

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

inline int diarize(const DiarizeOptions& opt, std::ostream& out, std::ostream& err) {
  DiarizerConfig config = default_config();
  config.n_init = opt.n_init;
  config.n_ckpt = opt.n_ckpt;
  config.centroid_link_threshold = opt.centroid_threshold;
  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    err << "diarize: invalid configuration: " << e.what() << "\n";
    return kUsage;
  }

  try {
    const EmbeddingStream stream = read_stream_file(opt.embeddings);
    Diarizer session(config_for(stream, config));
    const RunResult run = run_session(stream, session);

    const std::string file_id = std::filesystem::path(opt.embeddings).stem().string();
    write_rttm_file(opt.out, segments_from_labels(run.emitted), file_id);

    if (opt.rtf_report) {
      std::ofstream rep(*opt.rtf_report);
      if (!rep) throw DataError("cannot open " + *opt.rtf_report + " for writing");
      const auto [mean, sd] = mean_std(run.step_seconds);
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "steps=%zu\nlatency_mean_ms=%.6f\nlatency_std_ms=%.6f\n"
                    "processing_seconds=%.6f\naudio_seconds=%.3f\nrtf=%.6f\n",
                    run.step_seconds.size(), mean * 1e3, sd * 1e3, run.total_seconds,
                    run.audio_seconds, run.rtf());
      rep << buf;
      for (std::size_t i = 0; i < run.step_seconds.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "step %zu %.6f\n", i, run.step_seconds[i] * 1e3);
        rep << buf;
      }
    }
    if (opt.state_dump) {
      std::ofstream dump(*opt.state_dump);
      if (!dump) throw DataError("cannot open " + *opt.state_dump + " for writing");
      session.dump_state(dump);
    }
    out << "diarize: " << stream.records.size() << " embeddings, "
        << session.centroids().next_label() << " speakers -> "
        << opt.out << "\n";
  } catch (const std::exception& e) {
    err << "diarize: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

struct ScoreOptions {
  std::string ref;
  std::string hyp;
  double collar = 0.0;
};

/// Formats a fraction as a percentage with two decimals.
inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

inline int score(const ScoreOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.collar < 0.0) {
    err << "score: collar must be >= 0\n";
    return kUsage;
  }
  try {
    const Annotation ref = read_rttm_file(opt.ref);
    const Annotation hyp = read_rttm_file(opt.hyp);
    if (ref.empty()) throw DataError("reference " + opt.ref + " has no speech");
    const DerBreakdown d = der(ref, hyp, opt.collar);
    const double j = jer(ref, hyp);

    const std::string cols[] = {percent(d.der), percent(d.fa), percent(d.ms),
                                percent(d.sc), percent(j)};
    char buf[128];
    out << "   DER     FA     MS     SC    JER\n";
    for (const auto& c : cols) {
      std::snprintf(buf, sizeof(buf), "%6s ", c.c_str());
      out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof(buf), "%.3f", d.scored_time);
    out << "der=" << cols[0] << "\nfa=" << cols[1] << "\nms=" << cols[2]
        << "\nsc=" << cols[3] << "\njer=" << cols[4] << "\nscored_time=" << buf
        << "\n";
  } catch (const std::exception& e) {
    err << "score: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

struct SimulateOptions {
  SyntheticSpec spec;
  std::string out_embeddings;
  std::string out_ref;
};

inline int simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const SyntheticSession ses = generate_synthetic(opt.spec);
    write_stream_file(opt.out_embeddings, ses.stream);
    const std::string file_id =
        std::filesystem::path(opt.out_embeddings).stem().string();
    write_rttm_file(opt.out_ref, ses.reference, file_id);
    out << "simulate: " << ses.stream.records.size() << " embeddings, "
        << opt.spec.n_speakers << " speakers, " << ses.reference.segments.size()
        << " turns\n";
  } catch (const std::invalid_argument& e) {
    err << "simulate: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

struct BenchOptions {
  std::string embeddings;
  std::vector<std::size_t> n_ckpt{60, 120, 180, 240, 300};
  std::size_t repeats = 10;
};

struct BenchRow {
  std::size_t n_ckpt = 0;
  double rtf_mean = 0.0;
  double rtf_std = 0.0;
  double latency_ms = 0.0;  // mean per-embedding push latency
};

inline std::vector<BenchRow> bench_rows(const EmbeddingStream& stream,
                                        const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  for (std::size_t n_ckpt : opt.n_ckpt) {
    DiarizerConfig config = default_config();
    config.n_ckpt = n_ckpt;
    config.n_init = std::min(config.n_init, n_ckpt);
    std::vector<double> rtfs, lat;
    for (std::size_t r = 0; r < opt.repeats; ++r) {
      Diarizer session(config_for(stream, config));
      const RunResult run = run_session(stream, session);
      rtfs.push_back(run.rtf());
      lat.push_back(run.step_seconds.empty()
                        ? 0.0
                        : run.total_seconds / static_cast<double>(run.step_seconds.size()));
    }
    const auto [m, sd] = mean_std(rtfs);
    rows.push_back({n_ckpt, m, sd, mean_std(lat).first * 1e3});
  }
  return rows;
}

inline int bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.repeats == 0) {
    err << "bench: --repeats must be >= 1\n";
    return kUsage;
  }
  try {
    const EmbeddingStream stream = read_stream_file(opt.embeddings);
    const std::vector<BenchRow> rows = bench_rows(stream, opt);
    char buf[128];
    out << "N_ckpt  Real-time Factor        mean latency (ms)\n";
    for (const BenchRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%6zu  %.5f ± %.5f      %.3f\n", r.n_ckpt,
                    r.rtf_mean, r.rtf_std, r.latency_ms);
      out << buf;
    }
  } catch (const std::exception& e) {
    err << "bench: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

}  // namespace osd::cli
