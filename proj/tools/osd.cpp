// osd: online speaker diarisation over embedding streams.
//
//   osd diarize  --embeddings s.sdeb --out hyp.rttm
//   osd score    --ref ref.rttm --hyp hyp.rttm [--collar 0.25]
//   osd simulate --speakers 3 --duration 600 --seed 42 --noise 0.05
//                --out-embeddings s.sdeb --out-ref ref.rttm
//   osd bench    --embeddings s.sdeb [--n-ckpt 60,120,180,240,300] [--repeats 10]

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "osd/commands.hpp"

int main(int argc, char** argv) {
  using namespace osd::cli;

  CLI::App app{"Online speaker diarisation with silhouette-based speaker counting"};
  app.require_subcommand(1);

  DiarizeOptions d;
  auto* diarize_cmd = app.add_subcommand("diarize", "Label an embedding stream, write RTTM");
  diarize_cmd->add_option("--embeddings", d.embeddings, "Input embedding stream")->required();
  diarize_cmd->add_option("--out", d.out, "Output hypothesis RTTM")->required();
  diarize_cmd->add_option("--n-init", d.n_init, "Embeddings stacked before online operation")
      ->capture_default_str();
  diarize_cmd->add_option("--n-ckpt", d.n_ckpt, "Checkpoint buffer capacity")
      ->capture_default_str();
  diarize_cmd->add_option("--centroid-threshold", d.centroid_threshold,
                          "Cosine-distance link threshold for centroid clustering")
      ->capture_default_str();
  diarize_cmd->add_option("--rtf-report", d.rtf_report, "Write per-step latency and RTF here");
  diarize_cmd->add_option("--state-dump", d.state_dump, "Write the final buffer state here");

  ScoreOptions s;
  auto* score_cmd = app.add_subcommand("score", "DER / JER of a hypothesis RTTM");
  score_cmd->add_option("--ref", s.ref, "Reference RTTM")->required();
  score_cmd->add_option("--hyp", s.hyp, "Hypothesis RTTM")->required();
  score_cmd->add_option("--collar", s.collar, "Total no-score width around reference boundaries (s)")
      ->capture_default_str();

  SimulateOptions m;
  std::string spec_file;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic session");
  sim_cmd->add_option("--config", spec_file, "key=value synthetic spec; flags override it");
  sim_cmd->add_option("--speakers", m.spec.n_speakers, "Number of speakers")->capture_default_str();
  sim_cmd->add_option("--duration", m.spec.duration, "Session length (s)")->capture_default_str();
  sim_cmd->add_option("--seed", m.spec.seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--noise", m.spec.noise_sigma, "Per-component noise std")->capture_default_str();
  sim_cmd->add_option("--dim", m.spec.dim, "Embedding dimension")->capture_default_str();
  sim_cmd->add_option("--sim-gap", m.spec.min_speaker_sim_gap,
                      "Maximum cosine similarity between speaker directions")
      ->capture_default_str();
  sim_cmd->add_option("--turn-mean", m.spec.turn_mean, "Mean turn length (s)")->capture_default_str();
  sim_cmd->add_option("--out-embeddings", m.out_embeddings, "Output embedding stream")->required();
  sim_cmd->add_option("--out-ref", m.out_ref, "Output reference RTTM")->required();

  BenchOptions b;
  auto* bench_cmd = app.add_subcommand("bench", "Real-time factor per checkpoint size");
  bench_cmd->add_option("--embeddings", b.embeddings, "Input embedding stream")->required();
  bench_cmd->add_option("--n-ckpt", b.n_ckpt, "Checkpoint capacities")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--repeats", b.repeats, "Runs per capacity")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*diarize_cmd) return diarize(d, std::cout, std::cerr);
  if (*score_cmd) return score(s, std::cout, std::cerr);
  if (*bench_cmd) return bench(b, std::cout, std::cerr);

  if (!spec_file.empty()) {
    // Re-apply explicit flags on top of the file.
    std::ifstream is(spec_file);
    if (!is) {
      std::cerr << "simulate: cannot open " << spec_file << "\n";
      return kData;
    }
    osd::SyntheticSpec from_file;
    try {
      from_file = osd::parse_synthetic_spec(is);
    } catch (const std::exception& e) {
      std::cerr << "simulate: " << e.what() << "\n";
      return kData;
    }
    auto given = [&](const char* flag) { return sim_cmd->count(flag) > 0; };
    if (!given("--speakers")) m.spec.n_speakers = from_file.n_speakers;
    if (!given("--duration")) m.spec.duration = from_file.duration;
    if (!given("--seed")) m.spec.seed = from_file.seed;
    if (!given("--noise")) m.spec.noise_sigma = from_file.noise_sigma;
    if (!given("--dim")) m.spec.dim = from_file.dim;
    if (!given("--sim-gap")) m.spec.min_speaker_sim_gap = from_file.min_speaker_sim_gap;
    if (!given("--turn-mean")) m.spec.turn_mean = from_file.turn_mean;
    m.spec.window_len = from_file.window_len;
    m.spec.window_shift = from_file.window_shift;
  }
  return simulate(m, std::cout, std::cerr);
}
