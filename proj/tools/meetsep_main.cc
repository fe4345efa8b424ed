// meetsep/tools/meetsep_main.cc

// Copyright 2025-2026  Meetsep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "meetsep/beamform.h"
#include "meetsep/cacgmm.h"
#include "meetsep/config.h"
#include "meetsep/diarize.h"
#include "meetsep/io.h"
#include "meetsep/pipeline.h"
#include "meetsep/scoring.h"
#include "meetsep/simulate.h"
#include "meetsep/stft.h"
#include "meetsep/wpe.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meetsep;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
};

PipelineConfig effective_config(const GlobalArgs &g) {
  PipelineConfig cfg =
      g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed) cfg.diarize.cluster.kmeans_seed = *g.seed;
  return cfg;
}

void emit(const json &j) { std::cout << j.dump() << "\n"; }

ActivityMatrix load_guide(const std::string &rttm_path,
                          const std::string &activity_path,
                          const Spectrogram &spec, const PipelineConfig &cfg,
                          Annotation *annotation_out) {
  if (!rttm_path.empty()) {
    const Annotation ann = read_rttm(rttm_path);
    if (annotation_out) *annotation_out = ann;
    const ActivityMatrix fine = rasterize_annotation(
        ann, cfg.priors.activity_frame_shift_s,
        static_cast<double>(spec.num_samples) / spec.sample_rate);
    return resample_activity(fine, spec.num_frames(), spec.frame_shift_s());
  }
  const ActivityMatrix fine =
      read_activity(activity_path, cfg.priors.activity_frame_shift_s);
  if (annotation_out)
    *annotation_out = activity_to_annotation(fine, "session");
  return resample_activity(fine, spec.num_frames(), spec.frame_shift_s());
}

std::string wav_name(const std::string &stem) { return stem + ".wav"; }

int cmd_simulate(const GlobalArgs &g, const SimConfig &sim_in) {
  SimConfig sim = sim_in;
  if (g.seed) sim.seed = *g.seed;
  const PipelineConfig cfg = effective_config(g);
  const SimSession s = simulate_session(sim);

  fs::create_directories(g.out);
  const fs::path dir(g.out);
  std::vector<std::string> outputs;
  auto track = [&](const std::string &name) {
    outputs.push_back(name);
    return (dir / name).string();
  };

  write_wav(s.mixture, track("mixture.wav"));
  write_wav(s.noise, track("noise.wav"));
  for (int k = 0; k < s.num_speakers(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "source%02d", k);
    write_wav(s.source_images[static_cast<size_t>(k)], track(wav_name(stem)));
    std::snprintf(stem, sizeof(stem), "direct%02d", k);
    write_wav(s.direct_images[static_cast<size_t>(k)], track(wav_name(stem)));
  }
  write_rttm(s.annotation, track("oracle.rttm"));
  write_activity(s.activity, track("activity.mctf"));

  // Oracle ratio mask on the configured STFT grid.
  std::vector<Spectrogram> srcs;
  for (const auto &img : s.source_images) srcs.push_back(stft(img, cfg.stft));
  write_mask(ideal_ratio_mask(srcs, stft(s.noise, cfg.stft)),
             track("irm.mctf"));

  std::vector<WordSegment> words;
  for (int k = 0; k < s.num_speakers(); ++k)
    for (const auto &w : s.words[static_cast<size_t>(k)])
      words.push_back({w.word, w.start_s, w.end_s,
                       s.activity.speakers[static_cast<size_t>(k)]});
  write_segments_jsonl(words, s.session_id, track("words.jsonl"));
  write_manifest(g.out, cfg, outputs);

  emit(json{{"session", s.session_id},
            {"out", g.out},
            {"speakers", s.num_speakers()},
            {"channels", s.mixture.channels()},
            {"duration_s", s.mixture.duration_s()},
            {"overlap_measured", measured_overlap_ratio(s.activity)}});
  return 0;
}

int cmd_wpe(const GlobalArgs &g, const std::string &in) {
  const PipelineConfig cfg = effective_config(g);
  const MultiChannelWave wave = read_wav(in);
  const WpeResult r = wpe(stft(wave, cfg.stft), cfg.wpe);
  write_wav(istft(r.dereverbed), g.out);
  emit(json{{"in", in},
            {"out", g.out},
            {"iterations", cfg.wpe.iterations},
            {"objective", r.objective}});
  return 0;
}

int cmd_gss(const GlobalArgs &g, const std::string &in,
            const std::string &rttm, const std::string &activity,
            const std::string &tf_prior_path) {
  const PipelineConfig cfg = effective_config(g);
  const MultiChannelWave wave = read_wav(in);
  Spectrogram spec = stft(wave, cfg.stft);
  if (cfg.wpe_enabled) spec = wpe(spec, cfg.wpe).dereverbed;
  const ActivityMatrix guide = load_guide(rttm, activity, spec, cfg, nullptr);

  TfMask prior;
  const TfMask *prior_ptr = nullptr;
  if (!tf_prior_path.empty()) {
    prior = read_mask(tf_prior_path, spec.frame_shift_s());
    prior_ptr = &prior;
  }
  const TfMask mask = sliding_window_gss(spec, guide, cfg.cacgmm, prior_ptr);
  write_mask(mask, g.out);
  emit(json{{"in", in},
            {"out", g.out},
            {"classes", mask.num_classes()},
            {"frames", mask.num_frames()},
            {"bins", mask.num_bins()}});
  return 0;
}

int cmd_mvdr(const GlobalArgs &g, const std::string &in,
             const std::string &mask_path, int reference) {
  const PipelineConfig cfg = effective_config(g);
  const MultiChannelWave wave = read_wav(in);
  const Spectrogram spec = stft(wave, cfg.stft);
  const TfMask mask = read_mask(mask_path, spec.frame_shift_s());
  if (mask.num_frames() != spec.num_frames() ||
      mask.num_bins() != spec.num_bins())
    throw_invalid("mask grid does not match the input audio STFT");

  fs::create_directories(g.out);
  std::vector<std::string> outputs;
  for (int k = 0; k < mask.num_classes(); ++k) {
    if (mask.class_ids[static_cast<size_t>(k)] == kNoiseClassId) continue;
    TfMask complement = mask;
    complement.values[static_cast<size_t>(k)] =
        Eigen::MatrixXd::Ones(mask.num_frames(), mask.num_bins()) -
        mask.values[static_cast<size_t>(k)];
    const SpatialCovariance target = estimate_psd(spec, mask, k);
    const SpatialCovariance noise = estimate_psd(spec, complement, k);
    std::optional<int> ref;
    if (reference >= 0) ref = reference;
    const BeamWeights w = mvdr_weights(target, noise, ref, cfg.mvdr);
    const std::string name =
        wav_name(mask.class_ids[static_cast<size_t>(k)]);
    write_wav(istft(beamform(spec, w)), (fs::path(g.out) / name).string());
    outputs.push_back(name);
  }
  write_manifest(g.out, cfg, outputs);
  emit(json{{"in", in}, {"out", g.out}, {"streams", outputs}});
  return 0;
}

int cmd_diarize(const GlobalArgs &g, const std::string &in) {
  PipelineConfig cfg = effective_config(g);
  cfg.rectification = false;
  cfg.recluster = ReclusterMode::kOff;
  const MultiChannelWave wave = read_wav(in);
  const std::string session = fs::path(in).stem().string();
  const DiarizationResult r =
      run_diarization_stages(wave, std::nullopt, cfg, session);
  write_rttm(r.stages.back().annotation, g.out);
  emit(json{{"in", in},
            {"out", g.out},
            {"session", session},
            {"speakers", r.stages.back().annotation.speaker_ids().size()},
            {"segments", r.stages.back().annotation.segments.size()}});
  return 0;
}

int cmd_rectify(const GlobalArgs &g, const std::string &in,
                const std::string &rttm) {
  const PipelineConfig cfg = effective_config(g);
  const MultiChannelWave wave = read_wav(in);
  const Annotation priors = read_rttm(rttm);
  PipelineConfig stage_cfg = cfg;
  stage_cfg.recluster = ReclusterMode::kOff;
  stage_cfg.rectification = true;
  const DiarizationResult r =
      run_diarization_stages(wave, priors, stage_cfg,
                             priors.session.empty() ? "session" : priors.session);
  const Annotation *rect = r.find("rectified");
  if (rect == nullptr) throw_error("rectification stage produced no output");
  write_rttm(*rect, g.out);
  emit(json{{"in", in},
            {"out", g.out},
            {"segments", rect->segments.size()},
            {"speakers", rect->speaker_ids().size()}});
  return 0;
}

int cmd_separate(const GlobalArgs &g, const std::string &in,
                 const std::string &rttm, const std::string &activity,
                 const std::string &tf_prior_path,
                 const std::string &variant) {
  PipelineConfig cfg = effective_config(g);
  cfg.variant = variant_from_string(variant);
  const MultiChannelWave wave = read_wav(in);
  const Spectrogram probe = stft(wave, cfg.stft);

  Annotation priors;
  load_guide(rttm, activity, probe, cfg, &priors);
  if (priors.session.empty()) priors.session = fs::path(in).stem().string();

  TfMask prior;
  const TfMask *prior_ptr = nullptr;
  if (!tf_prior_path.empty()) {
    prior = read_mask(tf_prior_path, probe.frame_shift_s());
    prior_ptr = &prior;
  }
  const SeparationResult r = run_separation(wave, priors, prior_ptr, cfg);

  fs::create_directories(g.out);
  const fs::path dir(g.out);
  std::vector<std::string> outputs;
  for (const auto &stream : r.streams) {
    const std::string name = wav_name(stream.speaker);
    write_wav(stream.wave, (dir / name).string());
    outputs.push_back(name);
  }
  write_rttm(r.segments, (dir / "segments.rttm").string());
  outputs.push_back("segments.rttm");
  fs::create_directories(dir / "cuts");
  for (const auto &cut : r.cuts) {
    char name[96];
    std::snprintf(name, sizeof(name), "cuts/%s_%08.2f_%08.2f.wav",
                  cut.speaker.c_str(), cut.start_s, cut.end_s);
    write_wav(cut.wave, (dir / name).string());
    outputs.emplace_back(name);
  }
  write_mask(r.mask, (dir / "mask.mctf").string());
  outputs.push_back("mask.mctf");
  write_manifest(g.out, cfg, outputs);
  emit(json{{"in", in},
            {"out", g.out},
            {"variant", variant_to_string(cfg.variant)},
            {"streams", r.streams.size()},
            {"cuts", r.cuts.size()}});
  return 0;
}

int cmd_score_der(const GlobalArgs &g, const std::string &ref_path,
                  const std::string &hyp_path, double collar) {
  const DerBreakdown d = der(read_rttm(ref_path), read_rttm(hyp_path), collar);
  emit(json{{"ref", ref_path},
            {"hyp", hyp_path},
            {"collar_s", collar},
            {"fa_pct", d.fa_pct},
            {"miss_pct", d.miss_pct},
            {"spkerr_pct", d.spkerr_pct},
            {"der_pct", d.der_pct},
            {"scored_speech_s", d.scored_speech_s}});
  return 0;
}

int cmd_score_tcpwer(const GlobalArgs &g, const std::string &ref_path,
                     const std::string &hyp_path, double collar) {
  PipelineConfig cfg = effective_config(g);
  cfg.scoring.tcp.collar_s = collar;
  const TcpWerReport r = tcpwer(read_segments_jsonl(ref_path),
                                read_segments_jsonl(hyp_path), cfg.scoring.tcp);
  json assignment = json::array();
  for (const auto &pair : r.assignment)
    assignment.push_back({{"hyp", pair.first}, {"ref", pair.second}});
  emit(json{{"ref", ref_path},
            {"hyp", hyp_path},
            {"collar_s", collar},
            {"substitutions", r.substitutions},
            {"insertions", r.insertions},
            {"deletions", r.deletions},
            {"ref_words", r.ref_words},
            {"tcpwer_pct", r.tcpwer_pct},
            {"assignment", assignment}});
  return 0;
}

int cmd_pipeline(const GlobalArgs &g, const std::string &in,
                 const std::string &rttm) {
  const PipelineConfig cfg = effective_config(g);
  const MultiChannelWave wave = read_wav(in);
  const std::string session = fs::path(in).stem().string();
  std::optional<Annotation> priors;
  if (!rttm.empty()) priors = read_rttm(rttm);

  fs::create_directories(g.out);
  const fs::path dir(g.out);
  const DiarizationResult r =
      run_diarization_stages(wave, priors, cfg, session, g.out);
  std::vector<std::string> outputs;
  for (const auto &stage : r.stages) outputs.push_back(stage.stage + ".rttm");

  // Separate with the final diarization stage as the prior.
  const Annotation &final_priors = r.stages.back().annotation;
  const SeparationResult sep =
      run_separation(wave, final_priors, nullptr, cfg);
  for (const auto &stream : sep.streams) {
    const std::string name = wav_name(stream.speaker);
    write_wav(stream.wave, (dir / name).string());
    outputs.push_back(name);
  }
  write_rttm(sep.segments, (dir / "segments.rttm").string());
  outputs.push_back("segments.rttm");
  write_mask(sep.mask, (dir / "mask.mctf").string());
  outputs.push_back("mask.mctf");
  write_manifest(g.out, cfg, outputs);

  json stages = json::array();
  for (const auto &stage : r.stages)
    stages.push_back({{"stage", stage.stage},
                      {"speakers", stage.annotation.speaker_ids().size()},
                      {"segments", stage.annotation.segments.size()}});
  emit(json{{"in", in},
            {"out", g.out},
            {"session", session},
            {"variant", variant_to_string(cfg.variant)},
            {"stages", stages},
            {"streams", sep.streams.size()}});
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"meetsep: multi-channel meeting separation and diarization"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "TOML config file");
  uint64_t seed_raw = 0;
  CLI::Option *seed_opt =
      app.add_option("--seed", seed_raw, "seed override (simulation/clustering)");
  app.add_option("--out", g.out, "output file or directory");

  // simulate
  SimConfig sim;
  CLI::App *c_sim = app.add_subcommand("simulate", "generate a synthetic session");
  c_sim->add_option("--speakers", sim.speakers);
  c_sim->add_option("--channels", sim.channels);
  c_sim->add_option("--duration", sim.duration_s, "seconds");
  c_sim->add_option("--overlap", sim.overlap_ratio, "target overlap ratio");
  c_sim->add_option("--snr", sim.snr_db, "dB");
  c_sim->add_option("--t60", sim.t60_s, "reverberation time, seconds");

  std::string in, rttm, activity, tf_prior, variant = "v1", ref_path, hyp_path;
  int reference = 0;
  double collar = -1.0;

  CLI::App *c_wpe = app.add_subcommand("wpe", "dereverberate a wav");
  c_wpe->add_option("--in", in)->required();

  CLI::App *c_gss = app.add_subcommand("gss", "guided mask estimation");
  c_gss->add_option("--in", in)->required();
  c_gss->add_option("--rttm", rttm, "diarization priors");
  c_gss->add_option("--activity", activity, "activity tensor priors");
  c_gss->add_option("--tf-prior", tf_prior, "T-F mask initialization");

  CLI::App *c_mvdr = app.add_subcommand("mvdr", "mask-based beamforming");
  c_mvdr->add_option("--in", in)->required();
  c_mvdr->add_option("--mask", tf_prior, "T-F mask tensor")->required();
  c_mvdr->add_option("--ref", reference,
                     "reference channel (-1 = max posterior SNR)");

  CLI::App *c_dia = app.add_subcommand("diarize", "clustering diarization");
  c_dia->add_option("--in", in)->required();

  CLI::App *c_rect = app.add_subcommand("rectify", "mixture-model prior refinement");
  c_rect->add_option("--in", in)->required();
  c_rect->add_option("--rttm", rttm)->required();

  CLI::App *c_sep = app.add_subcommand("separate", "source separation");
  c_sep->add_option("--in", in)->required();
  c_sep->add_option("--rttm", rttm, "diarization priors");
  c_sep->add_option("--activity", activity, "activity tensor priors");
  c_sep->add_option("--tf-prior", tf_prior, "T-F mask prior");
  c_sep->add_option("--variant", variant, "v1 | v2 | v3");

  CLI::App *c_der = app.add_subcommand("score-der", "diarization error rate");
  c_der->add_option("--ref", ref_path)->required();
  c_der->add_option("--hyp", hyp_path)->required();
  c_der->add_option("--collar", collar, "seconds");

  CLI::App *c_tcp = app.add_subcommand("score-tcpwer",
                                       "time-constrained permutation WER");
  c_tcp->add_option("--ref", ref_path)->required();
  c_tcp->add_option("--hyp", hyp_path)->required();
  c_tcp->add_option("--collar", collar, "seconds");

  CLI::App *c_pipe = app.add_subcommand("pipeline", "diarize + separate");
  c_pipe->add_option("--in", in)->required();
  c_pipe->add_option("--rttm", rttm, "initial priors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }
  if (*seed_opt) g.seed = seed_raw;

  try {
    const PipelineConfig cfg_probe = effective_config(g);  // validate early
    (void)cfg_probe;
    if (c_sim->parsed()) {
      if (g.out.empty()) throw_invalid("simulate needs --out <dir>");
      return cmd_simulate(g, sim);
    }
    if (c_wpe->parsed()) {
      if (g.out.empty()) throw_invalid("wpe needs --out <wav>");
      return cmd_wpe(g, in);
    }
    if (c_gss->parsed()) {
      if (g.out.empty()) throw_invalid("gss needs --out <tensor>");
      if (rttm.empty() == activity.empty())
        throw_invalid("gss needs exactly one of --rttm or --activity");
      return cmd_gss(g, in, rttm, activity, tf_prior);
    }
    if (c_mvdr->parsed()) {
      if (g.out.empty()) throw_invalid("mvdr needs --out <dir>");
      return cmd_mvdr(g, in, tf_prior, reference);
    }
    if (c_dia->parsed()) {
      if (g.out.empty()) throw_invalid("diarize needs --out <rttm>");
      return cmd_diarize(g, in);
    }
    if (c_rect->parsed()) {
      if (g.out.empty()) throw_invalid("rectify needs --out <rttm>");
      return cmd_rectify(g, in, rttm);
    }
    if (c_sep->parsed()) {
      if (g.out.empty()) throw_invalid("separate needs --out <dir>");
      if (rttm.empty() == activity.empty())
        throw_invalid("separate needs exactly one of --rttm or --activity");
      return cmd_separate(g, in, rttm, activity, tf_prior, variant);
    }
    if (c_der->parsed())
      return cmd_score_der(g, ref_path, hyp_path, collar < 0 ? 0.0 : collar);
    if (c_tcp->parsed())
      return cmd_score_tcpwer(g, ref_path, hyp_path,
                              collar < 0 ? effective_config(g).scoring.tcp.collar_s
                                         : collar);
    if (c_pipe->parsed()) {
      if (g.out.empty()) throw_invalid("pipeline needs --out <dir>");
      return cmd_pipeline(g, in, rttm);
    }
    throw_invalid("no subcommand given");
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
