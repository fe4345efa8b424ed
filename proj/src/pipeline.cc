// meetsep/src/pipeline.cc

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

#include "meetsep/pipeline.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "meetsep/beamform.h"
#include "meetsep/cacgmm.h"
#include "meetsep/diarize.h"
#include "meetsep/features.h"
#include "meetsep/io.h"
#include "meetsep/stft.h"
#include "meetsep/wpe.h"

namespace meetsep {

const Annotation *DiarizationResult::find(const std::string &stage) const {
  for (const auto &s : stages)
    if (s.stage == stage) return &s.annotation;
  return nullptr;
}

namespace {

// Frame-level energy VAD: percentile-threshold on log frame energy. When the
// dynamic range is small (continuous speech, no pauses) everything counts as
// speech.
std::vector<char> energy_vad(const MultiChannelWave &mono, int win, int hop) {
  const Eigen::Index frames = (mono.num_samples() - win) / hop + 1;
  std::vector<double> energy(static_cast<size_t>(frames));
  for (Eigen::Index t = 0; t < frames; ++t)
    energy[static_cast<size_t>(t)] =
        std::log(mono.samples.row(0).segment(t * hop, win).squaredNorm() +
                 1e-12);
  std::vector<double> sorted = energy;
  std::sort(sorted.begin(), sorted.end());
  const double p10 = sorted[static_cast<size_t>(0.10 * (frames - 1))];
  const double p90 = sorted[static_cast<size_t>(0.90 * (frames - 1))];
  std::vector<char> speech(static_cast<size_t>(frames), 1);
  if (p90 - p10 < 1.0) return speech;  // no usable silence floor
  const double thr = 0.5 * (p10 + p90);
  for (Eigen::Index t = 0; t < frames; ++t)
    speech[static_cast<size_t>(t)] = energy[static_cast<size_t>(t)] > thr;
  // 5-frame median smoothing.
  std::vector<char> smooth = speech;
  for (Eigen::Index t = 0; t < frames; ++t) {
    int votes = 0, count = 0;
    for (Eigen::Index j = std::max<Eigen::Index>(0, t - 2);
         j < std::min(frames, t + 3); ++j) {
      votes += speech[static_cast<size_t>(j)];
      ++count;
    }
    smooth[static_cast<size_t>(t)] = 2 * votes > count;
  }
  return smooth;
}

// Clustering front end: dereverbed reference channel. A session-wide MVDR
// beam would point at whoever dominates and attenuate the other speakers,
// which is exactly the contrast clustering feeds on; speaker-aware
// beamforming only enters the later stages once priors exist.
MultiChannelWave enhance_for_clustering(const MultiChannelWave &wave,
                                        const PipelineConfig &cfg) {
  Spectrogram spec = stft(wave, cfg.stft);
  if (cfg.wpe_enabled) spec = wpe(spec, cfg.wpe).dereverbed;
  MultiChannelWave out = istft(spec);
  if (out.channels() > 1)
    out.samples = Eigen::MatrixXd(out.samples.row(0));
  return out;
}

struct CsdOutput {
  Annotation annotation;
  int speaker_count = 0;
};

// Stage (a): clustering-based diarization on the enhanced mono signal.
CsdOutput csd_stage(const MultiChannelWave &wave, const PipelineConfig &cfg,
                    const std::string &session_id) {
  const MultiChannelWave mono = enhance_for_clustering(wave, cfg);
  FeatureSequence features = logmel_features(
      mono, cfg.diarize.n_mels, cfg.diarize.mel_window, cfg.diarize.mel_hop);
  // Session-level mean normalization: the shared noise/channel signature
  // moves into the origin and cosine affinity keeps the speaker contrast.
  features.vectors.rowwise() -= Eigen::RowVectorXd(features.vectors.colwise().mean());
  const EmbeddingSequence all_windows = extract_embeddings(
      features, cfg.diarize.embed_window_s, cfg.diarize.embed_hop_s);
  const std::vector<char> speech =
      energy_vad(mono, cfg.diarize.mel_window, cfg.diarize.mel_hop);

  // Keep windows that are mostly speech; cluster only those.
  const double dt = features.frame_shift_s;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index w = 0; w < all_windows.num_windows(); ++w) {
    const Eigen::Index a = static_cast<Eigen::Index>(
        std::llround(all_windows.starts_s[static_cast<size_t>(w)] / dt));
    const Eigen::Index b = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(speech.size()),
        static_cast<Eigen::Index>(
            std::llround(all_windows.ends_s[static_cast<size_t>(w)] / dt)));
    double frac = 0.0;
    for (Eigen::Index t = a; t < b; ++t) frac += speech[static_cast<size_t>(t)];
    if (b > a) frac /= static_cast<double>(b - a);
    if (frac >= cfg.diarize.vad_speech_fraction) kept.push_back(w);
  }
  if (kept.empty())
    for (Eigen::Index w = 0; w < all_windows.num_windows(); ++w)
      kept.push_back(w);

  EmbeddingSequence speech_windows;
  speech_windows.vectors.resize(static_cast<Eigen::Index>(kept.size()),
                                all_windows.dim());
  for (size_t i = 0; i < kept.size(); ++i) {
    speech_windows.vectors.row(static_cast<Eigen::Index>(i)) =
        all_windows.vectors.row(kept[i]);
    speech_windows.starts_s.push_back(
        all_windows.starts_s[static_cast<size_t>(kept[i])]);
    speech_windows.ends_s.push_back(
        all_windows.ends_s[static_cast<size_t>(kept[i])]);
  }

  const std::vector<int> labels =
      spectral_cluster(speech_windows, std::nullopt, cfg.diarize.cluster);
  const int k = labels.empty()
                    ? 0
                    : 1 + *std::max_element(labels.begin(), labels.end());

  // Window votes -> per-speaker activity on the feature grid, gated by VAD.
  ActivityMatrix act;
  act.frame_shift_s = dt;
  act.values =
      Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(speech.size()));
  char name[16];
  for (int s = 0; s < k; ++s) {
    std::snprintf(name, sizeof(name), "spk%02d", s);
    act.speakers.emplace_back(name);
  }
  for (size_t i = 0; i < kept.size(); ++i) {
    const int lab = labels[i];
    const Eigen::Index a = static_cast<Eigen::Index>(
        std::llround(speech_windows.starts_s[i] / dt));
    const Eigen::Index b = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(speech.size()),
        static_cast<Eigen::Index>(std::llround(speech_windows.ends_s[i] / dt)));
    for (Eigen::Index t = a; t < b; ++t)
      if (speech[static_cast<size_t>(t)]) act.values(lab, t) = 1.0;
  }

  CsdOutput out;
  out.speaker_count = k;
  out.annotation = activity_to_annotation(
      act, session_id, cfg.diarize.merge_gap_s, cfg.diarize.min_segment_s);
  return out;
}

ActivityMatrix annotation_to_stft_grid(const Annotation &ann,
                                       const Spectrogram &spec,
                                       const PipelineConfig &cfg) {
  const double duration =
      static_cast<double>(spec.num_samples) / spec.sample_rate;
  const ActivityMatrix fine = rasterize_annotation(
      ann, cfg.priors.activity_frame_shift_s, duration);
  return resample_activity(fine, spec.num_frames(), spec.frame_shift_s());
}

// Mask-based MVDR for one speaker class; noise is the complement mask. The
// pipeline pins the reference to channel 0 so every separated stream is
// time-aligned with the first array channel (sample-level metrics and
// segment cutting rely on a common time base).
MultiChannelWave separate_speaker(const Spectrogram &spec, const TfMask &mask,
                                  int class_index, const MvdrConfig &mvdr) {
  TfMask complement = mask;
  complement.values[static_cast<size_t>(class_index)] =
      Eigen::MatrixXd::Ones(mask.num_frames(), mask.num_bins()) -
      mask.values[static_cast<size_t>(class_index)];
  const SpatialCovariance target = estimate_psd(spec, mask, class_index);
  const SpatialCovariance noise = estimate_psd(spec, complement, class_index);
  const BeamWeights w = mvdr_weights(target, noise, 0, mvdr);
  return istft(beamform(spec, w));
}

void dump_stages(const std::vector<StagedAnnotation> &stages,
                 const std::string &artifact_dir) {
  if (artifact_dir.empty()) return;
  std::filesystem::create_directories(artifact_dir);
  for (const auto &s : stages)
    write_rttm(s.annotation,
               (std::filesystem::path(artifact_dir) / (s.stage + ".rttm"))
                   .string());
}

}  // namespace

DiarizationResult run_diarization_stages(const MultiChannelWave &wave,
                                         const std::optional<Annotation> &priors,
                                         const PipelineConfig &cfg,
                                         const std::string &session_id,
                                         const std::string &artifact_dir) {
  wave.validate();
  cfg.validate();
  if (cfg.rectification && wave.channels() < 2)
    throw_invalid(
        "rectification needs >= 2 channels; disable it for single-channel "
        "sessions");

  DiarizationResult result;
  auto run_stage = [&](const std::string &name, auto &&fn) {
    try {
      fn();
    } catch (const std::exception &e) {
      dump_stages(result.stages, artifact_dir);
      throw Error("stage " + name + ": " + e.what() +
                  (artifact_dir.empty()
                       ? ""
                       : " (finished stages dumped to " + artifact_dir + ")"));
    }
  };

  int csd_speakers = 0;
  run_stage("csd", [&] {
    if (priors) {
      result.stages.push_back({"priors", *priors});
      csd_speakers = static_cast<int>(priors->speaker_ids().size());
    } else {
      CsdOutput csd = csd_stage(wave, cfg, session_id);
      csd_speakers = csd.speaker_count;
      result.stages.push_back({"csd", std::move(csd.annotation)});
    }
  });

  TfMask gss_mask;
  bool have_mask = false;
  Spectrogram spec_sep;  // spectrogram the masks refer to
  const bool need_separation = cfg.recluster != ReclusterMode::kOff;

  if (cfg.rectification || need_separation) {
    if (wave.channels() < 2)
      throw_invalid("re-clustering needs >= 2 channels for stream separation");
    run_stage("rectification", [&] {
      const Annotation &base = result.stages.back().annotation;
      if (base.empty())
        throw Error("no speech found by the previous stage");
      Spectrogram raw = stft(wave, cfg.stft);
      spec_sep = cfg.rectify_on_wpe ? wpe(raw, cfg.wpe).dereverbed
                                    : std::move(raw);
      const ActivityMatrix guide =
          annotation_to_stft_grid(base, spec_sep, cfg);
      gss_mask = sliding_window_gss(spec_sep, guide, cfg.cacgmm);
      have_mask = true;
      if (cfg.rectification) {
        const ActivityMatrix rect = rectify_activity(gss_mask, cfg.cacgmm);
        Annotation rect_ann = activity_to_annotation(
            rect, session_id, cfg.diarize.merge_gap_s,
            cfg.diarize.min_segment_s);
        result.stages.push_back({"rectified", std::move(rect_ann)});
      }
    });
  }

  if (need_separation) {
    run_stage("recluster", [&] {
      const Annotation &base = result.stages.back().annotation;
      const ActivityMatrix base_act = annotation_to_stft_grid(
          base, spec_sep, cfg);

      std::vector<StreamEmbeddings> streams;
      for (int s = 0; s < base_act.num_speakers(); ++s) {
        if (!have_mask) break;
        const MultiChannelWave stream =
            separate_speaker(spec_sep, gss_mask, s, cfg.mvdr);
        const FeatureSequence feats =
            logmel_features(stream, cfg.diarize.n_mels, cfg.diarize.mel_window,
                            cfg.diarize.mel_hop);
        const EmbeddingSequence emb = extract_embeddings(
            feats, cfg.diarize.embed_window_s, cfg.diarize.embed_hop_s);

        // Keep windows where this stream's speaker is mostly active.
        std::vector<Eigen::Index> kept;
        const double sdt = base_act.frame_shift_s;
        for (Eigen::Index w = 0; w < emb.num_windows(); ++w) {
          const Eigen::Index a = static_cast<Eigen::Index>(
              std::llround(emb.starts_s[static_cast<size_t>(w)] / sdt));
          const Eigen::Index b = std::min(
              base_act.num_frames(),
              static_cast<Eigen::Index>(
                  std::llround(emb.ends_s[static_cast<size_t>(w)] / sdt)));
          double frac = 0.0;
          for (Eigen::Index t = a; t < b; ++t)
            frac += base_act.values(s, t) >= 0.5 ? 1.0 : 0.0;
          if (b > a && frac / static_cast<double>(b - a) >= 0.5)
            kept.push_back(w);
        }
        if (kept.empty()) continue;
        StreamEmbeddings se;
        se.stream_id = base_act.speakers[static_cast<size_t>(s)];
        se.embeddings.vectors.resize(static_cast<Eigen::Index>(kept.size()),
                                     emb.dim());
        for (size_t i = 0; i < kept.size(); ++i) {
          se.embeddings.vectors.row(static_cast<Eigen::Index>(i)) =
              emb.vectors.row(kept[i]);
          se.embeddings.starts_s.push_back(
              emb.starts_s[static_cast<size_t>(kept[i])]);
          se.embeddings.ends_s.push_back(
              emb.ends_s[static_cast<size_t>(kept[i])]);
        }
        streams.push_back(std::move(se));
      }
      if (streams.empty())
        throw Error("no separated stream produced any embedding window");

      if (cfg.recluster == ReclusterMode::kFixed ||
          cfg.recluster == ReclusterMode::kBoth) {
        Annotation fixed = recluster(streams, std::max(1, csd_speakers),
                                     session_id, cfg.diarize.cluster);
        result.stages.push_back({"recluster_fixed", std::move(fixed)});
      }
      if (cfg.recluster == ReclusterMode::kNonFixed ||
          cfg.recluster == ReclusterMode::kBoth) {
        Annotation nonfixed =
            recluster(streams, std::nullopt, session_id, cfg.diarize.cluster);
        result.stages.push_back({"recluster_nonfixed", std::move(nonfixed)});
      }
    });
  }

  dump_stages(result.stages, artifact_dir);
  return result;
}

SeparationResult run_separation(const MultiChannelWave &wave,
                                const Annotation &priors,
                                const TfMask *tf_prior,
                                const PipelineConfig &cfg) {
  wave.validate();
  cfg.validate();
  priors.validate();
  if (priors.empty()) throw_invalid("separation needs non-empty priors");

  SeparationResult result;
  result.segments = priors;
  result.segments.sort_canonical();
  const std::vector<std::string> speakers = priors.speaker_ids();
  const int s_count = static_cast<int>(speakers.size());

  Spectrogram spec = stft(wave, cfg.stft);
  const ActivityMatrix guide = annotation_to_stft_grid(priors, spec, cfg);

  if (tf_prior != nullptr) {
    tf_prior->validate();
    const int classes = tf_prior->num_classes();
    if (classes != s_count && classes != s_count + 1)
      throw_invalid("T-F prior has ", classes, " classes but priors name ",
                    s_count, " speakers");
    if (tf_prior->num_frames() != spec.num_frames() ||
        tf_prior->num_bins() != spec.num_bins())
      throw_invalid("T-F prior grid ", tf_prior->num_frames(), "x",
                    tf_prior->num_bins(), " does not match the session STFT ",
                    spec.num_frames(), "x", spec.num_bins());
  }

  if (wave.channels() == 1) {
    // Single-channel path: mask multiplication on the magnitude, input
    // phase kept, then inverse STFT.
    if (tf_prior == nullptr)
      throw_invalid(
          "single-channel separation requires an external T-F mask prior");
    result.mask = *tf_prior;
    for (int s = 0; s < s_count; ++s) {
      MultiChannelWave y = istft(apply_mask(spec, *tf_prior, s));
      result.streams.push_back({speakers[static_cast<size_t>(s)], std::move(y)});
    }
  } else {
    if (cfg.wpe_enabled) spec = wpe(spec, cfg.wpe).dereverbed;

    switch (cfg.variant) {
      case Variant::kV1:
        result.mask = sliding_window_gss(spec, guide, cfg.cacgmm);
        break;
      case Variant::kV2: {
        TfMask internal;
        const TfMask *init = tf_prior;
        if (init == nullptr) {
          internal = sliding_window_gss(spec, guide, cfg.cacgmm);
          init = &internal;
        }
        result.mask = sliding_window_gss(spec, guide, cfg.cacgmm, init);
        break;
      }
      case Variant::kV3:
        if (tf_prior == nullptr)
          throw_invalid("variant v3 requires a T-F prior mask");
        result.mask = *tf_prior;
        break;
    }
    for (int s = 0; s < s_count; ++s) {
      MultiChannelWave y = separate_speaker(spec, result.mask, s, cfg.mvdr);
      result.streams.push_back({speakers[static_cast<size_t>(s)], std::move(y)});
    }
  }

  // Cut each speaker's stream by that speaker's segments.
  for (const auto &stream : result.streams) {
    Annotation own;
    own.session = priors.session;
    for (const auto &seg : result.segments.segments)
      if (seg.speaker == stream.speaker) own.segments.push_back(seg);
    for (auto &cut : cut_segments(stream.wave, own))
      result.cuts.push_back(std::move(cut));
  }
  std::sort(result.cuts.begin(), result.cuts.end(),
            [](const CutSegment &a, const CutSegment &b) {
              if (a.start_s != b.start_s) return a.start_s < b.start_s;
              return a.speaker < b.speaker;
            });
  return result;
}

std::vector<CutSegment> cut_segments(const MultiChannelWave &wave,
                                     const Annotation &annotation) {
  wave.validate();
  annotation.validate();
  const double duration = wave.duration_s();
  std::vector<CutSegment> cuts;
  for (const auto &seg : annotation.segments) {
    double start = seg.start_s, end = seg.end_s;
    if (end > duration || start < 0.0) {
      std::cerr << "cut_segments: clamping segment [" << start << ", " << end
                << ") to the " << duration << " s wave\n";
      start = std::max(0.0, start);
      end = std::min(end, duration);
    }
    const Eigen::Index a =
        static_cast<Eigen::Index>(std::llround(start * wave.sample_rate));
    const Eigen::Index b =
        static_cast<Eigen::Index>(std::llround(end * wave.sample_rate));
    if (b <= a) continue;
    CutSegment cut;
    cut.speaker = seg.speaker;
    cut.start_s = start;
    cut.end_s = end;
    cut.wave.sample_rate = wave.sample_rate;
    cut.wave.samples = wave.samples.middleCols(a, b - a);
    cuts.push_back(std::move(cut));
  }
  std::sort(cuts.begin(), cuts.end(),
            [](const CutSegment &a, const CutSegment &b) {
              if (a.start_s != b.start_s) return a.start_s < b.start_s;
              return a.speaker < b.speaker;
            });
  return cuts;
}

void write_manifest(const std::string &run_dir, const PipelineConfig &cfg,
                    const std::vector<std::string> &outputs) {
  std::filesystem::create_directories(run_dir);
  const std::filesystem::path dir(run_dir);
  spew_file((dir / "config.toml").string(), serialize_config(cfg));

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  nlohmann::json j;
  j["tool"] = "meetsep";
  j["version"] = kVersion;
  j["config_hash"] = hash_hex;
  j["config_file"] = "config.toml";
  std::vector<std::string> sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  j["outputs"] = sorted;
  spew_file((dir / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace meetsep
