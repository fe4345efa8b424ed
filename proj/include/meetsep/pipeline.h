// meetsep/pipeline.h

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

#ifndef MEETSEP_PIPELINE_H_
#define MEETSEP_PIPELINE_H_

#include <optional>
#include <string>
#include <vector>

#include "meetsep/annotation.h"
#include "meetsep/config.h"
#include "meetsep/mask.h"
#include "meetsep/wave.h"

namespace meetsep {

// One diarization stage output; stages appear in pipeline order.
struct StagedAnnotation {
  std::string stage;  // "csd", "rectified", "recluster_fixed",
                      // "recluster_nonfixed" (or "priors" on the identity path)
  Annotation annotation;
};

struct DiarizationResult {
  std::vector<StagedAnnotation> stages;

  const Annotation *find(const std::string &stage) const;
};

// Multi-stage diarization: (a) spectral-clustering CSD on the
// beamformed/dereverbed audio, (b) sliding-window mixture-model
// rectification of (a), (c) re-clustering of the separated streams in fixed
// and non-fixed speaker-count modes. With initial priors supplied, stage (a)
// is replaced by them; with all refinement toggles off the priors pass
// through untouched. `artifact_dir`, when set, receives every finished
// stage's RTTM even if a later stage fails.
DiarizationResult run_diarization_stages(
    const MultiChannelWave &wave, const std::optional<Annotation> &priors,
    const PipelineConfig &cfg, const std::string &session_id,
    const std::string &artifact_dir = "");

struct SeparatedStream {
  std::string speaker;
  MultiChannelWave wave;  // single channel, session length
};

struct CutSegment {
  std::string speaker;
  MultiChannelWave wave;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct SeparationResult {
  std::vector<SeparatedStream> streams;
  Annotation segments;
  std::vector<CutSegment> cuts;
  TfMask mask;  // T-F mask actually used for the spatial statistics
};

// Fig-style separation variants:
//   V1: WPE -> sliding-window guided mixture masks from the time prior ->
//       per-speaker mask-based MVDR -> iSTFT.
//   V2: V1 with the mixture EM initialized from tf_prior (or, absent one,
//       from an internal first mixture pass).
//   V3: tf_prior drives the spatial statistics directly, no EM; the time
//       prior only cuts segments. tf_prior is required.
// Single-channel input requires tf_prior and separates by mask
// multiplication instead of beamforming.
SeparationResult run_separation(const MultiChannelWave &wave,
                                const Annotation &priors,
                                const TfMask *tf_prior,
                                const PipelineConfig &cfg);

// Sample-accurate segment extraction, ordered by start time; segments
// reaching past the wave are clamped (with a note to stderr).
std::vector<CutSegment> cut_segments(const MultiChannelWave &wave,
                                     const Annotation &annotation);

// Writes a deterministic run manifest (tool version, config hash, file list)
// as JSON; no timestamps, so identical runs produce identical bytes.
void write_manifest(const std::string &run_dir, const PipelineConfig &cfg,
                    const std::vector<std::string> &outputs);

}  // namespace meetsep

#endif  // MEETSEP_PIPELINE_H_
