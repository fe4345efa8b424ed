// meetsep/annotation.h

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

#ifndef MEETSEP_ANNOTATION_H_
#define MEETSEP_ANNOTATION_H_

#include <string>
#include <vector>

#include "meetsep/mask.h"

namespace meetsep {

struct Segment {
  std::string speaker;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const { return end_s - start_s; }
};

// Diarization segments for one session (the in-memory form of an RTTM).
struct Annotation {
  std::string session;
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  double max_end_s() const;
  std::vector<std::string> speaker_ids() const;  // sorted, unique
  double total_speech_s() const;                 // sum of segment durations

  // Sorts by (start, speaker, end); the canonical order used on emit.
  void sort_canonical();
  void validate() const;
};

// Rasterizes segments onto a frame grid: a frame is active when its center
// lies inside a segment. Speaker row order follows `speakers` when given,
// else the annotation's sorted speaker ids.
ActivityMatrix rasterize_annotation(
    const Annotation &annotation, double frame_shift_s, double duration_s,
    const std::vector<std::string> &speakers = {});

// Inverse of rasterize_annotation on binarized activity: emits one segment
// per maximal active run, closing gaps shorter than merge_gap_s and dropping
// runs shorter than min_dur_s.
Annotation activity_to_annotation(const ActivityMatrix &activity,
                                  const std::string &session,
                                  double merge_gap_s = 0.0,
                                  double min_dur_s = 0.0);

}  // namespace meetsep

#endif  // MEETSEP_ANNOTATION_H_
