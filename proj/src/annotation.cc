// meetsep/src/annotation.cc

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

#include "meetsep/annotation.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace meetsep {

double Annotation::max_end_s() const {
  double m = 0.0;
  for (const auto &s : segments) m = std::max(m, s.end_s);
  return m;
}

std::vector<std::string> Annotation::speaker_ids() const {
  std::set<std::string> ids;
  for (const auto &s : segments) ids.insert(s.speaker);
  return {ids.begin(), ids.end()};
}

double Annotation::total_speech_s() const {
  double t = 0.0;
  for (const auto &s : segments) t += s.duration_s();
  return t;
}

void Annotation::sort_canonical() {
  std::sort(segments.begin(), segments.end(),
            [](const Segment &a, const Segment &b) {
              if (a.start_s != b.start_s) return a.start_s < b.start_s;
              if (a.speaker != b.speaker) return a.speaker < b.speaker;
              return a.end_s < b.end_s;
            });
}

void Annotation::validate() const {
  for (const auto &s : segments) {
    if (s.speaker.empty()) throw_invalid("segment with empty speaker id");
    if (!(s.end_s > s.start_s))
      throw_invalid("segment for ", s.speaker, " has end ", s.end_s,
                    " <= start ", s.start_s);
    if (s.start_s < 0.0) throw_invalid("segment starts before 0");
  }
}

ActivityMatrix rasterize_annotation(const Annotation &annotation,
                                    double frame_shift_s, double duration_s,
                                    const std::vector<std::string> &speakers) {
  annotation.validate();
  if (frame_shift_s <= 0.0) throw_invalid("frame shift must be positive");
  std::vector<std::string> order =
      speakers.empty() ? annotation.speaker_ids() : speakers;
  const double span = std::max(duration_s, annotation.max_end_s());
  const Eigen::Index frames =
      static_cast<Eigen::Index>(std::ceil(span / frame_shift_s - 1e-9));

  ActivityMatrix act;
  act.frame_shift_s = frame_shift_s;
  act.speakers = order;
  act.values =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(order.size()), frames);
  for (const auto &seg : annotation.segments) {
    const auto it = std::find(order.begin(), order.end(), seg.speaker);
    if (it == order.end()) {
      if (!speakers.empty()) continue;  // caller restricted speaker set
      throw_invalid("speaker ", seg.speaker, " missing from row order");
    }
    const Eigen::Index row = it - order.begin();
    for (Eigen::Index t = 0; t < frames; ++t) {
      const double center = (t + 0.5) * frame_shift_s;
      if (center >= seg.start_s && center < seg.end_s) act.values(row, t) = 1.0;
    }
  }
  return act;
}

Annotation activity_to_annotation(const ActivityMatrix &activity,
                                  const std::string &session,
                                  double merge_gap_s, double min_dur_s) {
  activity.validate();
  Annotation out;
  out.session = session;
  const double dt = activity.frame_shift_s;
  for (int s = 0; s < activity.num_speakers(); ++s) {
    // Maximal runs of active frames.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;
    Eigen::Index start = -1;
    for (Eigen::Index t = 0; t <= activity.num_frames(); ++t) {
      const bool on =
          t < activity.num_frames() && activity.values(s, t) >= 0.5;
      if (on && start < 0) start = t;
      if (!on && start >= 0) {
        runs.emplace_back(start, t);
        start = -1;
      }
    }
    // Close short gaps, then drop short runs.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> merged;
    for (const auto &r : runs) {
      if (!merged.empty() && (r.first - merged.back().second) * dt < merge_gap_s)
        merged.back().second = r.second;
      else
        merged.push_back(r);
    }
    for (const auto &r : merged) {
      if ((r.second - r.first) * dt < min_dur_s) continue;
      out.segments.push_back(
          {activity.speakers[static_cast<size_t>(s)], r.first * dt, r.second * dt});
    }
  }
  out.sort_canonical();
  return out;
}

}  // namespace meetsep
