// meetsep/src/mask.cc

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

#include "meetsep/mask.h"

#include <algorithm>
#include <cmath>

namespace meetsep {

void ActivityMatrix::validate() const {
  if (frame_shift_s <= 0.0) throw_invalid("activity frame shift must be positive");
  if (static_cast<int>(speakers.size()) != num_speakers())
    throw_invalid("activity has ", num_speakers(), " rows but ",
                  speakers.size(), " speaker ids");
  for (const auto &s : speakers)
    if (s.empty()) throw_invalid("empty speaker id in activity matrix");
  if (values.size() > 0 &&
      (!values.allFinite() || values.minCoeff() < 0.0 ||
       values.maxCoeff() > 1.0))
    throw_invalid("activity values must lie in [0, 1]");
}

int TfMask::class_index(const std::string &id) const {
  for (int k = 0; k < num_classes(); ++k)
    if (class_ids[static_cast<size_t>(k)] == id) return k;
  return -1;
}

bool TfMask::has_noise_class() const { return class_index(kNoiseClassId) >= 0; }

void TfMask::validate() const {
  if (values.empty()) throw_invalid("mask has no classes");
  if (class_ids.size() != values.size())
    throw_invalid("mask has ", values.size(), " classes but ",
                  class_ids.size(), " class ids");
  const Eigen::Index t = values.front().rows(), f = values.front().cols();
  for (const auto &m : values) {
    if (m.rows() != t || m.cols() != f)
      throw_invalid("mask classes disagree in shape");
    if (!m.allFinite() || (m.size() > 0 && (m.minCoeff() < 0.0 || m.maxCoeff() > 1.0 + 1e-9)))
      throw_invalid("mask values must lie in [0, 1]");
  }
}

ActivityMatrix resample_activity(const ActivityMatrix &activity,
                                 Eigen::Index num_frames,
                                 double frame_shift_s) {
  activity.validate();
  if (num_frames < 0 || frame_shift_s <= 0.0)
    throw_invalid("invalid target grid for activity resampling");
  ActivityMatrix out;
  out.speakers = activity.speakers;
  out.frame_shift_s = frame_shift_s;
  out.values = Eigen::MatrixXd::Zero(activity.num_speakers(), num_frames);
  const double src_shift = activity.frame_shift_s;
  const Eigen::Index src_frames = activity.num_frames();
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    const double t0 = t * frame_shift_s;
    const double t1 = t0 + frame_shift_s;
    Eigen::Index a = static_cast<Eigen::Index>(std::floor(t0 / src_shift));
    Eigen::Index b = static_cast<Eigen::Index>(std::ceil(t1 / src_shift));
    a = std::clamp<Eigen::Index>(a, 0, src_frames > 0 ? src_frames - 1 : 0);
    b = std::clamp<Eigen::Index>(b, a + 1, src_frames);
    for (int s = 0; s < activity.num_speakers(); ++s) {
      double v = 0.0;
      for (Eigen::Index j = a; j < b; ++j)
        v = std::max(v, activity.values(s, j));
      out.values(s, t) = v;
    }
  }
  return out;
}

ActivityMatrix dilate_activity(const ActivityMatrix &activity,
                               double context_s) {
  activity.validate();
  if (context_s <= 0.0) return activity;
  const Eigen::Index ctx = static_cast<Eigen::Index>(
      std::llround(context_s / activity.frame_shift_s));
  if (ctx == 0) return activity;
  ActivityMatrix out = activity;
  const Eigen::Index frames = activity.num_frames();
  for (int s = 0; s < activity.num_speakers(); ++s) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      double v = 0.0;
      const Eigen::Index a = std::max<Eigen::Index>(0, t - ctx);
      const Eigen::Index b = std::min(frames, t + ctx + 1);
      for (Eigen::Index j = a; j < b; ++j)
        v = std::max(v, activity.values(s, j));
      out.values(s, t) = v;
    }
  }
  return out;
}

}  // namespace meetsep
