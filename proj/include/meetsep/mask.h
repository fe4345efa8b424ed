// meetsep/mask.h

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

#ifndef MEETSEP_MASK_H_
#define MEETSEP_MASK_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meetsep/common.h"

namespace meetsep {

inline constexpr const char *kNoiseClassId = "noise";

// Per-speaker per-frame activity in [0, 1]. Binarized at 0.5 wherever a hard
// decision is needed (constraints, RTTM emission, overlap detection).
struct ActivityMatrix {
  Eigen::MatrixXd values;  // speakers x frames
  double frame_shift_s = 0.01;
  std::vector<std::string> speakers;

  int num_speakers() const { return static_cast<int>(values.rows()); }
  Eigen::Index num_frames() const { return values.cols(); }
  double duration_s() const { return num_frames() * frame_shift_s; }

  void validate() const;
};

// Per-class soft time-frequency mask in [0, 1]. For mixture-model posteriors
// the class axis carries the speakers plus one trailing noise class and sums
// to one at every (frame, bin).
struct TfMask {
  std::vector<Eigen::MatrixXd> values;  // per class: frames x bins
  std::vector<std::string> class_ids;
  double frame_shift_s = 0.0;  // 0 when the time base is unknown

  int num_classes() const { return static_cast<int>(values.size()); }
  Eigen::Index num_frames() const {
    return values.empty() ? 0 : values.front().rows();
  }
  Eigen::Index num_bins() const {
    return values.empty() ? 0 : values.front().cols();
  }

  int class_index(const std::string &id) const;
  bool has_noise_class() const;

  void validate() const;
};

// Max-pools an activity matrix onto a new frame grid (e.g. the 10 ms prior
// grid onto STFT frames). Frame t of the new grid covers
// [t*new_shift, (t+1)*new_shift); any overlapping source frame contributes.
ActivityMatrix resample_activity(const ActivityMatrix &activity,
                                 Eigen::Index num_frames,
                                 double frame_shift_s);

// Running max over +/- context_s on every speaker row.
ActivityMatrix dilate_activity(const ActivityMatrix &activity,
                               double context_s);

}  // namespace meetsep

#endif  // MEETSEP_MASK_H_
