// meetsep/features.h

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

#ifndef MEETSEP_FEATURES_H_
#define MEETSEP_FEATURES_H_

#include <Eigen/Dense>
#include <vector>

#include "meetsep/wave.h"

namespace meetsep {

// Frame-level feature vectors with their center times.
struct FeatureSequence {
  Eigen::MatrixXd vectors;  // frames x dim
  std::vector<double> frame_times_s;
  double frame_shift_s = 0.0;

  Eigen::Index num_frames() const { return vectors.rows(); }
  int dim() const { return static_cast<int>(vectors.cols()); }
  double duration_s() const { return num_frames() * frame_shift_s; }

  void validate() const;
};

// Energy floored at 1e-10 before the log so silence stays finite.
inline constexpr double kLogMelFloor = 1e-10;

// Log mel-filterbank energies of a single-channel wave. win/hop are in
// samples; the FFT size equals win, frames are left-aligned (no padding),
// frames = floor((time - win)/hop) + 1. HTK mel scale, triangular filters
// from 0 to Nyquist.
FeatureSequence logmel_features(const MultiChannelWave &wave, int n_mels,
                                int win, int hop);

// Center frequencies (Hz) of the triangular mel filters used above; exposed
// so callers can reason about band positions.
std::vector<double> mel_band_centers_hz(int n_mels, int sample_rate);

}  // namespace meetsep

#endif  // MEETSEP_FEATURES_H_
