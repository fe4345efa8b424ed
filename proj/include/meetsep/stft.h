// meetsep/stft.h

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

#ifndef MEETSEP_STFT_H_
#define MEETSEP_STFT_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meetsep/mask.h"
#include "meetsep/wave.h"

namespace meetsep {

enum class Window { kHann, kSqrtHann };

Window window_from_string(const std::string &name);
const char *window_to_string(Window w);

// Analysis/synthesis frame geometry. The same window is used on both sides;
// validate() checks numerically that the analysis*synthesis product
// overlap-adds to a constant at the configured shift.
struct StftConfig {
  int frame_len = 1024;
  int frame_shift = 256;
  int fft_size = 1024;
  Window window = Window::kSqrtHann;

  int bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

// Complex STFT tensor, one (frames x bins) matrix per channel. Frames are
// centered: frame t covers original samples [t*shift - frame_len/2,
// t*shift + frame_len/2), i.e. its center sits at t*shift. The signal is
// reflect-padded by frame_len/2 on both sides and zero-padded at the tail to
// fill the last frame; num_samples remembers the unpadded length so istft
// can trim exactly.
struct Spectrogram {
  std::vector<Eigen::MatrixXcd> data;
  StftConfig cfg;
  int sample_rate = 0;
  Eigen::Index num_samples = 0;

  int channels() const { return static_cast<int>(data.size()); }
  Eigen::Index num_frames() const { return data.empty() ? 0 : data.front().rows(); }
  Eigen::Index num_bins() const { return data.empty() ? 0 : data.front().cols(); }
  double frame_shift_s() const {
    return static_cast<double>(cfg.frame_shift) / sample_rate;
  }
  double frame_center_s(Eigen::Index t) const {
    return t * frame_shift_s();
  }

  void validate() const;
};

// Number of frames produced by stft() for a signal of the given length.
Eigen::Index stft_num_frames(Eigen::Index num_samples, const StftConfig &cfg);

Spectrogram stft(const MultiChannelWave &wave, const StftConfig &cfg);

// Weighted overlap-add synthesis with per-sample window normalization.
// istft(stft(x)) reproduces x on the full unpadded extent; the reflected
// padding itself is discarded.
MultiChannelWave istft(const Spectrogram &spec);

// Element-wise product of every channel with one mask class; input phase is
// untouched.
Spectrogram apply_mask(const Spectrogram &spec, const TfMask &mask,
                       int class_index);

}  // namespace meetsep

#endif  // MEETSEP_STFT_H_
