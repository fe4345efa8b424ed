// meetsep/wave.h

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

#ifndef MEETSEP_WAVE_H_
#define MEETSEP_WAVE_H_

#include <Eigen/Dense>

#include "meetsep/common.h"

namespace meetsep {

// Time-domain multi-channel audio, one row per channel.
struct MultiChannelWave {
  Eigen::MatrixXd samples;  // channels x time
  int sample_rate = 0;

  MultiChannelWave() = default;
  MultiChannelWave(Eigen::MatrixXd s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  int channels() const { return static_cast<int>(samples.rows()); }
  Eigen::Index num_samples() const { return samples.cols(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(num_samples()) / sample_rate
                           : 0.0;
  }

  MultiChannelWave channel(int c) const {
    if (c < 0 || c >= channels())
      throw_invalid("channel index ", c, " out of range [0, ", channels(), ")");
    return MultiChannelWave(samples.row(c), sample_rate);
  }

  void validate() const {
    if (sample_rate <= 0) throw_invalid("sample rate must be positive");
    if (samples.rows() < 1) throw_invalid("wave needs at least one channel");
    if (!samples.allFinite()) throw_invalid("wave contains non-finite samples");
  }
};

}  // namespace meetsep

#endif  // MEETSEP_WAVE_H_
