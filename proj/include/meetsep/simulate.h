// meetsep/simulate.h

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

#ifndef MEETSEP_SIMULATE_H_
#define MEETSEP_SIMULATE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "meetsep/annotation.h"
#include "meetsep/mask.h"
#include "meetsep/stft.h"
#include "meetsep/wave.h"

namespace meetsep {

struct SimConfig {
  int speakers = 2;
  int channels = 4;
  double duration_s = 20.0;
  double overlap_ratio = 0.2;  // target fraction of active frames with >= 2
                               // simultaneous speakers
  double snr_db = 10.0;
  double t60_s = 0.0;          // 0 = anechoic
  uint64_t seed = 0;
  int sample_rate = 16000;

  void validate() const;
};

struct SimWord {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
};

// Fully deterministic synthetic meeting with ground truth. Speakers emit
// amplitude-modulated band-filtered noise with speaker-distinct spectral
// envelopes in alternating talk/pause bouts; imaging applies per-channel
// gains and fractional delays as frequency-domain phase ramps (plus an
// exponential-decay tail when t60 > 0). mixture = sum(source_images) + noise
// holds sample-exactly.
struct SimSession {
  std::string session_id;
  MultiChannelWave mixture;
  std::vector<MultiChannelWave> source_images;  // per speaker, with tail
  std::vector<MultiChannelWave> direct_images;  // per speaker, direct path only
  MultiChannelWave noise;
  ActivityMatrix activity;  // oracle, 10 ms frames
  Annotation annotation;
  std::vector<std::vector<SimWord>> words;  // per speaker

  int num_speakers() const { return static_cast<int>(source_images.size()); }
};

SimSession simulate_session(const SimConfig &cfg);

// Oracle ratio mask from per-speaker source spectrograms plus a noise
// spectrogram: m_k = p_k / (sum_j p_j + p_noise + eps) with p the
// channel-mean power; classes are the speakers plus a trailing noise class.
TfMask ideal_ratio_mask(const std::vector<Spectrogram> &sources,
                        const Spectrogram &noise, double eps = 1e-12);

// Fraction of active frames (>= 1 speaker) with >= 2 speakers.
double measured_overlap_ratio(const ActivityMatrix &activity);

}  // namespace meetsep

#endif  // MEETSEP_SIMULATE_H_
