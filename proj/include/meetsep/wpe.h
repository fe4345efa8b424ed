// meetsep/wpe.h

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

#ifndef MEETSEP_WPE_H_
#define MEETSEP_WPE_H_

#include <vector>

#include "meetsep/stft.h"

namespace meetsep {

// Offline multi-channel linear-prediction dereverberation settings.
struct WpeConfig {
  int taps = 10;        // filter order per bin, in frames
  int delay = 3;        // prediction delay in frames
  int iterations = 3;   // alternating reestimation rounds
  int psd_context = 0;  // +/- frames of variance smoothing
  double epsilon = 1e-10;  // correlation regularizer, scaled by trace

  void validate() const;
};

struct WpeResult {
  Spectrogram dereverbed;
  // Negative log-likelihood of the time-varying Gaussian model (the weighted
  // prediction-error criterion incl. its log-variance term), one entry per
  // iteration; non-increasing by construction of the alternating updates.
  std::vector<double> objective;
};

// Per-frequency blockwise WPE: filters predict frame t from frames
// t-delay-tap (zero history past the signal start), variance weights are the
// channel-mean power of the current estimate. Bins are solved independently.
WpeResult wpe(const Spectrogram &spec, const WpeConfig &cfg);

}  // namespace meetsep

#endif  // MEETSEP_WPE_H_
