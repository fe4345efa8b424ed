// meetsep/cacgmm.h

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

#ifndef MEETSEP_CACGMM_H_
#define MEETSEP_CACGMM_H_

#include <vector>

#include "meetsep/mask.h"
#include "meetsep/stft.h"

namespace meetsep {

// Guided complex angular central Gaussian mixture settings.
struct CacgmmConfig {
  int iterations = 20;
  double epsilon = 1e-10;   // covariance regularizer, scaled by trace/channels
  double noise_floor = 1.0; // lower bound on the noise-class guide activity
  double window_s = 120.0;
  double window_shift_s = 60.0;
  double rectify_threshold = 0.35;
  double guide_context_s = 0.2;  // dilation of speaker activity before the
                                 // constraint is applied

  void validate() const;
};

struct CacgmmResult {
  TfMask mask;  // class posteriors: guide speakers + trailing noise class
  // Total data log-likelihood (up to an additive constant) after each EM
  // iteration; non-decreasing.
  std::vector<double> log_likelihood;
};

// One guide-constrained mixture fit over the full spectrogram. Per frequency
// bin, unit-normalized channel vectors are modeled as a mixture of complex
// angular central Gaussians whose frame-varying weights come from the guide:
// speaker classes are weighted by their (dilated) activity and forced to zero
// posterior wherever the binarized activity is zero; the noise class is
// always active. Without `init` the initial responsibilities are the guide
// broadcast over frequency; with `init` (speaker classes, or speakers +
// noise) the given masks replace that initialization.
CacgmmResult guided_cacgmm(const Spectrogram &spec,
                           const ActivityMatrix &guide,
                           const TfMask *init, const CacgmmConfig &cfg);

// The frequency-broadcast initial responsibilities guided_cacgmm would use
// without an init mask; exposed so callers can construct equivalent inits.
TfMask time_broadcast_init(const Spectrogram &spec, const ActivityMatrix &guide,
                           const CacgmmConfig &cfg);

// Runs guided_cacgmm on overlapping windows (window_s / window_shift_s) and
// stitches the masks with linear cross-fades; class identity is anchored by
// the guide rows so no permutation alignment is needed. `init`, when given,
// is sliced per window.
TfMask sliding_window_gss(const Spectrogram &spec, const ActivityMatrix &guide,
                          const CacgmmConfig &cfg,
                          const TfMask *init = nullptr);

// Threshold on the frequency-averaged speaker masks: frame activity is 1 iff
// mean_f mask >= rectify_threshold. The noise class is dropped.
ActivityMatrix rectify_activity(const TfMask &mask, const CacgmmConfig &cfg);

}  // namespace meetsep

#endif  // MEETSEP_CACGMM_H_
