// meetsep/beamform.h

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

#ifndef MEETSEP_BEAMFORM_H_
#define MEETSEP_BEAMFORM_H_

#include <optional>
#include <vector>

#include "meetsep/mask.h"
#include "meetsep/stft.h"

namespace meetsep {

// Per-bin Hermitian channel covariance matrices.
struct SpatialCovariance {
  std::vector<Eigen::MatrixXcd> matrices;  // bins x (channels x channels)

  Eigen::Index num_bins() const {
    return static_cast<Eigen::Index>(matrices.size());
  }
  int channels() const {
    return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows());
  }
  void validate() const;
};

struct BeamWeights {
  Eigen::MatrixXcd weights;  // bins x channels, applied as y = w^H x
  int reference_channel = 0;
};

struct MvdrConfig {
  double epsilon = 1e-6;        // diagonal loading, scaled by trace/channels
  double max_condition = 1e8;   // above this the loading escalates x10,
                                // at most 3 times, then errors out
};

// Mask-weighted covariance: Phi(f) = sum_t m(t,f) x x^H / sum_t m(t,f).
// Errors when a bin receives zero mask mass.
SpatialCovariance estimate_psd(const Spectrogram &spec, const TfMask &mask,
                               int class_index);

// Souden-style MVDR: w(f) = Phi_n^{-1} Phi_s / trace(Phi_n^{-1} Phi_s) u_ref.
// Without an explicit reference the channel maximizing the average posterior
// SNR (w^H Phi_s w)/(w^H Phi_n w) over bins is chosen.
BeamWeights mvdr_weights(const SpatialCovariance &target,
                         const SpatialCovariance &noise,
                         std::optional<int> reference = std::nullopt,
                         const MvdrConfig &cfg = {});

// y(t,f) = w(f)^H x(t,f); single-channel output.
Spectrogram beamform(const Spectrogram &spec, const BeamWeights &w);

}  // namespace meetsep

#endif  // MEETSEP_BEAMFORM_H_
