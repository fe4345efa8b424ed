// meetsep/tests/helpers.h

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

#ifndef MEETSEP_TESTS_HELPERS_H_
#define MEETSEP_TESTS_HELPERS_H_

#include <cmath>
#include <complex>

#include "meetsep/rng.h"
#include "meetsep/wave.h"

namespace meetsep {
namespace testing {

inline MultiChannelWave random_wave(int channels, Eigen::Index samples,
                                    int rate, uint64_t seed) {
  SplitMix64 rng(seed);
  MultiChannelWave w;
  w.sample_rate = rate;
  w.samples.resize(channels, samples);
  for (int c = 0; c < channels; ++c)
    for (Eigen::Index n = 0; n < samples; ++n)
      w.samples(c, n) = rng.uniform(-0.5, 0.5);
  return w;
}

// Reconstruction SNR in dB of est against ref over their common length.
inline double reconstruction_snr_db(const Eigen::MatrixXd &ref,
                                    const Eigen::MatrixXd &est) {
  const double num = ref.squaredNorm();
  const double den = (ref - est).squaredNorm();
  if (den == 0.0) return 300.0;
  return 10.0 * std::log10(num / den);
}

}  // namespace testing
}  // namespace meetsep

#endif  // MEETSEP_TESTS_HELPERS_H_
