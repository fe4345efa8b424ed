// meetsep/rng.h

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

#ifndef MEETSEP_RNG_H_
#define MEETSEP_RNG_H_

#include <cmath>
#include <cstdint>

namespace meetsep {

// SplitMix64: a 64-bit counter-based generator. The state advances by the
// fixed increment 0x9e3779b97f4a7c15 and each output is a bijective mix of
// the counter, so the stream is identical on every platform. We use it
// instead of the standard <random> engines/distributions because the
// distribution adapters are not bit-specified by the C++ standard.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed), has_cached_(false) {}

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

  // Uniform double in [0, 1) with 53 significant bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller on our own uniforms.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Independent substream; `stream` tags the purpose so that adding a new
  // consumer never shifts the draws of existing ones.
  static SplitMix64 fork(uint64_t seed, uint64_t stream) {
    return SplitMix64(mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

 private:
  uint64_t state_;
  bool has_cached_;
  double cached_ = 0.0;
};

}  // namespace meetsep

#endif  // MEETSEP_RNG_H_
