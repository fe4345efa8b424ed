// meetsep/scoring.h

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

#ifndef MEETSEP_SCORING_H_
#define MEETSEP_SCORING_H_

#include <string>
#include <vector>

#include "meetsep/annotation.h"
#include "meetsep/wave.h"

namespace meetsep {

// Diarization error rate split into its additive parts, in percent of the
// scored reference speaker time.
struct DerBreakdown {
  double fa_pct = 0.0;
  double miss_pct = 0.0;
  double spkerr_pct = 0.0;
  double der_pct = 0.0;
  double scored_speech_s = 0.0;
};

inline constexpr double kDerFrameSize = 0.01;  // 10 ms scoring resolution

// Frame-based DER with an optimal global speaker mapping (maximum overlap
// assignment). Frames within +/- collar of any reference boundary are
// excluded. Errors on an empty reference.
DerBreakdown der(const Annotation &reference, const Annotation &hypothesis,
                 double collar_s = 0.0);

// DER is the sum of its parts; errors on negative inputs.
double combine_der(double fa_pct, double miss_pct, double spkerr_pct);

// One scored word with its time span and speaker stream.
struct WordSegment {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string speaker;

  double midpoint_s() const { return 0.5 * (start_s + end_s); }
};

struct TcpWerReport {
  long long substitutions = 0;
  long long insertions = 0;
  long long deletions = 0;
  long long ref_words = 0;
  double tcpwer_pct = 0.0;
  // hyp speaker -> ref speaker pairs chosen by the assignment ("" = dummy).
  std::vector<std::pair<std::string, std::string>> assignment;
};

struct TcpWerConfig {
  double collar_s = 5.0;
  // midpoint: words may match when |mid_ref - mid_hyp| <= collar.
  // overlap:  words may match when their intervals, widened by the collar,
  //           intersect.
  enum class TimeMode { kMidpoint, kOverlap } time_mode = TimeMode::kMidpoint;
};

// Time-constrained minimum-permutation WER: hypothesis speaker streams are
// assigned to reference speakers minimizing total word errors (exact via a
// padded min-cost assignment); each pair is aligned with a Levenshtein DP in
// which matches and substitutions are only permitted inside the time collar.
// Unassigned hypothesis streams count as insertions, unassigned reference
// streams as deletions. Tokens are lowercased and stripped of punctuation.
TcpWerReport tcpwer(const std::vector<WordSegment> &reference,
                    const std::vector<WordSegment> &hypothesis,
                    const TcpWerConfig &cfg = {});

// Scale-invariant SDR in dB against the optimally scaled reference,
// clamped to [-60, 60]. Errors when lengths differ or the reference is zero.
double si_sdr(const MultiChannelWave &estimate, const MultiChannelWave &reference);
double si_sdr(const Eigen::VectorXd &estimate, const Eigen::VectorXd &reference);

}  // namespace meetsep

#endif  // MEETSEP_SCORING_H_
