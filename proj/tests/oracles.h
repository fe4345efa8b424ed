// meetsep/tests/oracles.h

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

// Brute-force reference implementations the scoring metrics are checked
// against. Deliberately naive: plain frame loops, exhaustive enumeration of
// speaker assignments, top-down memoized alignment. No code here is shared
// with the library implementations.

#ifndef MEETSEP_TESTS_ORACLES_H_
#define MEETSEP_TESTS_ORACLES_H_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "meetsep/rng.h"
#include "meetsep/scoring.h"

namespace meetsep {
namespace testing {

inline Annotation random_annotation(SplitMix64 &rng, int max_speakers,
                                    int max_segments, double span_s) {
  Annotation ann;
  ann.session = "rand";
  const int speakers = 1 + static_cast<int>(rng.below(max_speakers));
  const int segments = 1 + static_cast<int>(rng.below(max_segments));
  for (int i = 0; i < segments; ++i) {
    const double start =
        std::round(rng.uniform(0.0, span_s - 0.5) * 100.0) / 100.0;
    const double dur = std::round(rng.uniform(0.2, 3.0) * 100.0) / 100.0;
    const char spk = static_cast<char>('A' + rng.below(speakers));
    ann.segments.push_back(
        {std::string(1, spk), start, std::min(start + dur, span_s)});
  }
  ann.sort_canonical();
  return ann;
}

// Frame-count DER with the speaker mapping found by exhaustively minimizing
// the total error over all injective hypothesis->reference assignments.
inline DerBreakdown der_oracle(const Annotation &ref, const Annotation &hyp,
                               double collar_s) {
  const double frame = 0.01;
  const double span = std::max(ref.max_end_s(), hyp.max_end_s());
  const long frames = static_cast<long>(std::ceil(span / frame - 1e-9));
  const std::vector<std::string> ref_spk = ref.speaker_ids();
  const std::vector<std::string> hyp_spk = hyp.speaker_ids();

  auto active = [&](const Annotation &ann, const std::string &spk, long t) {
    const double center = (t + 0.5) * frame;
    for (const auto &seg : ann.segments)
      if (seg.speaker == spk && center >= seg.start_s && center < seg.end_s)
        return true;
    return false;
  };
  auto excluded = [&](long t) {
    if (collar_s <= 0.0) return false;
    const double center = (t + 0.5) * frame;
    for (const auto &seg : ref.segments)
      if (std::abs(center - seg.start_s) <= collar_s ||
          std::abs(center - seg.end_s) <= collar_s)
        return true;
    return false;
  };

  // All injective maps hyp speaker -> ref speaker index or -1.
  std::vector<std::vector<int>> mappings;
  std::vector<int> current(hyp_spk.size(), -1);
  std::vector<char> used(ref_spk.size(), 0);
  std::function<void(size_t)> recurse = [&](size_t h) {
    if (h == hyp_spk.size()) {
      mappings.push_back(current);
      return;
    }
    current[h] = -1;
    recurse(h + 1);
    for (size_t r = 0; r < ref_spk.size(); ++r) {
      if (used[r]) continue;
      used[r] = 1;
      current[h] = static_cast<int>(r);
      recurse(h + 1);
      used[r] = 0;
      current[h] = -1;
    }
  };
  recurse(0);

  long best_err = -1;
  long best_miss = 0, best_fa = 0, best_conf = 0, ref_total = 0;
  for (const auto &mapping : mappings) {
    long miss = 0, fa = 0, conf = 0, total = 0;
    for (long t = 0; t < frames; ++t) {
      if (excluded(t)) continue;
      std::set<std::string> r_act, h_act;
      for (const auto &s : ref_spk)
        if (active(ref, s, t)) r_act.insert(s);
      for (const auto &s : hyp_spk)
        if (active(hyp, s, t)) h_act.insert(s);
      int correct = 0;
      for (size_t h = 0; h < hyp_spk.size(); ++h)
        if (mapping[h] >= 0 && h_act.count(hyp_spk[h]) &&
            r_act.count(ref_spk[static_cast<size_t>(mapping[h])]))
          ++correct;
      const int nr = static_cast<int>(r_act.size());
      const int nh = static_cast<int>(h_act.size());
      miss += std::max(0, nr - nh);
      fa += std::max(0, nh - nr);
      conf += std::min(nr, nh) - correct;
      total += nr;
    }
    const long err = miss + fa + conf;
    if (best_err < 0 || err < best_err) {
      best_err = err;
      best_miss = miss;
      best_fa = fa;
      best_conf = conf;
      ref_total = total;
    }
  }

  DerBreakdown out;
  const double denom = static_cast<double>(ref_total);
  out.miss_pct = 100.0 * static_cast<double>(best_miss) / denom;
  out.fa_pct = 100.0 * static_cast<double>(best_fa) / denom;
  out.spkerr_pct = 100.0 * static_cast<double>(best_conf) / denom;
  out.der_pct = out.miss_pct + out.fa_pct + out.spkerr_pct;
  out.scored_speech_s = denom * frame;
  return out;
}

// Random word-segment scoring case: independent reference and hypothesis.
inline std::pair<std::vector<WordSegment>, std::vector<WordSegment>>
random_word_case(SplitMix64 &rng, int max_speakers, int max_words) {
  static const char *kVocab[] = {"a", "b", "c", "d"};
  auto make = [&](const std::string &prefix) {
    std::vector<WordSegment> words;
    const int speakers = 1 + static_cast<int>(rng.below(max_speakers));
    for (int s = 0; s < speakers; ++s) {
      const int n = static_cast<int>(rng.below(max_words + 1));
      double t = rng.uniform(0.0, 2.0);
      for (int i = 0; i < n; ++i) {
        const double dur = rng.uniform(0.2, 0.5);
        words.push_back({kVocab[rng.below(4)], t, t + dur,
                         prefix + std::to_string(s)});
        t += dur + rng.uniform(0.05, 1.5);
      }
    }
    return words;
  };
  return {make("r"), make("h")};
}

namespace detail {

inline std::string oracle_normalize(const std::string &raw) {
  std::string out;
  for (const char ch : raw)
    if (!std::ispunct(static_cast<unsigned char>(ch)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

// Top-down memoized time-constrained edit distance.
inline long long tc_edit(const std::vector<WordSegment> &ref,
                         const std::vector<WordSegment> &hyp, size_t i,
                         size_t j, const TcpWerConfig &cfg,
                         std::map<std::pair<size_t, size_t>, long long> &memo) {
  if (i == ref.size() && j == hyp.size()) return 0;
  const auto key = std::make_pair(i, j);
  const auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  long long best = std::numeric_limits<long long>::max() / 4;
  if (i < ref.size())
    best = std::min(best, 1 + tc_edit(ref, hyp, i + 1, j, cfg, memo));
  if (j < hyp.size())
    best = std::min(best, 1 + tc_edit(ref, hyp, i, j + 1, cfg, memo));
  if (i < ref.size() && j < hyp.size()) {
    bool allowed;
    if (cfg.time_mode == TcpWerConfig::TimeMode::kMidpoint)
      allowed = std::abs(ref[i].midpoint_s() - hyp[j].midpoint_s()) <=
                cfg.collar_s;
    else
      allowed = ref[i].start_s - cfg.collar_s <= hyp[j].end_s &&
                hyp[j].start_s - cfg.collar_s <= ref[i].end_s;
    if (allowed)
      best = std::min(best, (ref[i].word == hyp[j].word ? 0LL : 1LL) +
                                tc_edit(ref, hyp, i + 1, j + 1, cfg, memo));
  }
  memo[key] = best;
  return best;
}

}  // namespace detail

// Minimum total word errors over every injective assignment of hypothesis
// speaker streams to reference streams.
inline long long tcp_oracle(const std::vector<WordSegment> &reference,
                            const std::vector<WordSegment> &hypothesis,
                            const TcpWerConfig &cfg) {
  std::map<std::string, std::vector<WordSegment>> ref_by, hyp_by;
  for (const auto &w : reference) {
    WordSegment n = w;
    n.word = detail::oracle_normalize(w.word);
    if (!n.word.empty()) ref_by[w.speaker].push_back(n);
  }
  for (const auto &w : hypothesis) {
    WordSegment n = w;
    n.word = detail::oracle_normalize(w.word);
    if (!n.word.empty()) hyp_by[w.speaker].push_back(n);
  }
  std::vector<std::vector<WordSegment>> refs, hyps;
  for (auto &entry : ref_by) {
    std::sort(entry.second.begin(), entry.second.end(),
              [](const WordSegment &a, const WordSegment &b) {
                return a.start_s < b.start_s;
              });
    refs.push_back(entry.second);
  }
  for (auto &entry : hyp_by) {
    std::sort(entry.second.begin(), entry.second.end(),
              [](const WordSegment &a, const WordSegment &b) {
                return a.start_s < b.start_s;
              });
    hyps.push_back(entry.second);
  }

  long long best = std::numeric_limits<long long>::max() / 4;
  std::vector<int> assign(hyps.size(), -1);
  std::vector<char> used(refs.size(), 0);
  std::function<void(size_t)> recurse = [&](size_t h) {
    if (h == hyps.size()) {
      long long total = 0;
      std::vector<char> ref_hit(refs.size(), 0);
      for (size_t j = 0; j < hyps.size(); ++j) {
        if (assign[j] < 0) {
          total += static_cast<long long>(hyps[j].size());  // insertions
        } else {
          std::map<std::pair<size_t, size_t>, long long> memo;
          total += detail::tc_edit(refs[static_cast<size_t>(assign[j])],
                                   hyps[j], 0, 0, cfg, memo);
          ref_hit[static_cast<size_t>(assign[j])] = 1;
        }
      }
      for (size_t r = 0; r < refs.size(); ++r)
        if (!ref_hit[r]) total += static_cast<long long>(refs[r].size());
      best = std::min(best, total);
      return;
    }
    assign[h] = -1;
    recurse(h + 1);
    for (size_t r = 0; r < refs.size(); ++r) {
      if (used[r]) continue;
      used[r] = 1;
      assign[h] = static_cast<int>(r);
      recurse(h + 1);
      used[r] = 0;
      assign[h] = -1;
    }
  };
  recurse(0);
  return best;
}

}  // namespace testing
}  // namespace meetsep

#endif  // MEETSEP_TESTS_ORACLES_H_
