// meetsep/src/scoring.cc

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

#include "meetsep/scoring.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

namespace meetsep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Min-cost assignment on a square matrix (Kuhn-Munkres with potentials);
// returns the column matched to each row.
std::vector<int> hungarian(const Eigen::MatrixXd &cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0),
      v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<size_t>(n) + 1, 0),
      way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = match[static_cast<size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                           v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (match[static_cast<size_t>(j)] != 0)
      row_to_col[static_cast<size_t>(match[static_cast<size_t>(j)]) - 1] =
          j - 1;
  return row_to_col;
}

}  // namespace

// --- DER ---------------------------------------------------------------------

DerBreakdown der(const Annotation &reference, const Annotation &hypothesis,
                 double collar_s) {
  reference.validate();
  hypothesis.validate();
  if (reference.empty())
    throw_invalid("DER undefined for an empty reference annotation");
  if (collar_s < 0.0) throw_invalid("collar must be >= 0");

  const std::vector<std::string> ref_spk = reference.speaker_ids();
  const std::vector<std::string> hyp_spk = hypothesis.speaker_ids();
  const int nr = static_cast<int>(ref_spk.size());
  const int nh = static_cast<int>(hyp_spk.size());
  const double span = std::max(reference.max_end_s(), hypothesis.max_end_s());
  const Eigen::Index frames =
      static_cast<Eigen::Index>(std::ceil(span / kDerFrameSize - 1e-9));

  // A frame is active for a speaker when its center lies inside one of that
  // speaker's segments; frames inside the collar around any reference
  // boundary are excluded.
  auto speaker_row = [&](const Annotation &ann, const std::string &spk) {
    std::vector<char> row(static_cast<size_t>(frames), 0);
    for (const auto &seg : ann.segments) {
      if (seg.speaker != spk) continue;
      for (Eigen::Index t = 0; t < frames; ++t) {
        const double center = (t + 0.5) * kDerFrameSize;
        if (center >= seg.start_s && center < seg.end_s)
          row[static_cast<size_t>(t)] = 1;
      }
    }
    return row;
  };
  std::vector<std::vector<char>> ref_active, hyp_active;
  for (const auto &s : ref_spk) ref_active.push_back(speaker_row(reference, s));
  for (const auto &s : hyp_spk) hyp_active.push_back(speaker_row(hypothesis, s));

  std::vector<char> excluded(static_cast<size_t>(frames), 0);
  if (collar_s > 0.0) {
    for (const auto &seg : reference.segments) {
      for (const double b : {seg.start_s, seg.end_s}) {
        for (Eigen::Index t = 0; t < frames; ++t) {
          const double center = (t + 0.5) * kDerFrameSize;
          if (std::abs(center - b) <= collar_s)
            excluded[static_cast<size_t>(t)] = 1;
        }
      }
    }
  }

  // Optimal speaker mapping: maximize total both-active overlap.
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(nr, nh);
  for (int r = 0; r < nr; ++r)
    for (int h = 0; h < nh; ++h)
      for (Eigen::Index t = 0; t < frames; ++t)
        if (!excluded[static_cast<size_t>(t)] &&
            ref_active[static_cast<size_t>(r)][static_cast<size_t>(t)] &&
            hyp_active[static_cast<size_t>(h)][static_cast<size_t>(t)])
          overlap(r, h) += 1.0;

  std::vector<int> ref_to_hyp(static_cast<size_t>(nr), -1);
  if (nh > 0) {
    const int n = std::max(nr, nh);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(nr, nh) = -overlap;
    const std::vector<int> assign = hungarian(cost);
    for (int r = 0; r < nr; ++r)
      if (assign[static_cast<size_t>(r)] < nh &&
          overlap(r, assign[static_cast<size_t>(r)]) > 0.0)
        ref_to_hyp[static_cast<size_t>(r)] = assign[static_cast<size_t>(r)];
  }

  long long miss = 0, fa = 0, conf = 0, ref_total = 0;
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (excluded[static_cast<size_t>(t)]) continue;
    int n_ref = 0, n_hyp = 0, n_correct = 0;
    for (int r = 0; r < nr; ++r)
      n_ref += ref_active[static_cast<size_t>(r)][static_cast<size_t>(t)];
    for (int h = 0; h < nh; ++h)
      n_hyp += hyp_active[static_cast<size_t>(h)][static_cast<size_t>(t)];
    for (int r = 0; r < nr; ++r) {
      const int h = ref_to_hyp[static_cast<size_t>(r)];
      if (h >= 0 &&
          ref_active[static_cast<size_t>(r)][static_cast<size_t>(t)] &&
          hyp_active[static_cast<size_t>(h)][static_cast<size_t>(t)])
        ++n_correct;
    }
    ref_total += n_ref;
    miss += std::max(0, n_ref - n_hyp);
    fa += std::max(0, n_hyp - n_ref);
    conf += std::min(n_ref, n_hyp) - n_correct;
  }
  if (ref_total == 0)
    throw_invalid("no scored reference speech (everything inside the collar)");

  DerBreakdown out;
  const double denom = static_cast<double>(ref_total);
  out.miss_pct = 100.0 * static_cast<double>(miss) / denom;
  out.fa_pct = 100.0 * static_cast<double>(fa) / denom;
  out.spkerr_pct = 100.0 * static_cast<double>(conf) / denom;
  out.der_pct = out.miss_pct + out.fa_pct + out.spkerr_pct;
  out.scored_speech_s = denom * kDerFrameSize;
  return out;
}

double combine_der(double fa_pct, double miss_pct, double spkerr_pct) {
  if (fa_pct < 0.0 || miss_pct < 0.0 || spkerr_pct < 0.0)
    throw_invalid("DER components must be non-negative");
  return fa_pct + miss_pct + spkerr_pct;
}

// --- tcpWER ------------------------------------------------------------------

namespace {

std::string normalize_word(const std::string &raw) {
  std::string out;
  for (const char ch : raw) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::ispunct(u)) continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

struct Stream {
  std::string speaker;
  std::vector<WordSegment> words;
};

std::vector<Stream> group_streams(const std::vector<WordSegment> &words) {
  std::map<std::string, std::vector<WordSegment>> by_speaker;
  for (const auto &w : words) {
    WordSegment norm = w;
    norm.word = normalize_word(w.word);
    if (norm.word.empty()) continue;
    if (norm.end_s < norm.start_s)
      throw_invalid("word \"", w.word, "\" ends before it starts");
    by_speaker[w.speaker].push_back(std::move(norm));
  }
  std::vector<Stream> out;
  for (auto &entry : by_speaker) {
    std::sort(entry.second.begin(), entry.second.end(),
              [](const WordSegment &a, const WordSegment &b) {
                if (a.start_s != b.start_s) return a.start_s < b.start_s;
                if (a.end_s != b.end_s) return a.end_s < b.end_s;
                return a.word < b.word;
              });
    out.push_back({entry.first, std::move(entry.second)});
  }
  return out;
}

bool time_allowed(const WordSegment &ref, const WordSegment &hyp,
                  const TcpWerConfig &cfg) {
  if (cfg.time_mode == TcpWerConfig::TimeMode::kMidpoint)
    return std::abs(ref.midpoint_s() - hyp.midpoint_s()) <= cfg.collar_s;
  return ref.start_s - cfg.collar_s <= hyp.end_s &&
         hyp.start_s - cfg.collar_s <= ref.end_s;
}

struct PairAlignment {
  long long cost = 0;
  long long sub = 0, ins = 0, del = 0;
};

// Time-constrained Levenshtein: matches and substitutions only where the
// collar permits, otherwise the words fall apart into deletion + insertion.
PairAlignment align_pair(const std::vector<WordSegment> &ref,
                         const std::vector<WordSegment> &hyp,
                         const TcpWerConfig &cfg) {
  const size_t nr = ref.size(), nh = hyp.size();
  const long long big = std::numeric_limits<long long>::max() / 4;
  std::vector<std::vector<long long>> d(nr + 1,
                                        std::vector<long long>(nh + 1, big));
  std::vector<std::vector<char>> from(nr + 1, std::vector<char>(nh + 1, 0));
  d[0][0] = 0;
  for (size_t i = 1; i <= nr; ++i) {
    d[i][0] = static_cast<long long>(i);
    from[i][0] = 'd';
  }
  for (size_t j = 1; j <= nh; ++j) {
    d[0][j] = static_cast<long long>(j);
    from[0][j] = 'i';
  }
  for (size_t i = 1; i <= nr; ++i) {
    for (size_t j = 1; j <= nh; ++j) {
      long long best = d[i - 1][j] + 1;
      char how = 'd';
      if (d[i][j - 1] + 1 < best) {
        best = d[i][j - 1] + 1;
        how = 'i';
      }
      if (time_allowed(ref[i - 1], hyp[j - 1], cfg)) {
        const long long sub_cost =
            d[i - 1][j - 1] + (ref[i - 1].word == hyp[j - 1].word ? 0 : 1);
        if (sub_cost < best) {
          best = sub_cost;
          how = ref[i - 1].word == hyp[j - 1].word ? 'm' : 's';
        }
      }
      d[i][j] = best;
      from[i][j] = how;
    }
  }
  PairAlignment out;
  out.cost = d[nr][nh];
  size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    switch (from[i][j]) {
      case 'd':
        ++out.del;
        --i;
        break;
      case 'i':
        ++out.ins;
        --j;
        break;
      case 's':
        ++out.sub;
        --i;
        --j;
        break;
      default:  // match
        --i;
        --j;
        break;
    }
  }
  return out;
}

}  // namespace

TcpWerReport tcpwer(const std::vector<WordSegment> &reference,
                    const std::vector<WordSegment> &hypothesis,
                    const TcpWerConfig &cfg) {
  if (cfg.collar_s < 0.0) throw_invalid("tcpWER collar must be >= 0");
  const std::vector<Stream> ref_streams = group_streams(reference);
  const std::vector<Stream> hyp_streams = group_streams(hypothesis);
  if (ref_streams.empty())
    throw_invalid("tcpWER undefined for an empty reference");

  const int nr = static_cast<int>(ref_streams.size());
  const int nh = static_cast<int>(hyp_streams.size());

  // Square assignment with dummy rows/columns: an unmatched reference stream
  // costs its length in deletions, an unmatched hypothesis stream its length
  // in insertions.
  const int n = nr + nh;
  Eigen::MatrixXd cost(n, n);
  std::vector<std::vector<PairAlignment>> pair(
      static_cast<size_t>(nr), std::vector<PairAlignment>(static_cast<size_t>(nh)));
  for (int r = 0; r < nr; ++r)
    for (int h = 0; h < nh; ++h) {
      pair[static_cast<size_t>(r)][static_cast<size_t>(h)] =
          align_pair(ref_streams[static_cast<size_t>(r)].words,
                     hyp_streams[static_cast<size_t>(h)].words, cfg);
      cost(r, h) = static_cast<double>(
          pair[static_cast<size_t>(r)][static_cast<size_t>(h)].cost);
    }
  for (int r = 0; r < nr; ++r)
    for (int j = nh; j < n; ++j)
      cost(r, j) = static_cast<double>(
          ref_streams[static_cast<size_t>(r)].words.size());
  for (int i = nr; i < n; ++i)
    for (int h = 0; h < nh; ++h)
      cost(i, h) = static_cast<double>(
          hyp_streams[static_cast<size_t>(h)].words.size());
  cost.bottomRightCorner(nh, nr).setZero();

  const std::vector<int> assign = hungarian(cost);

  TcpWerReport report;
  for (const auto &s : ref_streams)
    report.ref_words += static_cast<long long>(s.words.size());

  std::vector<char> hyp_used(static_cast<size_t>(nh), 0);
  for (int r = 0; r < nr; ++r) {
    const int col = assign[static_cast<size_t>(r)];
    if (col < nh) {
      const PairAlignment &a =
          pair[static_cast<size_t>(r)][static_cast<size_t>(col)];
      report.substitutions += a.sub;
      report.insertions += a.ins;
      report.deletions += a.del;
      report.assignment.emplace_back(
          hyp_streams[static_cast<size_t>(col)].speaker,
          ref_streams[static_cast<size_t>(r)].speaker);
      hyp_used[static_cast<size_t>(col)] = 1;
    } else {
      report.deletions += static_cast<long long>(
          ref_streams[static_cast<size_t>(r)].words.size());
      report.assignment.emplace_back("", ref_streams[static_cast<size_t>(r)].speaker);
    }
  }
  for (int h = 0; h < nh; ++h) {
    if (!hyp_used[static_cast<size_t>(h)]) {
      report.insertions += static_cast<long long>(
          hyp_streams[static_cast<size_t>(h)].words.size());
      report.assignment.emplace_back(hyp_streams[static_cast<size_t>(h)].speaker,
                                     "");
    }
  }
  report.tcpwer_pct = 100.0 *
                      static_cast<double>(report.substitutions +
                                          report.insertions + report.deletions) /
                      static_cast<double>(report.ref_words);
  return report;
}

// --- SI-SDR ------------------------------------------------------------------

double si_sdr(const Eigen::VectorXd &estimate, const Eigen::VectorXd &reference) {
  if (estimate.size() != reference.size())
    throw_invalid("SI-SDR needs equal lengths, got ", estimate.size(), " vs ",
                  reference.size());
  const double ref_energy = reference.squaredNorm();
  if (ref_energy <= 0.0) throw_invalid("SI-SDR undefined for a zero reference");
  const double alpha = estimate.dot(reference) / ref_energy;
  const Eigen::VectorXd target = alpha * reference;
  const double num = target.squaredNorm();
  const double den = (estimate - target).squaredNorm();
  if (den <= 0.0) return 60.0;
  if (num <= 0.0) return -60.0;
  return std::clamp(10.0 * std::log10(num / den), -60.0, 60.0);
}

double si_sdr(const MultiChannelWave &estimate,
              const MultiChannelWave &reference) {
  if (estimate.channels() != 1 || reference.channels() != 1)
    throw_invalid("SI-SDR expects single-channel waves");
  return si_sdr(Eigen::VectorXd(estimate.samples.row(0)),
                Eigen::VectorXd(reference.samples.row(0)));
}

}  // namespace meetsep
