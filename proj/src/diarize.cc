// meetsep/src/diarize.cc

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

#include "meetsep/diarize.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meetsep/rng.h"

namespace meetsep {

void EmbeddingSequence::validate() const {
  if (static_cast<Eigen::Index>(starts_s.size()) != num_windows() ||
      static_cast<Eigen::Index>(ends_s.size()) != num_windows())
    throw_invalid("embedding window time count mismatch");
  for (Eigen::Index i = 0; i < num_windows(); ++i) {
    if (!(ends_s[static_cast<size_t>(i)] > starts_s[static_cast<size_t>(i)]))
      throw_invalid("embedding window ", i, " has non-positive span");
    const double n = vectors.row(i).norm();
    if (std::abs(n - 1.0) > 1e-6)
      throw_invalid("embedding row ", i, " is not unit-normalized (norm ", n,
                    ")");
  }
}

void SpectralClusterConfig::validate() const {
  if (!(top_p > 0.0) || top_p > 1.0)
    throw_invalid("top_p must lie in (0, 1], got ", top_p);
  if (max_speakers < 1) throw_invalid("max_speakers must be >= 1");
}

EmbeddingSequence extract_embeddings(const FeatureSequence &features,
                                     double window_s, double hop_s) {
  features.validate();
  if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s)
    throw_invalid("invalid embedding window ", window_s, " / hop ", hop_s);
  const double dt = features.frame_shift_s;
  const Eigen::Index fpw = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(window_s / dt)));
  const Eigen::Index fph = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(hop_s / dt)));
  if (features.num_frames() < fpw)
    throw_invalid("features span ", features.num_frames() * dt,
                  " s, shorter than one embedding window of ", window_s, " s");
  const Eigen::Index windows = (features.num_frames() - fpw) / fph + 1;
  const int dim = features.dim();

  EmbeddingSequence out;
  out.vectors.resize(windows, 2 * dim);
  out.starts_s.resize(static_cast<size_t>(windows));
  out.ends_s.resize(static_cast<size_t>(windows));
  for (Eigen::Index w = 0; w < windows; ++w) {
    const auto block = features.vectors.middleRows(w * fph, fpw);
    Eigen::RowVectorXd mean = block.colwise().mean();
    const Eigen::RowVectorXd var =
        (block.rowwise() - mean).array().square().colwise().mean();
    Eigen::RowVectorXd sd = var.array().sqrt();
    // Remove the per-window scalar offset of each half so the embedding
    // carries the spectral pattern rather than the overall level.
    mean.array() -= mean.mean();
    sd.array() -= sd.mean();
    Eigen::RowVectorXd v(2 * dim);
    v << mean, sd;
    const double n = v.norm();
    if (n > 1e-12) {
      out.vectors.row(w) = v / n;
    } else {  // degenerate constant window
      out.vectors.row(w).setZero();
      out.vectors(w, 0) = 1.0;
    }
    out.starts_s[static_cast<size_t>(w)] = w * fph * dt;
    out.ends_s[static_cast<size_t>(w)] = (w * fph + fpw) * dt;
  }
  return out;
}

namespace {

// Cosine affinity, negatives clipped, entries below each row's top_p
// quantile zeroed (ties kept), symmetrized.
Eigen::MatrixXd affinity_matrix(const EmbeddingSequence &emb, double top_p) {
  const Eigen::Index n = emb.num_windows();
  Eigen::MatrixXd a = (emb.vectors * emb.vectors.transpose()).cwiseMax(0.0);
  const Eigen::Index keep = std::max<Eigen::Index>(
      2, std::min<Eigen::Index>(
             n, static_cast<Eigen::Index>(std::ceil(
                    (1.0 - top_p) * static_cast<double>(n)))));
  Eigen::MatrixXd pruned = a;
  std::vector<double> row(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<size_t>(j)] = a(i, j);
    std::nth_element(row.begin(), row.begin() + (keep - 1), row.end(),
                     std::greater<double>());
    const double thr = row[static_cast<size_t>(keep - 1)];
    for (Eigen::Index j = 0; j < n; ++j)
      if (a(i, j) < thr) pruned(i, j) = 0.0;
  }
  return 0.5 * (pruned + pruned.transpose());
}

// Eigen-decomposition of the normalized graph Laplacian, ascending.
void laplacian_eigs(const Eigen::MatrixXd &affinity, Eigen::VectorXd *values,
                    Eigen::MatrixXd *vectors) {
  const Eigen::Index n = affinity.rows();
  Eigen::VectorXd deg = affinity.rowwise().sum().cwiseMax(1e-12);
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd lap =
      Eigen::MatrixXd::Identity(n, n) -
      inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (lap + lap.transpose()));
  if (es.info() != Eigen::Success)
    throw_error("Laplacian eigen-decomposition failed");
  *values = es.eigenvalues();
  *vectors = es.eigenvectors();
}

// Seeded farthest-point k-means; deterministic for a fixed seed, clusters
// never left empty.
std::vector<int> kmeans(const Eigen::MatrixXd &points, int k, uint64_t seed) {
  const Eigen::Index n = points.rows();
  SplitMix64 rng(seed);
  std::vector<Eigen::Index> centers_idx;
  centers_idx.push_back(static_cast<Eigen::Index>(rng.below(static_cast<uint64_t>(n))));
  Eigen::VectorXd min_dist =
      (points.rowwise() - points.row(centers_idx[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers_idx.size()) < k) {
    Eigen::Index next = 0;
    min_dist.maxCoeff(&next);
    centers_idx.push_back(next);
    const Eigen::VectorXd d =
        (points.rowwise() - points.row(next)).rowwise().squaredNorm();
    min_dist = min_dist.cwiseMin(d);
  }
  Eigen::MatrixXd centers(k, points.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = points.row(centers_idx[static_cast<size_t>(c)]);

  std::vector<int> labels(static_cast<size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<size_t>(i)] != best) {
        labels[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    // Means; an emptied cluster is reseeded with the point farthest from
    // its current center.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(static_cast<size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<size_t>(i)]) += points.row(i);
      ++counts[static_cast<size_t>(labels[static_cast<size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
      } else {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (points.row(i) - centers.row(labels[static_cast<size_t>(i)]))
                  .squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
        labels[static_cast<size_t>(far)] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labels;
}

}  // namespace

int estimate_speaker_count(const EmbeddingSequence &embeddings, int max_k,
                           const SpectralClusterConfig &cfg) {
  embeddings.validate();
  cfg.validate();
  if (max_k < 1) throw_invalid("max_k must be >= 1, got ", max_k);
  const Eigen::Index n = embeddings.num_windows();
  if (n < 2) throw_invalid("speaker count estimation needs >= 2 windows");

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  laplacian_eigs(affinity_matrix(embeddings, cfg.top_p), &values, &vectors);

  // Gap search restricted to the near-null part of the spectrum: cluster
  // eigenvalues sit close to zero, so gaps that open above the cap separate
  // noise from noise, not clusters from clusters.
  constexpr double kEigengapCap = 0.4;
  const int k_max = static_cast<int>(std::min<Eigen::Index>(max_k, n - 1));
  int best_k = 1;
  double best_gap = -1.0;
  for (int k = 1; k <= k_max; ++k) {
    if (values[k - 1] >= kEigengapCap && best_gap >= 0.0) break;
    const double gap = values[k] - values[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return best_k;
}

std::vector<int> spectral_cluster(const EmbeddingSequence &embeddings,
                                  std::optional<int> k,
                                  const SpectralClusterConfig &cfg) {
  embeddings.validate();
  cfg.validate();
  const Eigen::Index n = embeddings.num_windows();
  if (n == 0) return {};
  int kk = k ? *k : (n >= 2 ? estimate_speaker_count(embeddings,
                                                     cfg.max_speakers, cfg)
                            : 1);
  if (kk < 1 || kk > n)
    throw_invalid("cluster count ", kk, " out of range [1, ", n, "]");
  if (kk == 1) return std::vector<int>(static_cast<size_t>(n), 0);

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  laplacian_eigs(affinity_matrix(embeddings, cfg.top_p), &values, &vectors);

  Eigen::MatrixXd u = vectors.leftCols(kk);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 1e-12) u.row(i) /= norm;
  }
  return kmeans(u, kk, cfg.kmeans_seed);
}

Annotation recluster(const std::vector<StreamEmbeddings> &streams,
                     std::optional<int> fixed_k, const std::string &session,
                     const SpectralClusterConfig &cfg) {
  if (streams.empty()) throw_invalid("recluster needs at least one stream");

  struct Item {
    double start, end;
    Eigen::RowVectorXd vec;
  };
  std::vector<Item> items;
  for (const auto &stream : streams) {
    stream.embeddings.validate();
    for (Eigen::Index w = 0; w < stream.embeddings.num_windows(); ++w)
      items.push_back({stream.embeddings.starts_s[static_cast<size_t>(w)],
                       stream.embeddings.ends_s[static_cast<size_t>(w)],
                       stream.embeddings.vectors.row(w)});
  }
  if (items.empty()) throw_invalid("recluster received no windows");
  if (fixed_k && (*fixed_k < 1 ||
                  *fixed_k > static_cast<int>(items.size())))
    throw_invalid("fixed speaker count ", *fixed_k, " exceeds ", items.size(),
                  " pooled windows");

  // Canonical pooling order makes the result independent of stream order.
  std::sort(items.begin(), items.end(), [](const Item &a, const Item &b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    for (Eigen::Index j = 0; j < a.vec.size(); ++j)
      if (a.vec[j] != b.vec[j]) return a.vec[j] < b.vec[j];
    return false;
  });

  EmbeddingSequence pooled;
  pooled.vectors.resize(static_cast<Eigen::Index>(items.size()),
                        items.front().vec.size());
  for (size_t i = 0; i < items.size(); ++i) {
    pooled.vectors.row(static_cast<Eigen::Index>(i)) = items[i].vec;
    pooled.starts_s.push_back(items[i].start);
    pooled.ends_s.push_back(items[i].end);
  }

  const std::vector<int> labels = spectral_cluster(pooled, fixed_k, cfg);

  // Stable speaker naming: clusters numbered by first appearance.
  std::vector<int> relabel(items.size(), -1);
  std::vector<int> order;
  for (size_t i = 0; i < items.size(); ++i) {
    const int raw = labels[i];
    auto it = std::find(order.begin(), order.end(), raw);
    if (it == order.end()) {
      order.push_back(raw);
      it = order.end() - 1;
    }
    relabel[i] = static_cast<int>(it - order.begin());
  }

  // Per speaker, union of that speaker's window intervals.
  Annotation out;
  out.session = session;
  for (int spk = 0; spk < static_cast<int>(order.size()); ++spk) {
    std::vector<std::pair<double, double>> spans;
    for (size_t i = 0; i < items.size(); ++i)
      if (relabel[i] == spk) spans.emplace_back(items[i].start, items[i].end);
    std::sort(spans.begin(), spans.end());
    char name[16];
    std::snprintf(name, sizeof(name), "spk%02d", spk);
    double cur_start = spans.front().first, cur_end = spans.front().second;
    for (size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first <= cur_end + 1e-9) {
        cur_end = std::max(cur_end, spans[i].second);
      } else {
        out.segments.push_back({name, cur_start, cur_end});
        cur_start = spans[i].first;
        cur_end = spans[i].second;
      }
    }
    out.segments.push_back({name, cur_start, cur_end});
  }
  out.sort_canonical();
  return out;
}

ActivityMatrix average_posteriors(const std::vector<ActivityMatrix> &inputs) {
  if (inputs.empty()) throw_invalid("average_posteriors needs >= 1 input");
  const ActivityMatrix &first = inputs.front();
  first.validate();
  ActivityMatrix out = first;
  for (size_t i = 1; i < inputs.size(); ++i) {
    inputs[i].validate();
    if (inputs[i].values.rows() != first.values.rows() ||
        inputs[i].values.cols() != first.values.cols())
      throw_invalid("activity ", i, " shape mismatch in average_posteriors");
    if (inputs[i].speakers != first.speakers)
      throw_invalid("activity ", i, " speaker order mismatch");
    if (inputs[i].frame_shift_s != first.frame_shift_s)
      throw_invalid("activity ", i, " frame shift mismatch");
    out.values += inputs[i].values;
  }
  out.values /= static_cast<double>(inputs.size());
  return out;
}

std::vector<std::pair<double, double>> overlap_segments(
    const ActivityMatrix &activity, double min_dur_s) {
  activity.validate();
  if (min_dur_s < 0.0) throw_invalid("min_dur_s must be >= 0");
  const double dt = activity.frame_shift_s;
  const Eigen::Index frames = activity.num_frames();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;
  Eigen::Index start = -1;
  for (Eigen::Index t = 0; t <= frames; ++t) {
    int active = 0;
    if (t < frames)
      for (int s = 0; s < activity.num_speakers(); ++s)
        active += activity.values(s, t) >= 0.5 ? 1 : 0;
    const bool on = t < frames && active >= 2;
    if (on && start < 0) start = t;
    if (!on && start >= 0) {
      runs.emplace_back(start, t);
      start = -1;
    }
  }
  // Close sub-threshold gaps, then drop sub-threshold runs.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> merged;
  for (const auto &r : runs) {
    if (!merged.empty() && (r.first - merged.back().second) * dt < min_dur_s)
      merged.back().second = r.second;
    else
      merged.push_back(r);
  }
  std::vector<std::pair<double, double>> out;
  for (const auto &r : merged)
    if ((r.second - r.first) * dt >= min_dur_s)
      out.emplace_back(r.first * dt, r.second * dt);
  return out;
}

}  // namespace meetsep
