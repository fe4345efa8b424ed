// meetsep/diarize.h

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

#ifndef MEETSEP_DIARIZE_H_
#define MEETSEP_DIARIZE_H_

#include <optional>
#include <string>
#include <vector>

#include "meetsep/annotation.h"
#include "meetsep/features.h"
#include "meetsep/mask.h"

namespace meetsep {

// Window-level speaker embeddings, rows L2-normalized.
struct EmbeddingSequence {
  Eigen::MatrixXd vectors;  // windows x dim
  std::vector<double> starts_s;
  std::vector<double> ends_s;

  Eigen::Index num_windows() const { return vectors.rows(); }
  int dim() const { return static_cast<int>(vectors.cols()); }
  void validate() const;
};

// Clustering recipe knobs.
struct SpectralClusterConfig {
  double top_p = 0.7;      // affinities below each row's top_p quantile
                           // are pruned before the Laplacian
  int max_speakers = 8;    // eigengap search bound
  uint64_t kmeans_seed = 42;

  void validate() const;
};

// Stand-in embedding extractor: per-window mean and standard deviation of
// the feature vectors, L2-normalized. Window count floor((T - win)/hop) + 1.
EmbeddingSequence extract_embeddings(const FeatureSequence &features,
                                     double window_s, double hop_s);

// Eigengap criterion on the normalized Laplacian of the pruned cosine
// affinity; returns k in [1, max_k].
int estimate_speaker_count(const EmbeddingSequence &embeddings, int max_k,
                           const SpectralClusterConfig &cfg = {});

// Seeded spectral clustering (farthest-point k-means on the row-normalized
// Laplacian eigenvector embedding). k, when absent, comes from
// estimate_speaker_count.
std::vector<int> spectral_cluster(const EmbeddingSequence &embeddings,
                                  std::optional<int> k,
                                  const SpectralClusterConfig &cfg = {});

// One separated stream feeding re-clustering: window embeddings plus the
// stream's original speaker label.
struct StreamEmbeddings {
  std::string stream_id;
  EmbeddingSequence embeddings;
};

// Pools the streams' windows (in a canonical permutation-invariant order),
// re-clusters them with a forced count (fixed_k) or the eigengap estimate,
// and emits segments labeled by the new global speaker identities.
Annotation recluster(const std::vector<StreamEmbeddings> &streams,
                     std::optional<int> fixed_k, const std::string &session,
                     const SpectralClusterConfig &cfg = {});

// Element-wise mean over identically shaped activity matrices.
ActivityMatrix average_posteriors(const std::vector<ActivityMatrix> &inputs);

// Maximal intervals with >= 2 speakers active (binarized at 0.5), after
// closing gaps shorter than min_dur_s and dropping intervals shorter than
// min_dur_s.
std::vector<std::pair<double, double>> overlap_segments(
    const ActivityMatrix &activity, double min_dur_s);

}  // namespace meetsep

#endif  // MEETSEP_DIARIZE_H_
