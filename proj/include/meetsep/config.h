// meetsep/config.h

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

#ifndef MEETSEP_CONFIG_H_
#define MEETSEP_CONFIG_H_

#include <cstdint>
#include <string>

#include "meetsep/beamform.h"
#include "meetsep/cacgmm.h"
#include "meetsep/diarize.h"
#include "meetsep/scoring.h"
#include "meetsep/stft.h"
#include "meetsep/wpe.h"

namespace meetsep {

enum class Variant { kV1, kV2, kV3 };
enum class ReclusterMode { kOff, kFixed, kNonFixed, kBoth };

Variant variant_from_string(const std::string &name);
const char *variant_to_string(Variant v);

// Clustering-stage front-end knobs.
struct DiarizeConfig {
  double embed_window_s = 1.5;
  double embed_hop_s = 0.75;
  int n_mels = 24;
  int mel_window = 400;  // samples (25 ms at 16 kHz)
  int mel_hop = 160;     // samples (10 ms at 16 kHz)
  double vad_speech_fraction = 0.5;  // embedding windows below this speech
                                     // fraction are not clustered
  double merge_gap_s = 0.3;
  double min_segment_s = 0.2;
  SpectralClusterConfig cluster;

  void validate() const;
};

// Time bases of externally produced priors.
struct PriorConfig {
  double activity_frame_shift_s = 0.01;  // activity/diarization prior grid
  double tf_prior_window_s = 12.8;       // window granularity external T-F
                                         // prior producers are expected to use

  void validate() const;
};

struct ScoringConfig {
  double der_collar_s = 0.0;
  TcpWerConfig tcp;

  void validate() const;
};

struct PipelineConfig {
  Variant variant = Variant::kV1;
  bool wpe_enabled = true;
  bool rectification = true;
  bool rectify_on_wpe = false;  // cACGMM rectification reads the raw audio
                                // unless this is set
  ReclusterMode recluster = ReclusterMode::kBoth;

  StftConfig stft;
  WpeConfig wpe;
  CacgmmConfig cacgmm;
  DiarizeConfig diarize;
  MvdrConfig mvdr;
  PriorConfig priors;
  ScoringConfig scoring;

  void validate() const;
};

PipelineConfig default_config();

// TOML document -> validated config. All keys optional (defaults apply);
// unknown keys and type mismatches error with their dotted paths.
PipelineConfig parse_config(const std::string &toml_text);
PipelineConfig load_config(const std::string &path);

// Canonical TOML serialization; parse_config(serialize_config(c)) == c.
std::string serialize_config(const PipelineConfig &cfg);

// FNV-1a over the canonical serialization; recorded in run manifests.
uint64_t config_hash(const PipelineConfig &cfg);

}  // namespace meetsep

#endif  // MEETSEP_CONFIG_H_
