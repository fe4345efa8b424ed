// meetsep/io.h

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

#ifndef MEETSEP_IO_H_
#define MEETSEP_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "meetsep/annotation.h"
#include "meetsep/diarize.h"
#include "meetsep/mask.h"
#include "meetsep/scoring.h"
#include "meetsep/wave.h"

namespace meetsep {

// --- WAV -------------------------------------------------------------------
// RIFF PCM16 or IEEE float32. PCM16 samples map to [-1, 1) as s/32768;
// float32 round-trips bitwise. Malformed input errors with the byte offset.

MultiChannelWave read_wav(const std::string &path);
MultiChannelWave parse_wav(const std::string &bytes);
void write_wav(const MultiChannelWave &wave, const std::string &path);

// --- RTTM ------------------------------------------------------------------
// "SPEAKER <session> 1 <tbeg> <tdur> <NA> <NA> <speaker> <NA> <NA>" lines.
// Emission is canonical: sorted by (start, speaker), times with 2 decimals.

Annotation parse_rttm(const std::string &text);
std::string emit_rttm(const Annotation &annotation);
Annotation read_rttm(const std::string &path);
void write_rttm(const Annotation &annotation, const std::string &path);

// --- Tensor container -------------------------------------------------------
// Little-endian layout: magic "MCTF", u16 version (1), u8 dtype (1 = f32),
// u8 ndim, u32 dims[ndim], then the row-major f32 payload.

struct TensorData {
  std::vector<uint32_t> dims;
  std::vector<float> data;

  uint64_t element_count() const;
};

std::string serialize_tensor(const TensorData &tensor);
TensorData parse_tensor(const std::string &bytes);
TensorData read_tensor(const std::string &path);
void write_tensor(const TensorData &tensor, const std::string &path);

// Semantic wrappers. The container stores numbers only; ids and time bases
// are supplied (or defaulted to spk00, spk01, ... plus a trailing noise
// class for masks) on read.
// TFMask           dims [classes, frames, bins]
// ActivityMatrix   dims [speakers, frames]
// EmbeddingSequence dims [windows, dim]

void write_mask(const TfMask &mask, const std::string &path);
TfMask read_mask(const std::string &path, double frame_shift_s = 0.0,
                 std::vector<std::string> class_ids = {});

void write_activity(const ActivityMatrix &activity, const std::string &path);
ActivityMatrix read_activity(const std::string &path, double frame_shift_s,
                             std::vector<std::string> speakers = {});

void write_embeddings(const EmbeddingSequence &embeddings,
                      const std::string &path);
EmbeddingSequence read_embeddings(const std::string &path, double window_s,
                                  double hop_s);

// --- Word segments (JSON lines) ---------------------------------------------
// One object per segment: {"session": ..., "speaker": ..., "start_s": ...,
// "end_s": ..., "words": "a b c"} with optional "word_start_s"/"word_end_s"
// arrays; without them, word times are interpolated linearly over the
// segment span.

std::vector<WordSegment> parse_segments_jsonl(const std::string &text);
std::string emit_segments_jsonl(const std::vector<WordSegment> &words,
                                const std::string &session);
std::vector<WordSegment> read_segments_jsonl(const std::string &path);
void write_segments_jsonl(const std::vector<WordSegment> &words,
                          const std::string &session, const std::string &path);

// Small file helpers shared by the CLI.
std::string slurp_file(const std::string &path);
void spew_file(const std::string &path, const std::string &content);

}  // namespace meetsep

#endif  // MEETSEP_IO_H_
