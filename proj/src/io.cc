// meetsep/src/io.cc

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

#include "meetsep/io.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace meetsep {

namespace {

// Little-endian scalar access with explicit bounds checks; offsets appear in
// error messages.
uint32_t get_u32(const std::string &b, size_t off) {
  if (off + 4 > b.size())
    throw_invalid("truncated file at byte offset ", off, " (need 4 bytes)");
  const auto *p = reinterpret_cast<const unsigned char *>(b.data() + off);
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t get_u16(const std::string &b, size_t off) {
  if (off + 2 > b.size())
    throw_invalid("truncated file at byte offset ", off, " (need 2 bytes)");
  const auto *p = reinterpret_cast<const unsigned char *>(b.data() + off);
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string &b, uint32_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
  b.push_back(static_cast<char>((v >> 16) & 0xff));
  b.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string &b, uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}

float get_f32(const std::string &b, size_t off) {
  const uint32_t raw = get_u32(b, off);
  float f;
  std::memcpy(&f, &raw, 4);
  return f;
}

void put_f32(std::string &b, float f) {
  uint32_t raw;
  std::memcpy(&raw, &f, 4);
  put_u32(b, raw);
}

}  // namespace

std::string slurp_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_invalid("cannot open ", path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spew_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_error("cannot write ", path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw_error("write failed for ", path);
}

// --- WAV ---------------------------------------------------------------------

MultiChannelWave parse_wav(const std::string &b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0)
    throw_invalid("not a RIFF file (byte offset 0)");
  if (b.compare(8, 4, "WAVE") != 0)
    throw_invalid("not a WAVE file (byte offset 8)");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  size_t data_off = 0, data_len = 0;

  size_t off = 12;
  while (off + 8 <= b.size()) {
    const std::string id = b.substr(off, 4);
    const uint32_t len = get_u32(b, off + 4);
    const size_t body = off + 8;
    if (body + len > b.size())
      throw_invalid("chunk '", id, "' at byte offset ", off,
                    " extends past end of file");
    if (id == "fmt ") {
      if (len < 16) throw_invalid("fmt chunk too small at byte offset ", off);
      format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      rate = get_u32(b, body + 4);
      bits = get_u16(b, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len % 2);  // chunks are word-aligned
  }
  if (!have_fmt) throw_invalid("missing fmt chunk");
  if (data_off == 0) throw_invalid("missing data chunk");
  if (channels < 1) throw_invalid("wav declares zero channels");
  if (rate == 0) throw_invalid("wav declares zero sample rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw_invalid("unsupported codec: format ", format, " with ", bits,
                  " bits (byte offset ", data_off - 8 + 0,
                  "); expected PCM16 or IEEE float32");

  const size_t bytes_per = pcm16 ? 2 : 4;
  const size_t frame_bytes = bytes_per * channels;
  if (data_len % frame_bytes != 0)
    throw_invalid("data chunk length ", data_len,
                  " is not a whole number of frames (byte offset ", data_off,
                  ")");
  const size_t frames = data_len / frame_bytes;

  MultiChannelWave wave;
  wave.sample_rate = static_cast<int>(rate);
  wave.samples.resize(channels, static_cast<Eigen::Index>(frames));
  for (size_t n = 0; n < frames; ++n) {
    for (int c = 0; c < channels; ++c) {
      const size_t at = data_off + (n * channels + static_cast<size_t>(c)) * bytes_per;
      if (pcm16) {
        const int16_t raw = static_cast<int16_t>(get_u16(b, at));
        wave.samples(c, static_cast<Eigen::Index>(n)) = raw / 32768.0;
      } else {
        wave.samples(c, static_cast<Eigen::Index>(n)) = get_f32(b, at);
      }
    }
  }
  return wave;
}

MultiChannelWave read_wav(const std::string &path) {
  try {
    return parse_wav(slurp_file(path));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_wav(const MultiChannelWave &wave, const std::string &path) {
  wave.validate();
  const uint32_t channels = static_cast<uint32_t>(wave.channels());
  const uint32_t frames = static_cast<uint32_t>(wave.num_samples());
  const uint32_t data_len = frames * channels * 4;

  std::string b;
  b.reserve(data_len + 64);
  b += "RIFF";
  put_u32(b, 4 + (8 + 16) + (8 + 4) + (8 + data_len));
  b += "WAVE";
  b += "fmt ";
  put_u32(b, 16);
  put_u16(b, 3);  // IEEE float
  put_u16(b, static_cast<uint16_t>(channels));
  put_u32(b, static_cast<uint32_t>(wave.sample_rate));
  put_u32(b, static_cast<uint32_t>(wave.sample_rate) * channels * 4);
  put_u16(b, static_cast<uint16_t>(channels * 4));
  put_u16(b, 32);
  b += "fact";
  put_u32(b, 4);
  put_u32(b, frames);
  b += "data";
  put_u32(b, data_len);
  for (uint32_t n = 0; n < frames; ++n)
    for (uint32_t c = 0; c < channels; ++c)
      put_f32(b, static_cast<float>(wave.samples(c, n)));
  spew_file(path, b);
}

// --- RTTM --------------------------------------------------------------------

Annotation parse_rttm(const std::string &text) {
  Annotation out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == ';') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string tok;
    while (ls >> tok) f.push_back(tok);
    if (f.empty()) continue;
    if (f.size() < 9 || f[0] != "SPEAKER")
      throw_invalid("rttm line ", line_no,
                    ": expected 'SPEAKER <sess> <chan> <tbeg> <tdur> <NA> "
                    "<NA> <spk> <NA> [<NA>]'");
    char *end = nullptr;
    const double tbeg = std::strtod(f[3].c_str(), &end);
    if (end == f[3].c_str() || *end != '\0')
      throw_invalid("rttm line ", line_no, ": bad start time '", f[3], "'");
    const double tdur = std::strtod(f[4].c_str(), &end);
    if (end == f[4].c_str() || *end != '\0')
      throw_invalid("rttm line ", line_no, ": bad duration '", f[4], "'");
    if (tbeg < 0.0)
      throw_invalid("rttm line ", line_no, ": negative start time");
    if (tdur <= 0.0)
      throw_invalid("rttm line ", line_no, ": non-positive duration");
    if (out.session.empty())
      out.session = f[1];
    else if (out.session != f[1])
      throw_invalid("rttm line ", line_no, ": mixed sessions '", out.session,
                    "' and '", f[1], "' in one annotation");
    out.segments.push_back({f[7], tbeg, tbeg + tdur});
  }
  out.sort_canonical();
  return out;
}

std::string emit_rttm(const Annotation &annotation) {
  annotation.validate();
  Annotation canon = annotation;
  canon.sort_canonical();
  const std::string session = canon.session.empty() ? "session" : canon.session;
  std::string out;
  char line[256];
  for (const auto &seg : canon.segments) {
    std::snprintf(line, sizeof(line),
                  "SPEAKER %s 1 %.2f %.2f <NA> <NA> %s <NA> <NA>\n",
                  session.c_str(), seg.start_s, seg.end_s - seg.start_s,
                  seg.speaker.c_str());
    out += line;
  }
  return out;
}

Annotation read_rttm(const std::string &path) {
  try {
    return parse_rttm(slurp_file(path));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_rttm(const Annotation &annotation, const std::string &path) {
  spew_file(path, emit_rttm(annotation));
}

// --- Tensor container ---------------------------------------------------------

namespace {
constexpr char kTensorMagic[4] = {'M', 'C', 'T', 'F'};
constexpr uint16_t kTensorVersion = 1;
constexpr uint8_t kDtypeF32 = 1;
// 2^32 f32 elements (16 GiB) is far beyond anything this toolkit writes;
// treat larger dim products as corruption.
constexpr uint64_t kMaxElements = 1ULL << 32;
}  // namespace

uint64_t TensorData::element_count() const {
  uint64_t n = 1;
  for (const uint32_t d : dims) {
    if (d != 0 && n > kMaxElements / d)
      throw_invalid("tensor dims product overflows sanity bound");
    n *= d;
  }
  return n;
}

std::string serialize_tensor(const TensorData &tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255)
    throw_invalid("tensor needs 1..255 dims, got ", tensor.dims.size());
  const uint64_t n = tensor.element_count();
  if (n != tensor.data.size())
    throw_invalid("tensor dims imply ", n, " elements but payload has ",
                  tensor.data.size());
  std::string b;
  b.append(kTensorMagic, 4);
  put_u16(b, kTensorVersion);
  b.push_back(static_cast<char>(kDtypeF32));
  b.push_back(static_cast<char>(tensor.dims.size()));
  for (const uint32_t d : tensor.dims) put_u32(b, d);
  for (const float v : tensor.data) put_f32(b, v);
  return b;
}

TensorData parse_tensor(const std::string &b) {
  if (b.size() < 8 || std::memcmp(b.data(), kTensorMagic, 4) != 0)
    throw_invalid("bad tensor magic (byte offset 0): expected MCTF");
  const uint16_t version = get_u16(b, 4);
  if (version != kTensorVersion)
    throw_invalid("unsupported tensor version ", version);
  const uint8_t dtype = static_cast<uint8_t>(b[6]);
  if (dtype != kDtypeF32)
    throw_invalid("unsupported tensor dtype code ", int{dtype});
  const uint8_t ndim = static_cast<uint8_t>(b[7]);
  if (ndim == 0) throw_invalid("tensor with zero dims");

  TensorData t;
  size_t off = 8;
  for (int i = 0; i < ndim; ++i) {
    t.dims.push_back(get_u32(b, off));
    off += 4;
  }
  const uint64_t n = t.element_count();
  if (b.size() - off != n * 4)
    throw_invalid("tensor payload is ", b.size() - off, " bytes, dims imply ",
                  n * 4, " (byte offset ", off, ")");
  t.data.resize(n);
  for (uint64_t i = 0; i < n; ++i) t.data[i] = get_f32(b, off + i * 4);
  return t;
}

TensorData read_tensor(const std::string &path) {
  try {
    return parse_tensor(slurp_file(path));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_tensor(const TensorData &tensor, const std::string &path) {
  spew_file(path, serialize_tensor(tensor));
}

// --- Semantic tensor wrappers --------------------------------------------------

namespace {
std::vector<std::string> default_ids(size_t count, bool trailing_noise) {
  std::vector<std::string> ids;
  char name[32];
  const size_t speakers = trailing_noise ? count - 1 : count;
  for (size_t s = 0; s < speakers; ++s) {
    std::snprintf(name, sizeof(name), "spk%02u", static_cast<unsigned>(s));
    ids.emplace_back(name);
  }
  if (trailing_noise) ids.emplace_back(kNoiseClassId);
  return ids;
}
}  // namespace

void write_mask(const TfMask &mask, const std::string &path) {
  mask.validate();
  TensorData t;
  t.dims = {static_cast<uint32_t>(mask.num_classes()),
            static_cast<uint32_t>(mask.num_frames()),
            static_cast<uint32_t>(mask.num_bins())};
  t.data.reserve(static_cast<size_t>(mask.num_classes()) *
                 static_cast<size_t>(mask.num_frames()) *
                 static_cast<size_t>(mask.num_bins()));
  for (const auto &m : mask.values)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        t.data.push_back(static_cast<float>(m(r, c)));
  write_tensor(t, path);
}

TfMask read_mask(const std::string &path, double frame_shift_s,
                 std::vector<std::string> class_ids) {
  const TensorData t = read_tensor(path);
  if (t.dims.size() != 3)
    throw_invalid(path, ": mask tensor needs dims [classes, frames, bins]");
  const size_t classes = t.dims[0], frames = t.dims[1], bins = t.dims[2];
  TfMask mask;
  mask.frame_shift_s = frame_shift_s;
  mask.class_ids =
      class_ids.empty() ? default_ids(classes, true) : std::move(class_ids);
  if (mask.class_ids.size() != classes)
    throw_invalid(path, ": ", mask.class_ids.size(), " class ids for ",
                  classes, " classes");
  size_t i = 0;
  for (size_t k = 0; k < classes; ++k) {
    Eigen::MatrixXd m(frames, bins);
    for (size_t r = 0; r < frames; ++r)
      for (size_t c = 0; c < bins; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.data[i++];
    mask.values.push_back(std::move(m));
  }
  mask.validate();
  return mask;
}

void write_activity(const ActivityMatrix &activity, const std::string &path) {
  activity.validate();
  TensorData t;
  t.dims = {static_cast<uint32_t>(activity.num_speakers()),
            static_cast<uint32_t>(activity.num_frames())};
  for (Eigen::Index r = 0; r < activity.values.rows(); ++r)
    for (Eigen::Index c = 0; c < activity.values.cols(); ++c)
      t.data.push_back(static_cast<float>(activity.values(r, c)));
  write_tensor(t, path);
}

ActivityMatrix read_activity(const std::string &path, double frame_shift_s,
                             std::vector<std::string> speakers) {
  const TensorData t = read_tensor(path);
  if (t.dims.size() != 2)
    throw_invalid(path, ": activity tensor needs dims [speakers, frames]");
  ActivityMatrix act;
  act.frame_shift_s = frame_shift_s;
  act.speakers =
      speakers.empty() ? default_ids(t.dims[0], false) : std::move(speakers);
  if (act.speakers.size() != t.dims[0])
    throw_invalid(path, ": ", act.speakers.size(), " speaker ids for ",
                  t.dims[0], " rows");
  act.values.resize(t.dims[0], t.dims[1]);
  size_t i = 0;
  for (uint32_t r = 0; r < t.dims[0]; ++r)
    for (uint32_t c = 0; c < t.dims[1]; ++c) act.values(r, c) = t.data[i++];
  act.validate();
  return act;
}

void write_embeddings(const EmbeddingSequence &embeddings,
                      const std::string &path) {
  embeddings.validate();
  TensorData t;
  t.dims = {static_cast<uint32_t>(embeddings.num_windows()),
            static_cast<uint32_t>(embeddings.dim())};
  for (Eigen::Index r = 0; r < embeddings.vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < embeddings.vectors.cols(); ++c)
      t.data.push_back(static_cast<float>(embeddings.vectors(r, c)));
  write_tensor(t, path);
}

EmbeddingSequence read_embeddings(const std::string &path, double window_s,
                                  double hop_s) {
  const TensorData t = read_tensor(path);
  if (t.dims.size() != 2)
    throw_invalid(path, ": embedding tensor needs dims [windows, dim]");
  if (!(window_s > 0.0) || !(hop_s > 0.0))
    throw_invalid("window_s and hop_s must be positive");
  EmbeddingSequence emb;
  emb.vectors.resize(t.dims[0], t.dims[1]);
  size_t i = 0;
  for (uint32_t r = 0; r < t.dims[0]; ++r)
    for (uint32_t c = 0; c < t.dims[1]; ++c) emb.vectors(r, c) = t.data[i++];
  // Renormalize: f32 storage rounds the unit norm.
  for (uint32_t r = 0; r < t.dims[0]; ++r) {
    const double n = emb.vectors.row(r).norm();
    if (n > 1e-12) emb.vectors.row(r) /= n;
  }
  for (uint32_t r = 0; r < t.dims[0]; ++r) {
    emb.starts_s.push_back(r * hop_s);
    emb.ends_s.push_back(r * hop_s + window_s);
  }
  emb.validate();
  return emb;
}

// --- Word segments (JSON lines) -------------------------------------------------

std::vector<WordSegment> parse_segments_jsonl(const std::string &text) {
  std::vector<WordSegment> out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw_invalid("segments line ", line_no, ": ", e.what());
    }
    if (!j.is_object())
      throw_invalid("segments line ", line_no, ": expected a JSON object");
    for (const char *key : {"speaker", "start_s", "end_s", "words"})
      if (!j.contains(key))
        throw_invalid("segments line ", line_no, ": missing field '", key, "'");
    if (!j["speaker"].is_string() || !j["words"].is_string() ||
        !j["start_s"].is_number() || !j["end_s"].is_number())
      throw_invalid("segments line ", line_no, ": wrong field types");
    const std::string speaker = j["speaker"];
    const double start = j["start_s"], end = j["end_s"];
    if (end < start)
      throw_invalid("segments line ", line_no, ": end_s before start_s");

    std::vector<std::string> tokens;
    std::istringstream ws(j["words"].get<std::string>());
    std::string tok;
    while (ws >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;

    std::vector<double> starts, ends;
    if (j.contains("word_start_s") || j.contains("word_end_s")) {
      if (!j.contains("word_start_s") || !j.contains("word_end_s") ||
          !j["word_start_s"].is_array() || !j["word_end_s"].is_array() ||
          j["word_start_s"].size() != tokens.size() ||
          j["word_end_s"].size() != tokens.size())
        throw_invalid("segments line ", line_no,
                      ": word_start_s/word_end_s must be arrays matching the "
                      "word count");
      for (size_t i = 0; i < tokens.size(); ++i) {
        starts.push_back(j["word_start_s"][i]);
        ends.push_back(j["word_end_s"][i]);
      }
    } else {
      // Linear interpolation over the segment span.
      const double step = (end - start) / static_cast<double>(tokens.size());
      for (size_t i = 0; i < tokens.size(); ++i) {
        starts.push_back(start + step * static_cast<double>(i));
        ends.push_back(start + step * static_cast<double>(i + 1));
      }
    }
    for (size_t i = 0; i < tokens.size(); ++i)
      out.push_back({tokens[i], starts[i], ends[i], speaker});
  }
  return out;
}

std::string emit_segments_jsonl(const std::vector<WordSegment> &words,
                                const std::string &session) {
  // One object per speaker with explicit word times; lossless.
  std::map<std::string, std::vector<WordSegment>> by_speaker;
  for (const auto &w : words) by_speaker[w.speaker].push_back(w);
  std::string out;
  for (auto &entry : by_speaker) {
    auto &ws = entry.second;
    std::sort(ws.begin(), ws.end(),
              [](const WordSegment &a, const WordSegment &b) {
                return a.start_s < b.start_s;
              });
    nlohmann::json j;
    j["session"] = session;
    j["speaker"] = entry.first;
    j["start_s"] = ws.front().start_s;
    j["end_s"] = ws.back().end_s;
    std::string text;
    std::vector<double> starts, ends;
    for (const auto &w : ws) {
      if (!text.empty()) text += ' ';
      text += w.word;
      starts.push_back(w.start_s);
      ends.push_back(w.end_s);
    }
    j["words"] = text;
    j["word_start_s"] = starts;
    j["word_end_s"] = ends;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<WordSegment> read_segments_jsonl(const std::string &path) {
  try {
    return parse_segments_jsonl(slurp_file(path));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_segments_jsonl(const std::vector<WordSegment> &words,
                          const std::string &session,
                          const std::string &path) {
  spew_file(path, emit_segments_jsonl(words, session));
}

}  // namespace meetsep
