// meetsep/src/config.cc

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

#include "meetsep/config.h"

#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>

#include "meetsep/io.h"

namespace meetsep {

Variant variant_from_string(const std::string &name) {
  if (name == "v1" || name == "V1") return Variant::kV1;
  if (name == "v2" || name == "V2") return Variant::kV2;
  if (name == "v3" || name == "V3") return Variant::kV3;
  throw_invalid("unknown separation variant \"", name,
                "\" (expected v1, v2 or v3)");
}

const char *variant_to_string(Variant v) {
  switch (v) {
    case Variant::kV1: return "v1";
    case Variant::kV2: return "v2";
    default: return "v3";
  }
}

namespace {
ReclusterMode recluster_from_string(const std::string &name) {
  if (name == "off") return ReclusterMode::kOff;
  if (name == "fixed") return ReclusterMode::kFixed;
  if (name == "nonfixed") return ReclusterMode::kNonFixed;
  if (name == "both") return ReclusterMode::kBoth;
  throw_invalid("unknown recluster mode \"", name,
                "\" (expected off, fixed, nonfixed or both)");
}

const char *recluster_to_string(ReclusterMode m) {
  switch (m) {
    case ReclusterMode::kOff: return "off";
    case ReclusterMode::kFixed: return "fixed";
    case ReclusterMode::kNonFixed: return "nonfixed";
    default: return "both";
  }
}
}  // namespace

void DiarizeConfig::validate() const {
  if (!(embed_window_s > 0.0) || !(embed_hop_s > 0.0) ||
      embed_hop_s > embed_window_s)
    throw_invalid("invalid embedding window ", embed_window_s, " / hop ",
                  embed_hop_s);
  if (n_mels < 1) throw_invalid("n_mels must be >= 1");
  if (mel_window < 4 || mel_hop < 1 || mel_hop > mel_window)
    throw_invalid("invalid mel window ", mel_window, " / hop ", mel_hop);
  if (vad_speech_fraction < 0.0 || vad_speech_fraction > 1.0)
    throw_invalid("vad_speech_fraction must lie in [0, 1]");
  if (merge_gap_s < 0.0 || min_segment_s < 0.0)
    throw_invalid("merge_gap_s and min_segment_s must be >= 0");
  cluster.validate();
}

void PriorConfig::validate() const {
  if (!(activity_frame_shift_s > 0.0))
    throw_invalid("activity_frame_shift_s must be positive");
  if (!(tf_prior_window_s > 0.0))
    throw_invalid("tf_prior_window_s must be positive");
}

void ScoringConfig::validate() const {
  if (der_collar_s < 0.0) throw_invalid("der_collar_s must be >= 0");
  if (tcp.collar_s < 0.0) throw_invalid("tcp_collar_s must be >= 0");
}

void PipelineConfig::validate() const {
  stft.validate();
  wpe.validate();
  cacgmm.validate();
  diarize.validate();
  priors.validate();
  scoring.validate();
  if (!(mvdr.epsilon > 0.0) || !(mvdr.max_condition > 1.0))
    throw_invalid("invalid mvdr regularization settings");
}

PipelineConfig default_config() { return PipelineConfig{}; }

// --- Minimal TOML subset --------------------------------------------------------
// Tables, `key = value` lines, # comments; values: quoted strings, integers,
// floats, booleans. That covers the whole config surface.

namespace {

struct TomlValue {
  enum class Type { kInt, kFloat, kBool, kString } type = Type::kInt;
  long long i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  int line = 0;
};

std::map<std::string, TomlValue> parse_toml_subset(const std::string &text) {
  std::map<std::string, TomlValue> out;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    // Strip comments outside quotes, then whitespace.
    std::string line;
    bool quoted = false;
    for (const char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      line.push_back(ch);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw_invalid("config line ", line_no, ": unterminated table header");
      section = line.substr(1, line.size() - 2);
      if (section.empty())
        throw_invalid("config line ", line_no, ": empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw_invalid("config line ", line_no, ": expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    const auto ke = key.find_last_not_of(" \t");
    if (ke == std::string::npos)
      throw_invalid("config line ", line_no, ": empty key");
    key = key.substr(0, ke + 1);
    const auto vs = val.find_first_not_of(" \t");
    if (vs == std::string::npos)
      throw_invalid("config line ", line_no, ": empty value for '", key, "'");
    val = val.substr(vs);

    const std::string path = section.empty() ? key : section + "." + key;
    if (out.count(path))
      throw_invalid("config line ", line_no, ": duplicate key '", path, "'");

    TomlValue v;
    v.line = line_no;
    if (val.front() == '"') {
      if (val.size() < 2 || val.back() != '"')
        throw_invalid("config line ", line_no, ": unterminated string");
      v.type = TomlValue::Type::kString;
      v.s = val.substr(1, val.size() - 2);
    } else if (val == "true" || val == "false") {
      v.type = TomlValue::Type::kBool;
      v.b = val == "true";
    } else {
      const bool looks_float = val.find_first_of(".eE") != std::string::npos &&
                               val.find("0x") != 0;
      char *end = nullptr;
      if (looks_float) {
        v.type = TomlValue::Type::kFloat;
        v.f = std::strtod(val.c_str(), &end);
      } else {
        v.type = TomlValue::Type::kInt;
        v.i = std::strtoll(val.c_str(), &end, 10);
      }
      if (end == val.c_str() || *end != '\0')
        throw_invalid("config line ", line_no, ": cannot parse value '", val,
                      "' for '", path, "'");
    }
    out.emplace(path, std::move(v));
  }
  return out;
}

// Schema application: every known key consumes its entry; leftovers and type
// mismatches are gathered and reported together.
class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, TomlValue> values)
      : values_(std::move(values)) {}

  void integer(const std::string &path, int *out) {
    auto it = values_.find(path);
    if (it == values_.end()) return;
    if (it->second.type != TomlValue::Type::kInt)
      problems_.push_back(path + ": expected an integer");
    else
      *out = static_cast<int>(it->second.i);
    values_.erase(it);
  }

  void u64(const std::string &path, uint64_t *out) {
    auto it = values_.find(path);
    if (it == values_.end()) return;
    if (it->second.type != TomlValue::Type::kInt || it->second.i < 0)
      problems_.push_back(path + ": expected a non-negative integer");
    else
      *out = static_cast<uint64_t>(it->second.i);
    values_.erase(it);
  }

  void real(const std::string &path, double *out) {
    auto it = values_.find(path);
    if (it == values_.end()) return;
    if (it->second.type == TomlValue::Type::kFloat)
      *out = it->second.f;
    else if (it->second.type == TomlValue::Type::kInt)
      *out = static_cast<double>(it->second.i);
    else
      problems_.push_back(path + ": expected a number");
    values_.erase(it);
  }

  void boolean(const std::string &path, bool *out) {
    auto it = values_.find(path);
    if (it == values_.end()) return;
    if (it->second.type != TomlValue::Type::kBool)
      problems_.push_back(path + ": expected true or false");
    else
      *out = it->second.b;
    values_.erase(it);
  }

  void text(const std::string &path,
            const std::function<void(const std::string &)> &apply) {
    auto it = values_.find(path);
    if (it == values_.end()) return;
    if (it->second.type != TomlValue::Type::kString) {
      problems_.push_back(path + ": expected a string");
    } else {
      try {
        apply(it->second.s);
      } catch (const ValidationError &e) {
        problems_.push_back(path + ": " + e.what());
      }
    }
    values_.erase(it);
  }

  void finish() {
    for (const auto &entry : values_)
      problems_.push_back("unknown key '" + entry.first + "' (line " +
                          std::to_string(entry.second.line) + ")");
    if (problems_.empty()) return;
    std::string msg = "invalid config:";
    for (const auto &p : problems_) msg += "\n  " + p;
    throw ValidationError(msg);
  }

 private:
  std::map<std::string, TomlValue> values_;
  std::vector<std::string> problems_;
};

}  // namespace

PipelineConfig parse_config(const std::string &toml_text) {
  PipelineConfig cfg;
  ConfigReader r(parse_toml_subset(toml_text));

  r.integer("stft.frame_len", &cfg.stft.frame_len);
  r.integer("stft.frame_shift", &cfg.stft.frame_shift);
  r.integer("stft.fft_size", &cfg.stft.fft_size);
  r.text("stft.window",
         [&](const std::string &s) { cfg.stft.window = window_from_string(s); });

  r.integer("wpe.taps", &cfg.wpe.taps);
  r.integer("wpe.delay", &cfg.wpe.delay);
  r.integer("wpe.iterations", &cfg.wpe.iterations);
  r.integer("wpe.psd_context", &cfg.wpe.psd_context);
  r.real("wpe.epsilon", &cfg.wpe.epsilon);

  r.integer("cacgmm.iterations", &cfg.cacgmm.iterations);
  r.real("cacgmm.epsilon", &cfg.cacgmm.epsilon);
  r.real("cacgmm.noise_floor", &cfg.cacgmm.noise_floor);
  r.real("cacgmm.window_s", &cfg.cacgmm.window_s);
  r.real("cacgmm.window_shift_s", &cfg.cacgmm.window_shift_s);
  r.real("cacgmm.rectify_threshold", &cfg.cacgmm.rectify_threshold);
  r.real("cacgmm.guide_context_s", &cfg.cacgmm.guide_context_s);

  r.real("diarize.embed_window_s", &cfg.diarize.embed_window_s);
  r.real("diarize.embed_hop_s", &cfg.diarize.embed_hop_s);
  r.integer("diarize.n_mels", &cfg.diarize.n_mels);
  r.integer("diarize.mel_window", &cfg.diarize.mel_window);
  r.integer("diarize.mel_hop", &cfg.diarize.mel_hop);
  r.real("diarize.vad_speech_fraction", &cfg.diarize.vad_speech_fraction);
  r.real("diarize.merge_gap_s", &cfg.diarize.merge_gap_s);
  r.real("diarize.min_segment_s", &cfg.diarize.min_segment_s);
  r.real("diarize.top_p", &cfg.diarize.cluster.top_p);
  r.integer("diarize.max_speakers", &cfg.diarize.cluster.max_speakers);
  r.u64("diarize.kmeans_seed", &cfg.diarize.cluster.kmeans_seed);

  r.real("mvdr.epsilon", &cfg.mvdr.epsilon);
  r.real("mvdr.max_condition", &cfg.mvdr.max_condition);

  r.real("priors.activity_frame_shift_s", &cfg.priors.activity_frame_shift_s);
  r.real("priors.tf_prior_window_s", &cfg.priors.tf_prior_window_s);

  r.real("scoring.der_collar_s", &cfg.scoring.der_collar_s);
  r.real("scoring.tcp_collar_s", &cfg.scoring.tcp.collar_s);
  r.text("scoring.word_time_mode", [&](const std::string &s) {
    if (s == "midpoint")
      cfg.scoring.tcp.time_mode = TcpWerConfig::TimeMode::kMidpoint;
    else if (s == "overlap")
      cfg.scoring.tcp.time_mode = TcpWerConfig::TimeMode::kOverlap;
    else
      throw_invalid("expected midpoint or overlap, got \"", s, "\"");
  });

  r.text("pipeline.variant", [&](const std::string &s) {
    cfg.variant = variant_from_string(s);
  });
  r.boolean("pipeline.wpe_enabled", &cfg.wpe_enabled);
  r.boolean("pipeline.rectification", &cfg.rectification);
  r.boolean("pipeline.rectify_on_wpe", &cfg.rectify_on_wpe);
  r.text("pipeline.recluster", [&](const std::string &s) {
    cfg.recluster = recluster_from_string(s);
  });

  r.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string &path) {
  try {
    return parse_config(slurp_file(path));
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

namespace {
std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // keep canonical floats recognizably float-typed for the parser
  if (!std::strpbrk(buf, ".eE")) std::strcat(buf, ".0");
  return buf;
}
}  // namespace

std::string serialize_config(const PipelineConfig &cfg) {
  std::ostringstream os;
  os << "[stft]\n"
     << "frame_len = " << cfg.stft.frame_len << "\n"
     << "frame_shift = " << cfg.stft.frame_shift << "\n"
     << "fft_size = " << cfg.stft.fft_size << "\n"
     << "window = \"" << window_to_string(cfg.stft.window) << "\"\n\n";
  os << "[wpe]\n"
     << "taps = " << cfg.wpe.taps << "\n"
     << "delay = " << cfg.wpe.delay << "\n"
     << "iterations = " << cfg.wpe.iterations << "\n"
     << "psd_context = " << cfg.wpe.psd_context << "\n"
     << "epsilon = " << fmt_real(cfg.wpe.epsilon) << "\n\n";
  os << "[cacgmm]\n"
     << "iterations = " << cfg.cacgmm.iterations << "\n"
     << "epsilon = " << fmt_real(cfg.cacgmm.epsilon) << "\n"
     << "noise_floor = " << fmt_real(cfg.cacgmm.noise_floor) << "\n"
     << "window_s = " << fmt_real(cfg.cacgmm.window_s) << "\n"
     << "window_shift_s = " << fmt_real(cfg.cacgmm.window_shift_s) << "\n"
     << "rectify_threshold = " << fmt_real(cfg.cacgmm.rectify_threshold) << "\n"
     << "guide_context_s = " << fmt_real(cfg.cacgmm.guide_context_s) << "\n\n";
  os << "[diarize]\n"
     << "embed_window_s = " << fmt_real(cfg.diarize.embed_window_s) << "\n"
     << "embed_hop_s = " << fmt_real(cfg.diarize.embed_hop_s) << "\n"
     << "n_mels = " << cfg.diarize.n_mels << "\n"
     << "mel_window = " << cfg.diarize.mel_window << "\n"
     << "mel_hop = " << cfg.diarize.mel_hop << "\n"
     << "vad_speech_fraction = " << fmt_real(cfg.diarize.vad_speech_fraction)
     << "\n"
     << "merge_gap_s = " << fmt_real(cfg.diarize.merge_gap_s) << "\n"
     << "min_segment_s = " << fmt_real(cfg.diarize.min_segment_s) << "\n"
     << "top_p = " << fmt_real(cfg.diarize.cluster.top_p) << "\n"
     << "max_speakers = " << cfg.diarize.cluster.max_speakers << "\n"
     << "kmeans_seed = " << cfg.diarize.cluster.kmeans_seed << "\n\n";
  os << "[mvdr]\n"
     << "epsilon = " << fmt_real(cfg.mvdr.epsilon) << "\n"
     << "max_condition = " << fmt_real(cfg.mvdr.max_condition) << "\n\n";
  os << "[priors]\n"
     << "activity_frame_shift_s = "
     << fmt_real(cfg.priors.activity_frame_shift_s) << "\n"
     << "tf_prior_window_s = " << fmt_real(cfg.priors.tf_prior_window_s)
     << "\n\n";
  os << "[scoring]\n"
     << "der_collar_s = " << fmt_real(cfg.scoring.der_collar_s) << "\n"
     << "tcp_collar_s = " << fmt_real(cfg.scoring.tcp.collar_s) << "\n"
     << "word_time_mode = \""
     << (cfg.scoring.tcp.time_mode == TcpWerConfig::TimeMode::kMidpoint
             ? "midpoint"
             : "overlap")
     << "\"\n\n";
  os << "[pipeline]\n"
     << "variant = \"" << variant_to_string(cfg.variant) << "\"\n"
     << "wpe_enabled = " << (cfg.wpe_enabled ? "true" : "false") << "\n"
     << "rectification = " << (cfg.rectification ? "true" : "false") << "\n"
     << "rectify_on_wpe = " << (cfg.rectify_on_wpe ? "true" : "false") << "\n"
     << "recluster = \"" << recluster_to_string(cfg.recluster) << "\"\n";
  return os.str();
}

uint64_t config_hash(const PipelineConfig &cfg) {
  const std::string text = serialize_config(cfg);
  uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;  // FNV prime
  }
  return h;
}

}  // namespace meetsep
