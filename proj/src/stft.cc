// meetsep/src/stft.cc

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

#include "meetsep/stft.h"

#include <cmath>
#include <vector>

#include "fft.h"

namespace meetsep {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Periodic windows; these overlap-add to an exact constant whenever
// frame_shift divides frame_len.
std::vector<double> make_window(Window w, int len) {
  std::vector<double> out(static_cast<size_t>(len));
  for (int n = 0; n < len; ++n) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * n / len);
    out[static_cast<size_t>(n)] =
        (w == Window::kHann) ? hann : std::sqrt(hann);
  }
  return out;
}

// Mirror index into [0, n) without repeating the edge sample.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}
}  // namespace

Window window_from_string(const std::string &name) {
  if (name == "hann") return Window::kHann;
  if (name == "sqrt_hann" || name == "sqrt-hann") return Window::kSqrtHann;
  throw_invalid("unknown window \"", name, "\" (expected hann or sqrt_hann)");
}

const char *window_to_string(Window w) {
  return w == Window::kHann ? "hann" : "sqrt_hann";
}

void StftConfig::validate() const {
  if (frame_len < 2 || frame_len % 2 != 0)
    throw_invalid("frame_len must be even and >= 2, got ", frame_len);
  if (frame_shift <= 0 || frame_shift > frame_len)
    throw_invalid("need 0 < frame_shift <= frame_len, got shift ", frame_shift,
                  " for frame_len ", frame_len);
  if (fft_size < frame_len)
    throw_invalid("fft_size ", fft_size, " smaller than frame_len ", frame_len);
  // Constant-overlap-add of the analysis*synthesis product, checked over one
  // shift period deep inside an (arbitrarily long) frame train.
  const std::vector<double> win = make_window(window, frame_len);
  double lo = 1e300, hi = 0.0;
  for (int p = 0; p < frame_shift; ++p) {
    double s = 0.0;
    for (int q = p; q < frame_len; q += frame_shift) {
      const double v = win[static_cast<size_t>(q)];
      s += v * v;
    }
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi <= 0.0 || (hi - lo) / hi > 1e-6)
    throw_invalid("window ", window_to_string(window),
                  " does not satisfy constant overlap-add at shift ",
                  frame_shift, " (spread ", (hi - lo) / hi, ")");
}

void Spectrogram::validate() const {
  cfg.validate();
  if (sample_rate <= 0) throw_invalid("spectrogram sample rate must be positive");
  if (data.empty()) throw_invalid("spectrogram has no channels");
  const Eigen::Index t = data.front().rows(), f = data.front().cols();
  if (f != cfg.bins())
    throw_invalid("spectrogram has ", f, " bins but config implies ",
                  cfg.bins());
  for (const auto &m : data) {
    if (m.rows() != t || m.cols() != f)
      throw_invalid("spectrogram channels disagree in shape");
    if (!m.allFinite()) throw_invalid("spectrogram contains non-finite values");
  }
}

Eigen::Index stft_num_frames(Eigen::Index num_samples, const StftConfig &cfg) {
  const Eigen::Index pad = cfg.frame_len / 2;
  const Eigen::Index padded = num_samples + 2 * pad;
  if (padded < cfg.frame_len) return 0;
  return (padded - cfg.frame_len + cfg.frame_shift - 1) / cfg.frame_shift + 1;
}

Spectrogram stft(const MultiChannelWave &wave, const StftConfig &cfg) {
  wave.validate();
  cfg.validate();
  const Eigen::Index time = wave.num_samples();
  if (time < cfg.frame_len)
    throw_invalid("wave of ", time, " samples is shorter than one frame (",
                  cfg.frame_len, ")");

  const Eigen::Index pad = cfg.frame_len / 2;
  const Eigen::Index frames = stft_num_frames(time, cfg);
  const Eigen::Index covered = (frames - 1) * cfg.frame_shift + cfg.frame_len;
  const std::vector<double> win = make_window(cfg.window, cfg.frame_len);

  Spectrogram spec;
  spec.cfg = cfg;
  spec.sample_rate = wave.sample_rate;
  spec.num_samples = time;
  spec.data.resize(static_cast<size_t>(wave.channels()));

  RealFft fft(cfg.fft_size);
  std::vector<double> buf(static_cast<size_t>(cfg.fft_size));
  std::vector<std::complex<double>> out(static_cast<size_t>(cfg.bins()));

  for (int c = 0; c < wave.channels(); ++c) {
    // Reflect pad on both sides, zeros past the reflected tail.
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(covered);
    for (Eigen::Index p = 0; p < covered; ++p) {
      const Eigen::Index src = p - pad;
      if (src >= -time + 1 && src <= 2 * time - 2)
        padded[p] = wave.samples(c, reflect_index(src, time));
    }
    Eigen::MatrixXcd &ch = spec.data[static_cast<size_t>(c)];
    ch.resize(frames, cfg.bins());
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index off = t * cfg.frame_shift;
      for (int n = 0; n < cfg.frame_len; ++n)
        buf[static_cast<size_t>(n)] = padded[off + n] * win[static_cast<size_t>(n)];
      std::fill(buf.begin() + cfg.frame_len, buf.end(), 0.0);
      fft.forward(buf.data(), out.data());
      for (int k = 0; k < cfg.bins(); ++k) ch(t, k) = out[static_cast<size_t>(k)];
    }
  }
  return spec;
}

MultiChannelWave istft(const Spectrogram &spec) {
  spec.validate();
  const StftConfig &cfg = spec.cfg;
  const Eigen::Index frames = spec.num_frames();
  const Eigen::Index pad = cfg.frame_len / 2;
  const Eigen::Index covered = (frames - 1) * cfg.frame_shift + cfg.frame_len;
  Eigen::Index time = spec.num_samples;
  if (time <= 0) time = std::max<Eigen::Index>(0, covered - 2 * pad);
  if (time + pad > covered)
    throw_invalid("spectrogram frame count ", frames,
                  " inconsistent with num_samples ", time);

  const std::vector<double> win = make_window(cfg.window, cfg.frame_len);
  // Per-sample normalizer sum_m w(n - m*shift)^2; identical for all channels.
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(covered);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (int n = 0; n < cfg.frame_len; ++n)
      norm[t * cfg.frame_shift + n] +=
          win[static_cast<size_t>(n)] * win[static_cast<size_t>(n)];

  MultiChannelWave wave;
  wave.sample_rate = spec.sample_rate;
  wave.samples.resize(spec.channels(), time);

  RealFft fft(cfg.fft_size);
  std::vector<std::complex<double>> in(static_cast<size_t>(cfg.bins()));
  std::vector<double> frame(static_cast<size_t>(cfg.fft_size));

  for (int c = 0; c < spec.channels(); ++c) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(covered);
    const Eigen::MatrixXcd &ch = spec.data[static_cast<size_t>(c)];
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (int k = 0; k < cfg.bins(); ++k) in[static_cast<size_t>(k)] = ch(t, k);
      fft.inverse(in.data(), frame.data());
      const Eigen::Index off = t * cfg.frame_shift;
      for (int n = 0; n < cfg.frame_len; ++n)
        acc[off + n] += frame[static_cast<size_t>(n)] * win[static_cast<size_t>(n)];
    }
    for (Eigen::Index p = 0; p < time; ++p) {
      const double d = norm[p + pad];
      wave.samples(c, p) = d > 1e-12 ? acc[p + pad] / d : 0.0;
    }
  }
  return wave;
}

Spectrogram apply_mask(const Spectrogram &spec, const TfMask &mask,
                       int class_index) {
  spec.validate();
  mask.validate();
  if (class_index < 0 || class_index >= mask.num_classes())
    throw_invalid("mask class index ", class_index, " out of range [0, ",
                  mask.num_classes(), ")");
  if (mask.num_frames() != spec.num_frames() ||
      mask.num_bins() != spec.num_bins())
    throw_invalid("mask grid ", mask.num_frames(), "x", mask.num_bins(),
                  " does not match spectrogram ", spec.num_frames(), "x",
                  spec.num_bins());
  Spectrogram out = spec;
  const Eigen::MatrixXd &m = mask.values[static_cast<size_t>(class_index)];
  for (auto &ch : out.data) ch = ch.cwiseProduct(m.cast<std::complex<double>>());
  return out;
}

}  // namespace meetsep
