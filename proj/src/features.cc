// meetsep/src/features.cc

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

#include "meetsep/features.h"

#include <cmath>
#include <complex>

#include "fft.h"

namespace meetsep {

namespace {
constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> mel_points(int n_mels, int sample_rate) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> pts(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    pts[static_cast<size_t>(i)] = mel_to_hz(mel_max * i / (n_mels + 1));
  return pts;
}
}  // namespace

void FeatureSequence::validate() const {
  if (frame_shift_s <= 0.0) throw_invalid("feature frame shift must be positive");
  if (static_cast<Eigen::Index>(frame_times_s.size()) != num_frames())
    throw_invalid("feature frame time count mismatch");
  if (!vectors.allFinite()) throw_invalid("features contain non-finite values");
}

std::vector<double> mel_band_centers_hz(int n_mels, int sample_rate) {
  const std::vector<double> pts = mel_points(n_mels, sample_rate);
  std::vector<double> centers(static_cast<size_t>(n_mels));
  for (int j = 0; j < n_mels; ++j)
    centers[static_cast<size_t>(j)] = pts[static_cast<size_t>(j) + 1];
  return centers;
}

FeatureSequence logmel_features(const MultiChannelWave &wave, int n_mels,
                                int win, int hop) {
  wave.validate();
  if (wave.channels() != 1)
    throw_invalid("logmel_features expects a single channel, got ",
                  wave.channels());
  if (wave.sample_rate < 8000)
    throw_invalid("sample rate ", wave.sample_rate, " below 8 kHz");
  if (win < 4 || hop < 1 || hop > win)
    throw_invalid("invalid logmel window ", win, " / hop ", hop);
  const int bins = win / 2 + 1;
  if (n_mels < 1 || n_mels > bins)
    throw_invalid("n_mels ", n_mels, " exceeds ", bins, " spectrum bins");
  const Eigen::Index time = wave.num_samples();
  if (time < win)
    throw_invalid("wave of ", time, " samples shorter than one feature window");

  // Triangular filterbank rows over the rfft bins.
  const std::vector<double> pts = mel_points(n_mels, wave.sample_rate);
  Eigen::MatrixXd fbank = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int j = 0; j < n_mels; ++j) {
    const double lo = pts[static_cast<size_t>(j)];
    const double mid = pts[static_cast<size_t>(j) + 1];
    const double hi = pts[static_cast<size_t>(j) + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * wave.sample_rate / win;
      double v = 0.0;
      if (f > lo && f < hi)
        v = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fbank(j, k) = v;
    }
  }

  const Eigen::Index frames = (time - win) / hop + 1;
  FeatureSequence out;
  out.frame_shift_s = static_cast<double>(hop) / wave.sample_rate;
  out.vectors.resize(frames, n_mels);
  out.frame_times_s.resize(static_cast<size_t>(frames));

  RealFft fft(win);
  std::vector<double> buf(static_cast<size_t>(win));
  std::vector<std::complex<double>> spec(static_cast<size_t>(bins));
  std::vector<double> window(static_cast<size_t>(win));
  for (int n = 0; n < win; ++n)
    window[static_cast<size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / win);

  Eigen::VectorXd power(bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index off = t * hop;
    for (int n = 0; n < win; ++n)
      buf[static_cast<size_t>(n)] =
          wave.samples(0, off + n) * window[static_cast<size_t>(n)];
    fft.forward(buf.data(), spec.data());
    for (int k = 0; k < bins; ++k)
      power[k] = std::norm(spec[static_cast<size_t>(k)]);
    Eigen::VectorXd mel = fbank * power;
    for (int j = 0; j < n_mels; ++j)
      out.vectors(t, j) = std::log(std::max(mel[j], kLogMelFloor));
    out.frame_times_s[static_cast<size_t>(t)] =
        (static_cast<double>(off) + win / 2.0) / wave.sample_rate;
  }
  return out;
}

}  // namespace meetsep
