// meetsep/tests/test_stft.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.h"
#include "meetsep/stft.h"

using namespace meetsep;
using meetsep::testing::random_wave;
using meetsep::testing::reconstruction_snr_db;

namespace {
constexpr double kPi = 3.14159265358979323846;

StftConfig hann_512_128() {
  StftConfig cfg;
  cfg.frame_len = 512;
  cfg.frame_shift = 128;
  cfg.fft_size = 512;
  cfg.window = Window::kHann;
  return cfg;
}
}  // namespace

TEST_CASE("sinusoid at a bin center peaks at that bin in interior frames") {
  const StftConfig cfg = hann_512_128();
  const int rate = 16000;
  const int bin = 37;
  const double freq = static_cast<double>(bin) * rate / cfg.fft_size;
  MultiChannelWave w;
  w.sample_rate = rate;
  w.samples.resize(1, rate);
  for (int n = 0; n < rate; ++n)
    w.samples(0, n) = std::sin(2.0 * kPi * freq * n / rate);

  const Spectrogram spec = stft(w, cfg);
  const Eigen::Index frames = spec.num_frames();
  // Skip frames whose analysis span touches the padded edges.
  const Eigen::Index guard = cfg.frame_len / cfg.frame_shift + 1;
  for (Eigen::Index t = guard; t + guard < frames; ++t) {
    Eigen::Index argmax = 0;
    spec.data[0].row(t).cwiseAbs().maxCoeff(&argmax);
    CHECK(argmax == bin);
  }
}

TEST_CASE("all-zero input gives an all-zero spectrogram") {
  MultiChannelWave w;
  w.sample_rate = 16000;
  w.samples = Eigen::MatrixXd::Zero(2, 4000);
  const Spectrogram spec = stft(w, hann_512_128());
  for (const auto &ch : spec.data) CHECK(ch.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round trip exceeds 60 dB on random signals") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const MultiChannelWave w = random_wave(2, 16000, 16000, seed);
    for (Window win : {Window::kHann, Window::kSqrtHann}) {
      StftConfig cfg;
      cfg.frame_len = 1024;
      cfg.frame_shift = 256;
      cfg.fft_size = 1024;
      cfg.window = win;
      const MultiChannelWave back = istft(stft(w, cfg));
      REQUIRE(back.num_samples() == w.num_samples());
      CHECK(reconstruction_snr_db(w.samples, back.samples) > 60.0);
    }
  }
}

TEST_CASE("stft is linear") {
  const MultiChannelWave x = random_wave(1, 8000, 16000, 10);
  const MultiChannelWave y = random_wave(1, 8000, 16000, 11);
  const double a = 0.7, b = -1.3;
  MultiChannelWave z = x;
  z.samples = a * x.samples + b * y.samples;

  const StftConfig cfg = hann_512_128();
  const Spectrogram sx = stft(x, cfg), sy = stft(y, cfg), sz = stft(z, cfg);
  const Eigen::MatrixXcd combo = a * sx.data[0] + b * sy.data[0];
  const double rel = (sz.data[0] - combo).norm() / combo.norm();
  CHECK(rel < 1e-10);
}

TEST_CASE("frame-wise Parseval ratio is constant for stationary noise") {
  const StftConfig cfg = hann_512_128();
  const MultiChannelWave w = random_wave(1, 16000, 16000, 99);
  const Spectrogram spec = stft(w, cfg);

  // Re-derive the documented framing: reflect pad frame_len/2, centered
  // frames at t*shift, zero tail.
  const Eigen::Index time = w.num_samples();
  const Eigen::Index pad = cfg.frame_len / 2;
  std::vector<double> win(cfg.frame_len);
  for (int n = 0; n < cfg.frame_len; ++n)
    win[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / cfg.frame_len);
  auto sample_at = [&](Eigen::Index p) -> double {
    Eigen::Index i = p - pad;
    const Eigen::Index period = 2 * (time - 1);
    i = ((i % period) + period) % period;
    if (i >= time) i = period - i;
    return w.samples(0, i);
  };

  double lo = 1e300, hi = 0.0;
  for (Eigen::Index t = 0; t + 4 < spec.num_frames(); ++t) {
    double time_energy = 0.0;
    for (int n = 0; n < cfg.frame_len; ++n) {
      const double v = sample_at(t * cfg.frame_shift + n) * win[n];
      time_energy += v * v;
    }
    double freq_energy = 0.0;
    for (int k = 0; k < cfg.bins(); ++k) {
      const double m2 = std::norm(spec.data[0](t, k));
      const bool shared = (k == 0 || k == cfg.fft_size / 2);
      freq_energy += shared ? m2 : 2.0 * m2;
    }
    const double ratio = freq_energy / time_energy;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK((hi - lo) / hi < 1e-6);
}

TEST_CASE("zero spectrogram synthesizes to a zero wave") {
  const MultiChannelWave w = random_wave(1, 8000, 16000, 5);
  Spectrogram spec = stft(w, hann_512_128());
  spec.data[0].setZero();
  const MultiChannelWave back = istft(spec);
  CHECK(back.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single nonzero bin in a single frame synthesizes the windowed tone") {
  StftConfig cfg = hann_512_128();
  Spectrogram spec;
  spec.cfg = cfg;
  spec.sample_rate = 16000;
  spec.num_samples = 64;  // one frame: floor((64 + 512 - 512)/128) + 1 == 1
  spec.data.emplace_back(Eigen::MatrixXcd::Zero(1, cfg.bins()));
  const int bin = 20;
  spec.data[0](0, bin) = std::complex<double>(1.0, 0.0);

  const MultiChannelWave out = istft(spec);
  REQUIRE(out.num_samples() == 64);

  // Independent synthesis: inverse DFT of a one-hot half spectrum is
  // (2/N) cos(2 pi k n / N); weighted OLA divides by the window once.
  const Eigen::Index pad = cfg.frame_len / 2;
  for (Eigen::Index n = 0; n < out.num_samples(); ++n) {
    const Eigen::Index j = n + pad;  // position inside the single frame
    const double tone = 2.0 / cfg.fft_size *
                        std::cos(2.0 * kPi * bin * static_cast<double>(j) /
                                 cfg.fft_size);
    const double wval = 0.5 - 0.5 * std::cos(2.0 * kPi * j / cfg.frame_len);
    const double expected = wval * tone / (wval * wval);
    CHECK(out.samples(0, n) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("apply_mask behaves like an element-wise gain") {
  const MultiChannelWave w = random_wave(2, 8000, 16000, 7);
  const Spectrogram spec = stft(w, hann_512_128());

  TfMask ones;
  ones.class_ids = {"spk"};
  ones.values = {Eigen::MatrixXd::Ones(spec.num_frames(), spec.num_bins())};
  const Spectrogram same = apply_mask(spec, ones, 0);
  CHECK((same.data[0] - spec.data[0]).norm() == 0.0);

  TfMask zeros = ones;
  zeros.values[0].setZero();
  const Spectrogram none = apply_mask(spec, zeros, 0);
  CHECK(none.data[1].cwiseAbs().maxCoeff() == 0.0);

  // m and 1-m recompose the input exactly.
  SplitMix64 rng(3);
  TfMask m = ones;
  for (Eigen::Index t = 0; t < m.values[0].rows(); ++t)
    for (Eigen::Index k = 0; k < m.values[0].cols(); ++k)
      m.values[0](t, k) = rng.uniform();
  TfMask complement = m;
  complement.values[0] = Eigen::MatrixXd::Ones(m.values[0].rows(),
                                               m.values[0].cols()) -
                         m.values[0];
  const Spectrogram sum_parts = apply_mask(spec, m, 0);
  const Spectrogram rest = apply_mask(spec, complement, 0);
  const double scale = spec.data[0].cwiseAbs().maxCoeff();
  for (int c = 0; c < 2; ++c) {
    const Eigen::MatrixXcd recombined = sum_parts.data[c] + rest.data[c];
    CHECK((recombined - spec.data[c]).cwiseAbs().maxCoeff() <= 1e-14 * scale);
  }

  // With m == 0.5 both products are exact and the recomposition is bitwise.
  TfMask half = ones;
  half.values[0].setConstant(0.5);
  const Spectrogram h1 = apply_mask(spec, half, 0);
  for (int c = 0; c < 2; ++c)
    CHECK(((h1.data[c] + h1.data[c]) - spec.data[c]).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("validation errors") {
  StftConfig cfg = hann_512_128();
  MultiChannelWave shorty;
  shorty.sample_rate = 16000;
  shorty.samples = Eigen::MatrixXd::Zero(1, 100);
  CHECK_THROWS_AS(stft(shorty, cfg), ValidationError);

  // COLA violation: hann at shift == frame_len cannot be resynthesized.
  StftConfig bad = cfg;
  bad.frame_shift = bad.frame_len;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  // Spectrogram shape inconsistent with its config.
  const MultiChannelWave w = random_wave(1, 4000, 16000, 1);
  Spectrogram spec = stft(w, cfg);
  spec.data[0].conservativeResize(spec.num_frames(), cfg.bins() - 1);
  CHECK_THROWS_AS(istft(spec), ValidationError);

  // Mask grid mismatch.
  Spectrogram good = stft(w, cfg);
  TfMask small;
  small.class_ids = {"spk"};
  small.values = {Eigen::MatrixXd::Ones(3, 4)};
  CHECK_THROWS_AS(apply_mask(good, small, 0), ValidationError);
}
