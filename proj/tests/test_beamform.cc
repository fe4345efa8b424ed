// meetsep/tests/test_beamform.cc

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
#include "meetsep/beamform.h"
#include "meetsep/rng.h"
#include "meetsep/stft.h"

using namespace meetsep;

namespace {

Spectrogram random_spec(int channels, Eigen::Index frames, int bins,
                        uint64_t seed) {
  SplitMix64 rng(seed);
  Spectrogram spec;
  spec.cfg.frame_len = (bins - 1) * 2;
  spec.cfg.frame_shift = spec.cfg.frame_len / 4;
  spec.cfg.fft_size = spec.cfg.frame_len;
  spec.sample_rate = 16000;
  spec.num_samples = frames * spec.cfg.frame_shift;
  for (int c = 0; c < channels; ++c) {
    Eigen::MatrixXcd m(frames, bins);
    for (Eigen::Index t = 0; t < frames; ++t)
      for (int f = 0; f < bins; ++f)
        m(t, f) = std::complex<double>(rng.gaussian(), rng.gaussian());
    spec.data.push_back(std::move(m));
  }
  return spec;
}

TfMask ones_mask(const Spectrogram &spec) {
  TfMask m;
  m.class_ids = {"target"};
  m.frame_shift_s = spec.frame_shift_s();
  m.values = {Eigen::MatrixXd::Ones(spec.num_frames(), spec.num_bins())};
  return m;
}

}  // namespace

TEST_CASE("single frame with unit mask is the rank-1 outer product") {
  const Spectrogram spec = random_spec(3, 1, 9, 1);
  const SpatialCovariance psd = estimate_psd(spec, ones_mask(spec), 0);
  for (Eigen::Index f = 0; f < spec.num_bins(); ++f) {
    Eigen::VectorXcd x(3);
    for (int c = 0; c < 3; ++c) x[c] = spec.data[c](0, f);
    const Eigen::MatrixXcd expect = x * x.adjoint();
    CHECK((psd.matrices[f] - expect).cwiseAbs().maxCoeff() < 1e-12);
    // Hermitian, PSD.
    CHECK((psd.matrices[f] - psd.matrices[f].adjoint()).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("white noise PSD converges to sigma^2 I") {
  const double sigma = 0.7;
  Spectrogram spec = random_spec(3, 2000, 5, 2);
  for (auto &ch : spec.data) ch *= sigma / std::sqrt(2.0);  // unit -> sigma^2
  const SpatialCovariance psd = estimate_psd(spec, ones_mask(spec), 0);
  for (Eigen::Index f = 0; f < spec.num_bins(); ++f) {
    const Eigen::MatrixXcd target =
        sigma * sigma * Eigen::MatrixXcd::Identity(3, 3);
    CHECK((psd.matrices[f] - target).cwiseAbs().maxCoeff() <
          0.1 * sigma * sigma);
    // Positive semi-definite within tolerance.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(psd.matrices[f]);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("uniform mask scaling cancels in the normalization") {
  const Spectrogram spec = random_spec(2, 50, 9, 3);
  TfMask half = ones_mask(spec);
  half.values[0].setConstant(0.5);
  const SpatialCovariance a = estimate_psd(spec, ones_mask(spec), 0);
  const SpatialCovariance b = estimate_psd(spec, half, 0);
  for (Eigen::Index f = 0; f < spec.num_bins(); ++f)
    CHECK((a.matrices[f] - b.matrices[f]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero mask mass names the bin") {
  const Spectrogram spec = random_spec(2, 20, 9, 4);
  TfMask m = ones_mask(spec);
  m.values[0].col(3).setZero();
  CHECK_THROWS_WITH_AS(estimate_psd(spec, m, 0),
                       doctest::Contains("bin 3"), Error);
}

TEST_CASE("identity-noise MVDR is distortionless toward the steering vector") {
  SplitMix64 rng(5);
  const int channels = 4, bins = 6;
  SpatialCovariance target, noise;
  std::vector<Eigen::VectorXcd> steer;
  for (int f = 0; f < bins; ++f) {
    Eigen::VectorXcd d(channels);
    for (int c = 0; c < channels; ++c)
      d[c] = std::complex<double>(rng.gaussian(), rng.gaussian());
    steer.push_back(d);
    target.matrices.push_back(d * d.adjoint());
    noise.matrices.push_back(Eigen::MatrixXcd::Identity(channels, channels));
  }
  const BeamWeights w = mvdr_weights(target, noise, 1);
  for (int f = 0; f < bins; ++f) {
    // d scaled to unit reference component; w^H d_scaled must be 1.
    const Eigen::VectorXcd d_scaled = steer[f] / steer[f][1];
    const Eigen::VectorXcd wf = w.weights.row(f).transpose();
    const std::complex<double> gain = (wf.adjoint() * d_scaled)(0, 0);
    CHECK(std::abs(gain - std::complex<double>(1.0, 0.0)) < 1e-6);
    // w is proportional to d under identity noise.
    const double cos2 = std::norm(wf.dot(steer[f])) /
                        (wf.squaredNorm() * steer[f].squaredNorm());
    CHECK(cos2 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("weights are invariant to positive scaling of either covariance") {
  SplitMix64 rng(6);
  const int channels = 3, bins = 4;
  SpatialCovariance target, noise;
  for (int f = 0; f < bins; ++f) {
    Eigen::MatrixXcd a(channels, channels), b(channels, channels);
    for (int i = 0; i < channels; ++i)
      for (int j = 0; j < channels; ++j) {
        a(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
        b(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
      }
    target.matrices.push_back(a * a.adjoint());
    noise.matrices.push_back(b * b.adjoint() +
                             Eigen::MatrixXcd::Identity(channels, channels));
  }
  const BeamWeights base = mvdr_weights(target, noise, 0);

  SpatialCovariance target_scaled = target, noise_scaled = noise;
  for (auto &m : target_scaled.matrices) m *= 13.0;
  const BeamWeights t_scaled = mvdr_weights(target_scaled, noise, 0);
  CHECK((t_scaled.weights - base.weights).cwiseAbs().maxCoeff() < 1e-10);

  for (auto &m : noise_scaled.matrices) m *= 0.031;
  const BeamWeights n_scaled = mvdr_weights(target, noise_scaled, 0);
  CHECK((n_scaled.weights - base.weights).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("2-channel point source in diffuse noise: output SNR >= best input") {
  SplitMix64 rng(7);
  const int channels = 2, bins = 8;
  const Eigen::Index frames = 600;
  // x(t,f) = d(f) s(t,f) + n(t,f); build signal and noise separately so the
  // SNRs can be measured exactly.
  Spectrogram sig = random_spec(channels, frames, bins, 8);
  Spectrogram noi = random_spec(channels, frames, bins, 9);
  std::vector<Eigen::VectorXcd> steer;
  for (int f = 0; f < bins; ++f) {
    Eigen::VectorXcd d(channels);
    d[0] = std::complex<double>(1.0, 0.0);
    d[1] = std::polar(rng.uniform(0.6, 1.2), rng.uniform(0.0, 6.28));
    steer.push_back(d);
  }
  Spectrogram mix = sig;
  for (int f = 0; f < bins; ++f)
    for (Eigen::Index t = 0; t < frames; ++t) {
      const std::complex<double> s = sig.data[0](t, f);  // mono source
      for (int c = 0; c < channels; ++c)
        mix.data[c](t, f) = steer[f][c] * s + 0.5 * noi.data[c](t, f);
    }

  // Oracle covariances from the constituents.
  SpatialCovariance target, noise;
  for (int f = 0; f < bins; ++f) {
    Eigen::MatrixXcd phi_s = Eigen::MatrixXcd::Zero(channels, channels);
    Eigen::MatrixXcd phi_n = Eigen::MatrixXcd::Zero(channels, channels);
    for (Eigen::Index t = 0; t < frames; ++t) {
      Eigen::VectorXcd xs(channels), xn(channels);
      for (int c = 0; c < channels; ++c) {
        xs[c] = steer[f][c] * sig.data[0](t, f);
        xn[c] = 0.5 * noi.data[c](t, f);
      }
      phi_s += xs * xs.adjoint();
      phi_n += xn * xn.adjoint();
    }
    target.matrices.push_back(phi_s / static_cast<double>(frames));
    noise.matrices.push_back(phi_n / static_cast<double>(frames));
  }

  const BeamWeights w = mvdr_weights(target, noise);
  auto snr_of = [&](auto &&project_sig, auto &&project_noise) {
    double s = 0.0, n = 0.0;
    for (int f = 0; f < bins; ++f)
      for (Eigen::Index t = 0; t < frames; ++t) {
        s += std::norm(project_sig(t, f));
        n += std::norm(project_noise(t, f));
      }
    return s / n;
  };
  double best_input = 0.0;
  for (int c = 0; c < channels; ++c) {
    const double snr = snr_of(
        [&](Eigen::Index t, int f) { return steer[f][c] * sig.data[0](t, f); },
        [&](Eigen::Index t, int f) { return 0.5 * noi.data[c](t, f); });
    best_input = std::max(best_input, snr);
  }
  const double out = snr_of(
      [&](Eigen::Index t, int f) {
        std::complex<double> y = 0.0;
        for (int c = 0; c < channels; ++c)
          y += std::conj(w.weights(f, c)) * steer[f][c] * sig.data[0](t, f);
        return y;
      },
      [&](Eigen::Index t, int f) {
        std::complex<double> y = 0.0;
        for (int c = 0; c < channels; ++c)
          y += std::conj(w.weights(f, c)) * 0.5 * noi.data[c](t, f);
        return y;
      });
  CHECK(out >= best_input);
}

TEST_CASE("unreachable conditioning errors out after escalated loading") {
  SpatialCovariance target, noise;
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(2, 2);
  phi(0, 0) = 10.0;
  phi(1, 1) = 1.0;
  target.matrices.assign(4, Eigen::MatrixXcd::Identity(2, 2));
  noise.matrices.assign(4, phi);
  MvdrConfig cfg;
  cfg.max_condition = 1.5;  // impossible even after 3 escalations
  CHECK_THROWS_WITH_AS(mvdr_weights(target, noise, 0, cfg),
                       doctest::Contains("not invertible"), Error);
}

TEST_CASE("beamform applies w^H x") {
  const Spectrogram spec = random_spec(3, 40, 9, 10);
  // One-hot weights select a channel exactly.
  BeamWeights onehot;
  onehot.reference_channel = 2;
  onehot.weights = Eigen::MatrixXcd::Zero(spec.num_bins(), 3);
  onehot.weights.col(2).setOnes();
  const Spectrogram picked = beamform(spec, onehot);
  CHECK((picked.data[0] - spec.data[2]).cwiseAbs().maxCoeff() == 0.0);

  // Zero weights give a zero output.
  BeamWeights zero = onehot;
  zero.weights.setZero();
  CHECK(beamform(spec, zero).data[0].cwiseAbs().maxCoeff() == 0.0);

  // Linearity in the input spectrogram.
  SplitMix64 rng(11);
  BeamWeights w = onehot;
  for (Eigen::Index f = 0; f < spec.num_bins(); ++f)
    for (int c = 0; c < 3; ++c)
      w.weights(f, c) = std::complex<double>(rng.gaussian(), rng.gaussian());
  Spectrogram other = random_spec(3, 40, 9, 12);
  Spectrogram combo = spec;
  for (int c = 0; c < 3; ++c)
    combo.data[c] = 0.3 * spec.data[c] + 1.7 * other.data[c];
  const Eigen::MatrixXcd expect =
      0.3 * beamform(spec, w).data[0] + 1.7 * beamform(other, w).data[0];
  const Eigen::MatrixXcd got = beamform(combo, w).data[0];
  CHECK((got - expect).cwiseAbs().maxCoeff() <
        1e-12 * expect.cwiseAbs().maxCoeff());

  // Shape mismatch.
  BeamWeights bad = onehot;
  bad.weights = Eigen::MatrixXcd::Zero(spec.num_bins() - 1, 3);
  CHECK_THROWS_AS(beamform(spec, bad), ValidationError);
}
