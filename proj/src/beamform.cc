// meetsep/src/beamform.cc

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

#include "meetsep/beamform.h"

#include <cmath>
#include <mutex>

#include "parallel.h"

namespace meetsep {

void SpatialCovariance::validate() const {
  if (matrices.empty()) throw_invalid("spatial covariance has no bins");
  const int c = channels();
  for (const auto &m : matrices) {
    if (m.rows() != c || m.cols() != c)
      throw_invalid("spatial covariance bins disagree in channel count");
    if (!m.allFinite())
      throw_invalid("spatial covariance contains non-finite entries");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw_invalid("spatial covariance bin is not Hermitian");
  }
}

SpatialCovariance estimate_psd(const Spectrogram &spec, const TfMask &mask,
                               int class_index) {
  spec.validate();
  mask.validate();
  if (class_index < 0 || class_index >= mask.num_classes())
    throw_invalid("mask class index ", class_index, " out of range");
  if (mask.num_frames() != spec.num_frames() ||
      mask.num_bins() != spec.num_bins())
    throw_invalid("mask grid does not match spectrogram for PSD estimation");

  const int channels = spec.channels();
  const Eigen::Index frames = spec.num_frames();
  const Eigen::Index bins = spec.num_bins();
  const Eigen::MatrixXd &m = mask.values[static_cast<size_t>(class_index)];

  SpatialCovariance psd;
  psd.matrices.assign(static_cast<size_t>(bins),
                      Eigen::MatrixXcd::Zero(channels, channels));
  std::mutex error_mutex;
  std::string first_error;

  parallel_for(bins, [&](long f) {
    const double mass = m.col(f).sum();
    if (mass <= 0.0) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (first_error.empty())
        first_error = "mask class " +
                      mask.class_ids[static_cast<size_t>(class_index)] +
                      " has zero mass at bin " + std::to_string(f);
      return;
    }
    Eigen::MatrixXcd x(channels, frames);
    for (int c = 0; c < channels; ++c)
      x.row(c) = spec.data[static_cast<size_t>(c)].col(f).transpose();
    // Phi = sum_t m(t) x x^H / sum_t m(t)
    Eigen::MatrixXcd phi =
        x * m.col(f).asDiagonal() * x.adjoint() / mass;
    psd.matrices[static_cast<size_t>(f)] = 0.5 * (phi + phi.adjoint());
  });
  if (!first_error.empty()) throw_error(first_error);
  return psd;
}

namespace {

// Diagonal loading with the condition-number escalation policy: epsilon
// scaled by trace/channels, multiplied by 10 (at most 3 times) while the
// eigenvalue spread exceeds max_condition.
Eigen::MatrixXcd load_noise(const Eigen::MatrixXcd &noise,
                            const MvdrConfig &cfg, Eigen::Index bin) {
  const int c = static_cast<int>(noise.rows());
  const double scale = std::max(noise.trace().real() / c, 1e-300);
  double eps = cfg.epsilon;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXcd loaded =
        noise + eps * scale * Eigen::MatrixXcd::Identity(c, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(loaded,
                                                       Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= cfg.max_condition) return loaded;
    if (attempt >= 3)
      throw_error("noise covariance at bin ", bin,
                  " not invertible (condition above ", cfg.max_condition,
                  " after escalated loading)");
    eps *= 10.0;
  }
}

}  // namespace

BeamWeights mvdr_weights(const SpatialCovariance &target,
                         const SpatialCovariance &noise,
                         std::optional<int> reference, const MvdrConfig &cfg) {
  target.validate();
  noise.validate();
  if (target.num_bins() != noise.num_bins() ||
      target.channels() != noise.channels())
    throw_invalid("target and noise covariance shapes disagree");
  const int channels = target.channels();
  const Eigen::Index bins = target.num_bins();
  if (reference && (*reference < 0 || *reference >= channels))
    throw_invalid("reference channel ", *reference, " out of range [0, ",
                  channels, ")");

  // W(f) = Phi_n^{-1} Phi_s / trace(Phi_n^{-1} Phi_s); the weight vector is
  // one column of W, picked by the reference channel.
  std::vector<Eigen::MatrixXcd> w_full(static_cast<size_t>(bins));
  std::mutex error_mutex;
  std::string first_error;
  parallel_for(bins, [&](long f) {
    try {
      const Eigen::MatrixXcd loaded =
          load_noise(noise.matrices[static_cast<size_t>(f)], cfg, f);
      const Eigen::MatrixXcd ratio =
          loaded.ldlt().solve(target.matrices[static_cast<size_t>(f)]);
      const double tr = ratio.trace().real();
      if (!(tr > 1e-300) || !ratio.allFinite())
        w_full[static_cast<size_t>(f)] =
            Eigen::MatrixXcd::Zero(channels, channels);
      else
        w_full[static_cast<size_t>(f)] = ratio / tr;
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (first_error.empty()) {
        try {
          throw;
        } catch (const std::exception &e) {
          first_error = e.what();
        }
      }
    }
  });
  if (!first_error.empty()) throw_error(first_error);

  int ref = reference.value_or(-1);
  if (ref < 0) {
    // Average posterior SNR per candidate reference column.
    double best = -1.0;
    for (int c = 0; c < channels; ++c) {
      double snr_sum = 0.0;
      for (Eigen::Index f = 0; f < bins; ++f) {
        const Eigen::VectorXcd w = w_full[static_cast<size_t>(f)].col(c);
        const double s =
            (w.adjoint() * target.matrices[static_cast<size_t>(f)] * w)
                .real()
                .sum();
        const double n =
            (w.adjoint() * noise.matrices[static_cast<size_t>(f)] * w)
                .real()
                .sum();
        snr_sum += s / std::max(n, 1e-300);
      }
      if (snr_sum > best) {
        best = snr_sum;
        ref = c;
      }
    }
  }

  BeamWeights bw;
  bw.reference_channel = ref;
  bw.weights.resize(bins, channels);
  for (Eigen::Index f = 0; f < bins; ++f)
    bw.weights.row(f) = w_full[static_cast<size_t>(f)].col(ref).transpose();
  if (!bw.weights.allFinite()) throw_error("MVDR produced non-finite weights");
  return bw;
}

Spectrogram beamform(const Spectrogram &spec, const BeamWeights &w) {
  spec.validate();
  if (w.weights.rows() != spec.num_bins() ||
      w.weights.cols() != spec.channels())
    throw_invalid("beam weights ", w.weights.rows(), "x", w.weights.cols(),
                  " do not match spectrogram with ", spec.num_bins(),
                  " bins x ", spec.channels(), " channels");
  Spectrogram out;
  out.cfg = spec.cfg;
  out.sample_rate = spec.sample_rate;
  out.num_samples = spec.num_samples;
  out.data.assign(1, Eigen::MatrixXcd::Zero(spec.num_frames(), spec.num_bins()));
  // y(t,f) = w(f)^H x(t,f)
  for (int c = 0; c < spec.channels(); ++c)
    out.data[0] += spec.data[static_cast<size_t>(c)] *
                   w.weights.col(c).conjugate().asDiagonal();
  return out;
}

}  // namespace meetsep
