// meetsep/src/wpe.cc

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

#include "meetsep/wpe.h"

#include <cmath>
#include <mutex>

#include "parallel.h"

namespace meetsep {

void WpeConfig::validate() const {
  if (taps < 1) throw_invalid("WPE taps must be >= 1, got ", taps);
  if (delay < 1) throw_invalid("WPE delay must be >= 1, got ", delay);
  if (iterations < 1)
    throw_invalid("WPE iterations must be >= 1, got ", iterations);
  if (psd_context < 0)
    throw_invalid("WPE psd_context must be >= 0, got ", psd_context);
  if (!(epsilon > 0.0)) throw_invalid("WPE epsilon must be positive");
}

namespace {

// lambda(t) = channel-mean power of the current estimate, optionally
// smoothed over +/- psd_context frames, floored proportionally to the bin
// power so the filters are scale-equivariant.
Eigen::VectorXd variance_estimate(const Eigen::MatrixXcd &y, int context,
                                  double floor_value) {
  const Eigen::Index frames = y.cols();
  Eigen::VectorXd raw =
      y.cwiseAbs2().colwise().mean().transpose();
  Eigen::VectorXd out(frames);
  if (context <= 0) {
    out = raw;
  } else {
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index a = std::max<Eigen::Index>(0, t - context);
      const Eigen::Index b = std::min(frames, t + context + 1);
      out[t] = raw.segment(a, b - a).mean();
    }
  }
  return out.cwiseMax(floor_value);
}

}  // namespace

WpeResult wpe(const Spectrogram &spec, const WpeConfig &cfg) {
  spec.validate();
  cfg.validate();
  const int channels = spec.channels();
  const Eigen::Index frames = spec.num_frames();
  const Eigen::Index bins = spec.num_bins();
  if (frames <= cfg.taps + cfg.delay)
    throw_invalid("WPE needs more than taps+delay = ", cfg.taps + cfg.delay,
                  " frames, got ", frames);

  const int dim = channels * cfg.taps;

  WpeResult result;
  result.dereverbed = spec;
  result.objective.assign(static_cast<size_t>(cfg.iterations), 0.0);
  std::vector<Eigen::VectorXd> per_bin_obj(
      static_cast<size_t>(bins), Eigen::VectorXd::Zero(cfg.iterations));

  std::mutex error_mutex;
  std::string first_bad_bin;

  parallel_for(bins, [&](long f) {
    // Observations for this bin, one column per frame.
    Eigen::MatrixXcd x(channels, frames);
    for (int c = 0; c < channels; ++c)
      x.row(c) = spec.data[static_cast<size_t>(c)].col(f).transpose();

    const double bin_power = x.cwiseAbs2().mean();
    if (bin_power <= 0.0) return;  // silent bin, filters have nothing to do
    const double floor_value = std::max(1e-10 * bin_power, 1e-300);

    // Stacked delayed context x~(t) = [x(t-delay), ..., x(t-delay-taps+1)],
    // zero history before the signal start.
    Eigen::MatrixXcd stacked = Eigen::MatrixXcd::Zero(dim, frames);
    for (int tap = 0; tap < cfg.taps; ++tap) {
      const Eigen::Index lag = cfg.delay + tap;
      for (Eigen::Index t = lag; t < frames; ++t)
        stacked.block(tap * channels, t, channels, 1) = x.col(t - lag);
    }

    Eigen::MatrixXcd y = x;
    for (int it = 0; it < cfg.iterations; ++it) {
      const Eigen::VectorXd lambda =
          variance_estimate(y, cfg.psd_context, floor_value);
      const Eigen::VectorXd inv_lambda = lambda.cwiseInverse();

      // R = sum_t x~ x~^H / lambda,  P = sum_t x~ x^H / lambda
      const Eigen::MatrixXcd weighted =
          stacked * inv_lambda.asDiagonal();
      Eigen::MatrixXcd corr = weighted * stacked.adjoint();
      const Eigen::MatrixXcd cross = weighted * x.adjoint();
      corr += cfg.epsilon * (corr.trace().real() / dim) *
              Eigen::MatrixXcd::Identity(dim, dim);

      const Eigen::LDLT<Eigen::MatrixXcd> ldlt(corr);
      Eigen::MatrixXcd filters;
      if (ldlt.info() == Eigen::Success) filters = ldlt.solve(cross);
      if (ldlt.info() != Eigen::Success || !filters.allFinite()) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_bad_bin.empty())
          first_bad_bin = "WPE correlation matrix rank-deficient despite "
                          "regularization at bin " +
                          std::to_string(f);
        return;
      }

      y = x - filters.adjoint() * stacked;

      // J = sum_t (C log lambda + ||y||^2 / lambda) with this iteration's
      // weights; each half-step minimizes J so the trace never increases.
      double obj = 0.0;
      const Eigen::VectorXd power =
          y.cwiseAbs2().colwise().sum().transpose();
      for (Eigen::Index t = 0; t < frames; ++t)
        obj += channels * std::log(lambda[t]) + power[t] / lambda[t];
      per_bin_obj[static_cast<size_t>(f)][it] = obj;
    }

    for (int c = 0; c < channels; ++c)
      result.dereverbed.data[static_cast<size_t>(c)].col(f) =
          y.row(c).transpose();
  });

  if (!first_bad_bin.empty()) throw_error(first_bad_bin);

  for (Eigen::Index f = 0; f < bins; ++f)
    for (int it = 0; it < cfg.iterations; ++it)
      result.objective[static_cast<size_t>(it)] +=
          per_bin_obj[static_cast<size_t>(f)][it];
  return result;
}

}  // namespace meetsep
