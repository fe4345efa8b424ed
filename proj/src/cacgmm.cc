// meetsep/src/cacgmm.cc

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

#include "meetsep/cacgmm.h"

#include <cmath>
#include <mutex>

#include "parallel.h"

namespace meetsep {

void CacgmmConfig::validate() const {
  if (iterations < 1) throw_invalid("cACGMM iterations must be >= 1");
  if (!(epsilon > 0.0)) throw_invalid("cACGMM epsilon must be positive");
  if (noise_floor < 0.0) throw_invalid("cACGMM noise_floor must be >= 0");
  if (!(window_s > 0.0) || !(window_shift_s > 0.0) ||
      window_shift_s > window_s)
    throw_invalid("need 0 < window_shift_s <= window_s, got shift ",
                  window_shift_s, " for window ", window_s);
  if (!(rectify_threshold > 0.0) || !(rectify_threshold < 1.0))
    throw_invalid("rectify_threshold must lie in (0, 1), got ",
                  rectify_threshold);
  if (guide_context_s < 0.0)
    throw_invalid("guide_context_s must be >= 0");
}

namespace {

// Frame-varying class priors derived from the guide: speaker rows are
// dilated, binarized at 0.5 into a hard support, and keep their soft value
// as the prior weight on that support; the noise class is always active.
struct GuidePriors {
  Eigen::MatrixXd weights;     // classes x frames, rows normalized per frame
  Eigen::MatrixXd support;     // classes x frames in {0, 1}
  std::vector<std::string> class_ids;
};

GuidePriors build_priors(const ActivityMatrix &guide,
                         const CacgmmConfig &cfg) {
  const ActivityMatrix dilated = dilate_activity(guide, cfg.guide_context_s);
  const int speakers = dilated.num_speakers();
  const Eigen::Index frames = dilated.num_frames();
  const int classes = speakers + 1;

  GuidePriors out;
  out.class_ids = dilated.speakers;
  out.class_ids.emplace_back(kNoiseClassId);
  out.weights.setZero(classes, frames);
  out.support.setZero(classes, frames);

  bool any_speaker_active = false;
  for (int s = 0; s < speakers; ++s) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      if (dilated.values(s, t) >= 0.5) {
        out.support(s, t) = 1.0;
        out.weights(s, t) = dilated.values(s, t);
        any_speaker_active = true;
      }
    }
  }
  if (!any_speaker_active)
    throw_invalid("guide is all-zero for every speaker on the whole window");

  const double noise_weight = std::max(cfg.noise_floor, 1.0);
  out.support.row(speakers).setOnes();
  out.weights.row(speakers).setConstant(noise_weight);

  for (Eigen::Index t = 0; t < frames; ++t)
    out.weights.col(t) /= out.weights.col(t).sum();
  return out;
}

void check_grid(const Spectrogram &spec, const ActivityMatrix &guide) {
  if (spec.channels() < 2)
    throw_invalid("cACGMM needs >= 2 channels, got ", spec.channels(),
                  " (directional statistics are undefined on one channel)");
  if (guide.num_frames() != spec.num_frames())
    throw_invalid("guide has ", guide.num_frames(), " frames but spectrogram ",
                  spec.num_frames(),
                  " (resample the activity to the STFT grid first)");
}

// Initial responsibilities on the class grid of `priors`: either the guide
// broadcast over frequency or a caller-provided mask (speakers only, or
// speakers + noise), constrained and renormalized per (frame, bin).
std::vector<Eigen::MatrixXd> initial_responsibilities(
    const GuidePriors &priors, const TfMask *init, Eigen::Index frames,
    Eigen::Index bins) {
  const int classes = static_cast<int>(priors.class_ids.size());
  const int speakers = classes - 1;
  std::vector<Eigen::MatrixXd> gamma(static_cast<size_t>(classes));

  if (init == nullptr) {
    for (int k = 0; k < classes; ++k)
      gamma[static_cast<size_t>(k)] =
          priors.weights.row(k).transpose().replicate(1, bins);
  } else {
    init->validate();
    if (init->num_frames() != frames || init->num_bins() != bins)
      throw_invalid("init mask grid ", init->num_frames(), "x",
                    init->num_bins(), " does not match spectrogram ", frames,
                    "x", bins);
    const bool with_noise = init->num_classes() == classes;
    if (!with_noise && init->num_classes() != speakers)
      throw_invalid("init mask has ", init->num_classes(),
                    " classes; expected ", speakers, " speakers or ", classes,
                    " speakers+noise");
    Eigen::MatrixXd speaker_sum = Eigen::MatrixXd::Zero(frames, bins);
    for (int k = 0; k < speakers; ++k) {
      Eigen::MatrixXd m =
          init->values[static_cast<size_t>(k)].cwiseMax(0.0).cwiseMin(1.0);
      for (Eigen::Index t = 0; t < frames; ++t)
        if (priors.support(k, t) == 0.0) m.row(t).setZero();
      speaker_sum += m;
      gamma[static_cast<size_t>(k)] = std::move(m);
    }
    if (with_noise)
      gamma[static_cast<size_t>(speakers)] =
          init->values[static_cast<size_t>(speakers)].cwiseMax(0.0).cwiseMin(
              1.0);
    else
      gamma[static_cast<size_t>(speakers)] =
          (Eigen::MatrixXd::Ones(frames, bins) - speaker_sum).cwiseMax(0.05);
  }

  // Per-cell normalization; the noise class keeps every cell strictly
  // positive, so the sum never vanishes.
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(frames, bins);
  for (const auto &g : gamma) total += g;
  for (auto &g : gamma) g = g.cwiseQuotient(total);
  return gamma;
}

}  // namespace

TfMask time_broadcast_init(const Spectrogram &spec,
                           const ActivityMatrix &guide,
                           const CacgmmConfig &cfg) {
  spec.validate();
  guide.validate();
  cfg.validate();
  check_grid(spec, guide);
  const GuidePriors priors = build_priors(guide, cfg);
  TfMask mask;
  mask.class_ids = priors.class_ids;
  mask.frame_shift_s = spec.frame_shift_s();
  for (int k = 0; k < static_cast<int>(priors.class_ids.size()); ++k)
    mask.values.push_back(
        priors.weights.row(k).transpose().replicate(1, spec.num_bins()));
  return mask;
}

CacgmmResult guided_cacgmm(const Spectrogram &spec,
                           const ActivityMatrix &guide, const TfMask *init,
                           const CacgmmConfig &cfg) {
  spec.validate();
  guide.validate();
  cfg.validate();
  check_grid(spec, guide);

  const int channels = spec.channels();
  const Eigen::Index frames = spec.num_frames();
  const Eigen::Index bins = spec.num_bins();
  const GuidePriors priors = build_priors(guide, cfg);
  const int classes = static_cast<int>(priors.class_ids.size());

  std::vector<Eigen::MatrixXd> gamma =
      initial_responsibilities(priors, init, frames, bins);

  // Per-frame log priors; -inf marks a forbidden class.
  Eigen::MatrixXd log_prior(classes, frames);
  for (int k = 0; k < classes; ++k)
    for (Eigen::Index t = 0; t < frames; ++t)
      log_prior(k, t) = priors.support(k, t) > 0.0
                            ? std::log(priors.weights(k, t))
                            : -std::numeric_limits<double>::infinity();

  CacgmmResult result;
  result.mask.class_ids = priors.class_ids;
  result.mask.frame_shift_s = spec.frame_shift_s();
  result.mask.values.assign(static_cast<size_t>(classes),
                            Eigen::MatrixXd::Zero(frames, bins));
  result.log_likelihood.assign(static_cast<size_t>(cfg.iterations), 0.0);

  std::vector<Eigen::VectorXd> per_bin_ll(
      static_cast<size_t>(bins), Eigen::VectorXd::Zero(cfg.iterations));
  std::mutex error_mutex;
  std::string first_error;

  parallel_for(bins, [&](long f) {
    // Unit-normalized observation directions for this bin.
    Eigen::MatrixXcd z(channels, frames);
    for (int c = 0; c < channels; ++c)
      z.row(c) = spec.data[static_cast<size_t>(c)].col(f).transpose();
    for (Eigen::Index t = 0; t < frames; ++t) {
      const double norm = z.col(t).norm();
      if (norm > 0.0)
        z.col(t) /= norm;
      else
        z.col(t).setConstant(std::complex<double>(
            1.0 / std::sqrt(static_cast<double>(channels)), 0.0));
    }

    // Responsibilities and quadratic forms carried across iterations.
    Eigen::MatrixXd g(classes, frames);
    for (int k = 0; k < classes; ++k)
      g.row(k) = gamma[static_cast<size_t>(k)].col(f).transpose();
    Eigen::MatrixXd quad = Eigen::MatrixXd::Ones(classes, frames);

    std::vector<Eigen::MatrixXcd> shape(
        static_cast<size_t>(classes),
        Eigen::MatrixXcd::Identity(channels, channels));
    std::vector<Eigen::MatrixXcd> shape_inv = shape;
    Eigen::VectorXd log_det = Eigen::VectorXd::Zero(classes);

    for (int it = 0; it < cfg.iterations; ++it) {
      // M-step: B_k = C * sum_t (g/quad) z z^H / sum_t g, regularized and
      // trace-normalized (the ACG density is invariant to the scale of B).
      for (int k = 0; k < classes; ++k) {
        const double mass = g.row(k).sum();
        if (mass <= 1e-12) continue;  // class silent in this window
        const Eigen::ArrayXd w =
            g.row(k).transpose().array() / quad.row(k).transpose().array();
        Eigen::MatrixXcd acc = z * w.matrix().asDiagonal() * z.adjoint();
        acc *= static_cast<double>(channels) / mass;
        acc += cfg.epsilon * (acc.trace().real() / channels) *
               Eigen::MatrixXcd::Identity(channels, channels);
        acc *= static_cast<double>(channels) / acc.trace().real();
        shape[static_cast<size_t>(k)] = acc;
      }

      // Refresh inverses and log determinants.
      bool ok = true;
      for (int k = 0; k < classes; ++k) {
        Eigen::MatrixXcd b = shape[static_cast<size_t>(k)];
        double extra = cfg.epsilon;
        Eigen::LLT<Eigen::MatrixXcd> llt(b);
        int tries = 0;
        while (llt.info() != Eigen::Success && tries < 3) {
          extra *= 10.0;
          b += extra * Eigen::MatrixXcd::Identity(channels, channels);
          llt.compute(b);
          ++tries;
        }
        if (llt.info() != Eigen::Success) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error.empty())
            first_error =
                "cACGMM covariance not positive definite despite "
                "regularization at bin " +
                std::to_string(f);
          ok = false;
          break;
        }
        shape_inv[static_cast<size_t>(k)] = llt.solve(
            Eigen::MatrixXcd::Identity(channels, channels));
        double ld = 0.0;
        const Eigen::MatrixXcd l = llt.matrixL();
        for (int c = 0; c < channels; ++c) ld += std::log(l(c, c).real());
        log_det[k] = 2.0 * ld;
      }
      if (!ok) return;

      // E-step: log gamma = log pi + log A(z; B), normalized per frame.
      Eigen::MatrixXd logp(classes, frames);
      for (int k = 0; k < classes; ++k) {
        const Eigen::MatrixXcd zq = shape_inv[static_cast<size_t>(k)] * z;
        Eigen::VectorXd q = (z.conjugate().cwiseProduct(zq))
                                .colwise()
                                .sum()
                                .real()
                                .transpose();
        q = q.cwiseMax(1e-12);
        quad.row(k) = q.transpose();
        for (Eigen::Index t = 0; t < frames; ++t)
          logp(k, t) =
              log_prior(k, t) - log_det[k] - channels * std::log(q[t]);
      }
      double ll = 0.0;
      for (Eigen::Index t = 0; t < frames; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < classes; ++k) mx = std::max(mx, logp(k, t));
        double denom = 0.0;
        for (int k = 0; k < classes; ++k) {
          const double e = std::isinf(logp(k, t)) ? 0.0 : std::exp(logp(k, t) - mx);
          g(k, t) = e;
          denom += e;
        }
        g.col(t) /= denom;
        ll += mx + std::log(denom);
      }
      per_bin_ll[static_cast<size_t>(f)][it] = ll;
    }

    for (int k = 0; k < classes; ++k)
      result.mask.values[static_cast<size_t>(k)].col(f) =
          g.row(k).transpose();
  });

  if (!first_error.empty()) throw_error(first_error);

  for (Eigen::Index f = 0; f < bins; ++f)
    for (int it = 0; it < cfg.iterations; ++it)
      result.log_likelihood[static_cast<size_t>(it)] +=
          per_bin_ll[static_cast<size_t>(f)][it];
  return result;
}

TfMask sliding_window_gss(const Spectrogram &spec, const ActivityMatrix &guide,
                          const CacgmmConfig &cfg, const TfMask *init) {
  spec.validate();
  guide.validate();
  cfg.validate();
  check_grid(spec, guide);

  const Eigen::Index frames = spec.num_frames();
  const double dt = spec.frame_shift_s();
  const Eigen::Index win = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(cfg.window_s / dt)));
  const Eigen::Index shift = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(cfg.window_shift_s / dt)));

  if (frames <= win) {
    // Session shorter than one window: identical to a single fit.
    return guided_cacgmm(spec, guide, init, cfg).mask;
  }

  std::vector<Eigen::Index> starts;
  for (Eigen::Index a = 0;; a += shift) {
    if (a + win >= frames) {
      starts.push_back(frames - win);
      break;
    }
    starts.push_back(a);
  }

  const int classes = guide.num_speakers() + 1;
  TfMask out;
  out.frame_shift_s = dt;
  out.values.assign(static_cast<size_t>(classes),
                    Eigen::MatrixXd::Zero(frames, spec.num_bins()));
  Eigen::VectorXd weight_sum = Eigen::VectorXd::Zero(frames);

  for (size_t wi = 0; wi < starts.size(); ++wi) {
    const Eigen::Index a = starts[wi];
    Spectrogram window;
    window.cfg = spec.cfg;
    window.sample_rate = spec.sample_rate;
    window.num_samples = 0;
    for (const auto &ch : spec.data)
      window.data.push_back(ch.middleRows(a, win));

    ActivityMatrix guide_win;
    guide_win.frame_shift_s = guide.frame_shift_s;
    guide_win.speakers = guide.speakers;
    guide_win.values = guide.values.middleCols(a, win);

    TfMask init_win;
    const TfMask *init_ptr = nullptr;
    if (init != nullptr) {
      init_win.class_ids = init->class_ids;
      init_win.frame_shift_s = init->frame_shift_s;
      for (const auto &m : init->values)
        init_win.values.push_back(m.middleRows(a, win));
      init_ptr = &init_win;
    }

    TfMask mask_win;
    try {
      mask_win = guided_cacgmm(window, guide_win, init_ptr, cfg).mask;
    } catch (const ValidationError &e) {
      throw ValidationError("window " + std::to_string(wi) + " (frames " +
                            std::to_string(a) + ".." + std::to_string(a + win) +
                            "): " + e.what());
    } catch (const Error &e) {
      throw Error("window " + std::to_string(wi) + " (frames " +
                  std::to_string(a) + ".." + std::to_string(a + win) +
                  "): " + e.what());
    }
    if (wi == 0) out.class_ids = mask_win.class_ids;

    // Tent weights: linear ramps in two-window overlaps, exactly 1/2 at the
    // overlap midpoint.
    for (Eigen::Index j = 0; j < win; ++j) {
      const double w = static_cast<double>(
          std::min(j + 1, win - j));
      weight_sum[a + j] += w;
      for (int k = 0; k < classes; ++k)
        out.values[static_cast<size_t>(k)].row(a + j) +=
            w * mask_win.values[static_cast<size_t>(k)].row(j);
    }
  }

  for (int k = 0; k < classes; ++k)
    for (Eigen::Index t = 0; t < frames; ++t)
      out.values[static_cast<size_t>(k)].row(t) /= weight_sum[t];
  return out;
}

ActivityMatrix rectify_activity(const TfMask &mask, const CacgmmConfig &cfg) {
  mask.validate();
  cfg.validate();
  ActivityMatrix out;
  out.frame_shift_s = mask.frame_shift_s > 0.0 ? mask.frame_shift_s : 0.01;
  const Eigen::Index frames = mask.num_frames();
  std::vector<int> keep;
  for (int k = 0; k < mask.num_classes(); ++k)
    if (mask.class_ids[static_cast<size_t>(k)] != kNoiseClassId)
      keep.push_back(k);
  out.values.setZero(static_cast<Eigen::Index>(keep.size()), frames);
  for (size_t row = 0; row < keep.size(); ++row) {
    out.speakers.push_back(mask.class_ids[static_cast<size_t>(keep[row])]);
    const Eigen::VectorXd freq_mean =
        mask.values[static_cast<size_t>(keep[row])].rowwise().mean();
    for (Eigen::Index t = 0; t < frames; ++t)
      out.values(static_cast<Eigen::Index>(row), t) =
          freq_mean[t] >= cfg.rectify_threshold ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace meetsep
