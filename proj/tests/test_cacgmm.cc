// meetsep/tests/test_cacgmm.cc

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

#include "meetsep/cacgmm.h"
#include "meetsep/simulate.h"
#include "meetsep/stft.h"

using namespace meetsep;

namespace {

struct Fixture {
  SimSession session;
  Spectrogram spec;
  ActivityMatrix guide;  // oracle activity on the STFT grid
};

Fixture make_fixture(int speakers, int channels, uint64_t seed,
                     double duration = 8.0, double snr = 15.0) {
  SimConfig cfg;
  cfg.speakers = speakers;
  cfg.channels = channels;
  cfg.duration_s = duration;
  cfg.overlap_ratio = speakers > 1 ? 0.25 : 0.0;
  cfg.snr_db = snr;
  cfg.seed = seed;
  Fixture fx;
  fx.session = simulate_session(cfg);
  fx.spec = stft(fx.session.mixture, StftConfig{});
  fx.guide = resample_activity(fx.session.activity, fx.spec.num_frames(),
                               fx.spec.frame_shift_s());
  return fx;
}

// Fraction of dominance-resolved bins (one source at least `margin_db`
// above the other) where the binarized speaker mask agrees with the ideal
// binary mask.
double ibm_agreement(const Fixture &fx, const TfMask &mask, double margin_db) {
  std::vector<Spectrogram> sources;
  for (const auto &img : fx.session.source_images)
    sources.push_back(stft(img, fx.spec.cfg));
  const double margin = std::pow(10.0, margin_db / 10.0);
  long long agree = 0, total = 0;
  for (Eigen::Index t = 0; t < fx.spec.num_frames(); ++t) {
    for (Eigen::Index f = 0; f < fx.spec.num_bins(); ++f) {
      double p0 = 0.0, p1 = 0.0;
      for (const auto &ch : sources[0].data) p0 += std::norm(ch(t, f));
      for (const auto &ch : sources[1].data) p1 += std::norm(ch(t, f));
      if (p0 + p1 < 1e-10) continue;
      int truth;
      if (p0 > margin * p1)
        truth = 0;
      else if (p1 > margin * p0)
        truth = 1;
      else
        continue;
      const int guess = mask.values[0](t, f) >= mask.values[1](t, f) ? 0 : 1;
      agree += guess == truth;
      ++total;
    }
  }
  REQUIRE(total > 1000);
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("guided constraint forces exact zeros") {
  const Fixture fx = make_fixture(2, 3, 41);
  CacgmmConfig cfg;
  cfg.iterations = 5;
  cfg.guide_context_s = 0.0;  // no dilation: zeros must match the guide
  const CacgmmResult r = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);
  REQUIRE(r.mask.num_classes() == 3);
  for (int s = 0; s < 2; ++s)
    for (Eigen::Index t = 0; t < fx.spec.num_frames(); ++t)
      if (fx.guide.values(s, t) < 0.5)
        CHECK(r.mask.values[s].row(t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posteriors sum to one everywhere") {
  const Fixture fx = make_fixture(2, 2, 42, 6.0);
  CacgmmConfig cfg;
  cfg.iterations = 3;
  const CacgmmResult r = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);
  Eigen::MatrixXd total =
      Eigen::MatrixXd::Zero(fx.spec.num_frames(), fx.spec.num_bins());
  for (const auto &m : r.mask.values) total += m;
  CHECK((total.array() - 1.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("log-likelihood is non-decreasing") {
  for (uint64_t seed : {61ULL, 62ULL, 63ULL}) {
    const Fixture fx = make_fixture(2, 3, seed, 6.0);
    CacgmmConfig cfg;
    cfg.iterations = 10;
    const CacgmmResult r = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);
    REQUIRE(r.log_likelihood.size() == 10);
    for (size_t i = 1; i < r.log_likelihood.size(); ++i)
      CHECK(r.log_likelihood[i] >=
            r.log_likelihood[i - 1] -
                1e-6 * std::abs(r.log_likelihood[i - 1]));
  }
}

TEST_CASE("permuting guide rows permutes mask classes") {
  const Fixture fx = make_fixture(2, 2, 43, 6.0);
  CacgmmConfig cfg;
  cfg.iterations = 4;
  const CacgmmResult ab = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);

  ActivityMatrix swapped = fx.guide;
  swapped.values.row(0) = fx.guide.values.row(1);
  swapped.values.row(1) = fx.guide.values.row(0);
  std::swap(swapped.speakers[0], swapped.speakers[1]);
  const CacgmmResult ba = guided_cacgmm(fx.spec, swapped, nullptr, cfg);

  CHECK((ab.mask.values[0] - ba.mask.values[1]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ab.mask.values[1] - ba.mask.values[0]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scale invariance of the posteriors") {
  const Fixture fx = make_fixture(2, 2, 44, 6.0);
  CacgmmConfig cfg;
  cfg.iterations = 4;
  const CacgmmResult base = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);

  // Power-of-two scaling is exactly representable: bitwise identical masks.
  Spectrogram doubled = fx.spec;
  for (auto &ch : doubled.data) ch *= 4.0;
  const CacgmmResult big = guided_cacgmm(doubled, fx.guide, nullptr, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK((big.mask.values[k] - base.mask.values[k]).cwiseAbs().maxCoeff() ==
          0.0);

  // Arbitrary positive scaling stays within rounding noise.
  Spectrogram odd = fx.spec;
  for (auto &ch : odd.data) ch *= 3.7;
  const CacgmmResult scaled = guided_cacgmm(odd, fx.guide, nullptr, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK((scaled.mask.values[k] - base.mask.values[k]).cwiseAbs().maxCoeff() <
          1e-8);
}

TEST_CASE("disjoint guides zero the opposite halves") {
  // Synthetic guide: A active on the first half, B on the second.
  const Fixture fx = make_fixture(2, 2, 45, 6.0);
  ActivityMatrix guide = fx.guide;
  const Eigen::Index half = guide.num_frames() / 2;
  guide.values.setZero();
  guide.values.row(0).head(half).setOnes();
  guide.values.row(1).tail(guide.num_frames() - half).setOnes();

  CacgmmConfig cfg;
  cfg.iterations = 3;
  cfg.guide_context_s = 0.0;
  const CacgmmResult r = guided_cacgmm(fx.spec, guide, nullptr, cfg);
  CHECK(r.mask.values[0].bottomRows(guide.num_frames() - half).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.mask.values[1].topRows(half).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("oracle-guided masks agree with the ideal binary mask") {
  const Fixture fx = make_fixture(2, 4, 46, 8.0, 15.0);
  CacgmmConfig cfg;
  const TfMask mask =
      guided_cacgmm(fx.spec, fx.guide, nullptr, cfg).mask;
  CHECK(ibm_agreement(fx, mask, 10.0) >= 0.85);
}

TEST_CASE("explicit time-broadcast init reproduces the default bitwise") {
  const Fixture fx = make_fixture(2, 3, 47, 6.0);
  CacgmmConfig cfg;
  cfg.iterations = 6;
  const TfMask init = time_broadcast_init(fx.spec, fx.guide, cfg);
  const CacgmmResult without = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg);
  const CacgmmResult with = guided_cacgmm(fx.spec, fx.guide, &init, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK((with.mask.values[k] - without.mask.values[k])
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("sliding window equals a single fit on short sessions") {
  const Fixture fx = make_fixture(2, 2, 48, 6.0);
  CacgmmConfig cfg;
  cfg.iterations = 4;
  cfg.window_s = 120.0;
  cfg.window_shift_s = 60.0;
  const TfMask direct = guided_cacgmm(fx.spec, fx.guide, nullptr, cfg).mask;
  const TfMask windowed = sliding_window_gss(fx.spec, fx.guide, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK((direct.values[k] - windowed.values[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sliding window cross-fade averages at the overlap midpoint") {
  const Fixture fx = make_fixture(2, 2, 49, 12.0);
  CacgmmConfig cfg;
  cfg.iterations = 3;
  const double dt = fx.spec.frame_shift_s();
  // Two windows with an odd-length overlap so the midpoint is a frame.
  const Eigen::Index frames = fx.spec.num_frames();
  const Eigen::Index win = frames / 2 + 10;
  const Eigen::Index shift = frames - win;
  cfg.window_s = win * dt;
  cfg.window_shift_s = shift * dt;

  const TfMask stitched = sliding_window_gss(fx.spec, fx.guide, cfg);

  // Recompute the two windows by hand.
  auto window_mask = [&](Eigen::Index a) {
    Spectrogram sub;
    sub.cfg = fx.spec.cfg;
    sub.sample_rate = fx.spec.sample_rate;
    for (const auto &ch : fx.spec.data)
      sub.data.push_back(ch.middleRows(a, win));
    ActivityMatrix g;
    g.frame_shift_s = fx.guide.frame_shift_s;
    g.speakers = fx.guide.speakers;
    g.values = fx.guide.values.middleCols(a, win);
    return guided_cacgmm(sub, g, nullptr, cfg).mask;
  };
  const TfMask left = window_mask(0);
  const TfMask right = window_mask(shift);

  const Eigen::Index overlap = win - shift;
  REQUIRE(overlap % 2 == 1);
  const Eigen::Index mid = shift + overlap / 2;  // global frame index
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd expect =
        0.5 * (left.values[k].row(mid).transpose() +
               right.values[k].row(mid - shift).transpose());
    const Eigen::VectorXd got = stitched.values[k].row(mid).transpose();
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("window errors carry the window index") {
  // Tiny windows; the middle one sees no speaker activity at all.
  const Fixture fx = make_fixture(2, 2, 51, 9.0);
  ActivityMatrix guide = fx.guide;
  guide.values.setZero();
  const Eigen::Index frames = guide.num_frames();
  guide.values.row(0).head(frames / 4).setOnes();
  guide.values.row(1).tail(frames / 4).setOnes();

  CacgmmConfig cfg;
  cfg.iterations = 2;
  cfg.guide_context_s = 0.0;
  const double dt = fx.spec.frame_shift_s();
  cfg.window_s = (frames / 4) * dt;
  cfg.window_shift_s = cfg.window_s / 2.0;
  CHECK_THROWS_WITH_AS(sliding_window_gss(fx.spec, guide, cfg),
                       doctest::Contains("window "), ValidationError);
}

TEST_CASE("rectify_activity thresholds the frequency mean") {
  TfMask mask;
  mask.class_ids = {"spkA", "noise"};
  mask.frame_shift_s = 0.016;
  const Eigen::Index frames = 30, bins = 10;
  mask.values.assign(2, Eigen::MatrixXd::Zero(frames, bins));
  mask.values[0].middleRows(10, 10).setOnes();  // frames [10, 20) fully on
  mask.values[0].row(25).setConstant(0.49);
  mask.values[0].row(26).setConstant(0.51);
  mask.values[1] = Eigen::MatrixXd::Ones(frames, bins) - mask.values[0];

  CacgmmConfig cfg;
  cfg.rectify_threshold = 0.5;  // the threshold-edge rows below assume 0.5
  const ActivityMatrix act = rectify_activity(mask, cfg);
  REQUIRE(act.num_speakers() == 1);  // noise class dropped
  CHECK(act.speakers[0] == "spkA");
  for (Eigen::Index t = 0; t < frames; ++t) {
    const bool expect = (t >= 10 && t < 20) || t == 26;
    CHECK(act.values(0, t) == (expect ? 1.0 : 0.0));
  }

  // All-noise mask -> all-zero activity.
  TfMask noise_only = mask;
  noise_only.values[0].setZero();
  noise_only.values[1].setOnes();
  const ActivityMatrix none = rectify_activity(noise_only, cfg);
  CHECK(none.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validation errors") {
  const Fixture fx = make_fixture(2, 2, 50, 6.0);
  CacgmmConfig cfg;

  ActivityMatrix dead = fx.guide;
  dead.values.setZero();
  CHECK_THROWS_WITH_AS(guided_cacgmm(fx.spec, dead, nullptr, cfg),
                       doctest::Contains("all-zero"), ValidationError);

  Spectrogram mono = fx.spec;
  mono.data.resize(1);
  CHECK_THROWS_WITH_AS(guided_cacgmm(mono, fx.guide, nullptr, cfg),
                       doctest::Contains("2 channels"), ValidationError);

  ActivityMatrix short_guide = fx.guide;
  short_guide.values = fx.guide.values.leftCols(10);
  CHECK_THROWS_AS(guided_cacgmm(fx.spec, short_guide, nullptr, cfg),
                  ValidationError);
}
