// meetsep/tests/test_simulate.cc

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

#include "meetsep/io.h"
#include "meetsep/simulate.h"
#include "meetsep/stft.h"

using namespace meetsep;

TEST_CASE("same seed gives bitwise identical sessions") {
  SimConfig cfg;
  cfg.speakers = 2;
  cfg.channels = 2;
  cfg.duration_s = 8.0;
  cfg.seed = 123;
  const SimSession a = simulate_session(cfg);
  const SimSession b = simulate_session(cfg);
  CHECK((a.mixture.samples - b.mixture.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.noise.samples - b.noise.samples).cwiseAbs().maxCoeff() == 0.0);
  for (int s = 0; s < 2; ++s)
    CHECK((a.source_images[s].samples - b.source_images[s].samples)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  // And a different seed gives a different session.
  cfg.seed = 124;
  const SimSession c = simulate_session(cfg);
  CHECK((a.mixture.samples - c.mixture.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("mixture decomposes exactly into images plus noise") {
  SimConfig cfg;
  cfg.speakers = 3;
  cfg.channels = 4;
  cfg.duration_s = 10.0;
  cfg.t60_s = 0.3;
  cfg.seed = 7;
  const SimSession s = simulate_session(cfg);
  Eigen::MatrixXd sum = s.noise.samples;
  for (const auto &img : s.source_images) sum += img.samples;
  CHECK((sum - s.mixture.samples).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero overlap target gives pairwise disjoint activity") {
  SimConfig cfg;
  cfg.speakers = 3;
  cfg.channels = 1;
  cfg.duration_s = 12.0;
  cfg.overlap_ratio = 0.0;
  cfg.seed = 5;
  const SimSession s = simulate_session(cfg);
  for (Eigen::Index t = 0; t < s.activity.num_frames(); ++t) {
    int active = 0;
    for (int k = 0; k < 3; ++k) active += s.activity.values(k, t) >= 0.5;
    CHECK(active <= 1);
  }
  CHECK(measured_overlap_ratio(s.activity) == 0.0);
}

TEST_CASE("overlap target 0.3 is hit within 0.05 on average over seeds") {
  SimConfig cfg;
  cfg.speakers = 2;
  cfg.channels = 1;
  cfg.duration_s = 30.0;
  cfg.overlap_ratio = 0.3;
  double total = 0.0;
  const int sessions = 20;
  for (int i = 0; i < sessions; ++i) {
    cfg.seed = 1000 + static_cast<uint64_t>(i);
    const SimSession s = simulate_session(cfg);
    const double r = measured_overlap_ratio(s.activity);
    CHECK(r > 0.05);  // every session has real overlap
    CHECK(r < 0.6);
    total += r;
  }
  CHECK(std::abs(total / sessions - 0.3) < 0.05);
}

TEST_CASE("single-speaker overlap target is infeasible") {
  SimConfig cfg;
  cfg.speakers = 1;
  cfg.overlap_ratio = 0.2;
  CHECK_THROWS_AS(simulate_session(cfg), ValidationError);
}

TEST_CASE("oracle annotation round-trips through rttm") {
  SimConfig cfg;
  cfg.speakers = 3;
  cfg.channels = 1;
  cfg.duration_s = 15.0;
  cfg.seed = 77;
  const SimSession s = simulate_session(cfg);
  const Annotation back = parse_rttm(emit_rttm(s.annotation));
  REQUIRE(back.segments.size() == s.annotation.segments.size());
  for (size_t i = 0; i < back.segments.size(); ++i) {
    CHECK(back.segments[i].speaker == s.annotation.segments[i].speaker);
    CHECK(back.segments[i].start_s ==
          doctest::Approx(s.annotation.segments[i].start_s).epsilon(1e-9));
    CHECK(back.segments[i].end_s ==
          doctest::Approx(s.annotation.segments[i].end_s).epsilon(1e-9));
  }
}

TEST_CASE("active frames carry source energy") {
  SimConfig cfg;
  cfg.speakers = 2;
  cfg.channels = 1;
  cfg.duration_s = 10.0;
  cfg.seed = 3;
  const SimSession s = simulate_session(cfg);
  const int fs = s.mixture.sample_rate;
  for (int k = 0; k < 2; ++k) {
    // Compare per-frame energy of the dry image against the oracle activity,
    // skipping the first/last frame of each run (edge ramps).
    for (Eigen::Index t = 1; t + 1 < s.activity.num_frames(); ++t) {
      const bool active = s.activity.values(k, t) >= 0.5;
      const bool interior = active && s.activity.values(k, t - 1) >= 0.5 &&
                            s.activity.values(k, t + 1) >= 0.5;
      if (!interior) continue;
      const Eigen::Index a = t * fs / 100;
      const double e =
          s.source_images[k].samples.row(0).segment(a, fs / 100).squaredNorm();
      CHECK(e > 1e-10);
    }
  }
}

TEST_CASE("ideal ratio mask behaves like an oracle") {
  SimConfig cfg;
  cfg.speakers = 2;
  cfg.channels = 2;
  cfg.duration_s = 8.0;
  cfg.snr_db = 60.0;  // effectively no noise
  cfg.seed = 9;
  const SimSession s = simulate_session(cfg);

  StftConfig stft_cfg;
  std::vector<Spectrogram> sources;
  for (const auto &img : s.source_images)
    sources.push_back(stft(img, stft_cfg));
  const Spectrogram noise = stft(s.noise, stft_cfg);
  const TfMask irm = ideal_ratio_mask(sources, noise);

  REQUIRE(irm.num_classes() == 3);
  CHECK(irm.class_ids[2] == "noise");

  // Masks sum to one wherever there is real energy.
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(irm.num_frames(), irm.num_bins());
  for (const auto &m : irm.values) total += m;
  Eigen::MatrixXd energy = Eigen::MatrixXd::Zero(irm.num_frames(), irm.num_bins());
  for (const auto &sp : sources)
    for (const auto &ch : sp.data) energy += ch.cwiseAbs2();
  int checked = 0;
  for (Eigen::Index t = 0; t < total.rows(); ++t)
    for (Eigen::Index f = 0; f < total.cols(); ++f)
      if (energy(t, f) > 1e-6) {
        CHECK(std::abs(total(t, f) - 1.0) < 1e-3);
        ++checked;
      }
  CHECK(checked > 1000);

  // Solo regions: the dominant speaker's mask approaches 1.
  double solo_mass = 0.0;
  int solo_count = 0;
  const ActivityMatrix act_stft = resample_activity(
      s.activity, irm.num_frames(), sources[0].frame_shift_s());
  for (Eigen::Index t = 0; t < irm.num_frames(); ++t) {
    const bool a0 = act_stft.values(0, t) >= 0.5;
    const bool a1 = act_stft.values(1, t) >= 0.5;
    if (a0 && !a1) {
      for (Eigen::Index f = 0; f < irm.num_bins(); ++f)
        if (energy(t, f) > 1e-6) {
          solo_mass += irm.values[0](t, f);
          ++solo_count;
        }
    }
  }
  REQUIRE(solo_count > 100);
  CHECK(solo_mass / solo_count > 0.9);
}
