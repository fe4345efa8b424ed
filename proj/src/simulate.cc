// meetsep/src/simulate.cc

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

#include "meetsep/simulate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fft.h"
#include "meetsep/rng.h"

namespace meetsep {

namespace {
constexpr double kPi = 3.14159265358979323846;

double snap_cs(double t) { return std::round(t * 100.0) / 100.0; }

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// RBJ constant-peak-gain bandpass biquad, direct form II transposed.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  Biquad(double f0, double q, int fs) {
    const double w0 = 2.0 * kPi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w0) / a0;
    a2 = (1.0 - alpha) / a0;
  }

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

struct Bout {
  double start, end;
};

// Greedy turn scheduler on the centisecond grid: each new turn either
// overlaps the previous one (while the running overlap ratio is below
// target) or follows it after a pause.
std::vector<std::vector<Bout>> schedule_bouts(const SimConfig &cfg,
                                              SplitMix64 &rng) {
  const int s_count = cfg.speakers;
  std::vector<std::vector<Bout>> bouts(static_cast<size_t>(s_count));

  const Eigen::Index frames =
      static_cast<Eigen::Index>(std::llround(cfg.duration_s * 100.0));
  std::vector<int> active(static_cast<size_t>(frames), 0);
  auto add_frames = [&](const Bout &b) {
    const Eigen::Index a = static_cast<Eigen::Index>(std::llround(b.start * 100.0));
    const Eigen::Index e = std::min<Eigen::Index>(
        frames, static_cast<Eigen::Index>(std::llround(b.end * 100.0)));
    for (Eigen::Index t = a; t < e; ++t) ++active[static_cast<size_t>(t)];
  };
  auto ratio_now = [&]() {
    Eigen::Index speech = 0, olap = 0;
    for (const int a : active) {
      if (a >= 1) ++speech;
      if (a >= 2) ++olap;
    }
    return speech == 0 ? 0.0
                       : static_cast<double>(olap) / static_cast<double>(speech);
  };

  // First s_count turns visit every speaker once, in a seeded shuffle.
  std::vector<int> order(static_cast<size_t>(s_count));
  for (int s = 0; s < s_count; ++s) order[static_cast<size_t>(s)] = s;
  for (int s = s_count - 1; s > 0; --s)
    std::swap(order[static_cast<size_t>(s)],
              order[static_cast<size_t>(rng.below(static_cast<uint64_t>(s) + 1))]);

  double prev_start = 0.0, prev_end = 0.2;
  int prev_spk = -1;
  for (int turn = 0;; ++turn) {
    int spk;
    if (turn < s_count) {
      spk = order[static_cast<size_t>(turn)];
    } else {
      spk = static_cast<int>(rng.below(static_cast<uint64_t>(s_count)));
      if (s_count > 1 && spk == prev_spk) spk = (spk + 1) % s_count;
    }
    const double dur = snap_cs(rng.uniform(1.2, 2.8));
    double start;
    const bool want_overlap = cfg.overlap_ratio > 0.0 && prev_spk >= 0 &&
                              spk != prev_spk &&
                              ratio_now() < cfg.overlap_ratio;
    if (want_overlap) {
      const double prev_dur = prev_end - prev_start;
      const double ov =
          snap_cs(rng.uniform(0.3, 0.7) * std::min(dur, prev_dur));
      start = snap_cs(std::max(0.0, prev_end - ov));
    } else {
      start = snap_cs(prev_end + rng.uniform(0.2, 0.9));
    }
    const double end = snap_cs(std::min(start + dur, cfg.duration_s - 0.1));
    if (end - start < 0.4) break;
    bouts[static_cast<size_t>(spk)].push_back({start, end});
    add_frames({start, end});
    prev_start = start;
    prev_end = std::max(prev_end, end);
    prev_spk = spk;
    if (prev_end >= cfg.duration_s - 1.2) break;
  }
  for (int s = 0; s < s_count; ++s)
    if (bouts[static_cast<size_t>(s)].empty())
      throw_error("session too short to give every speaker a turn; "
                  "increase duration_s");
  return bouts;
}

}  // namespace

void SimConfig::validate() const {
  if (speakers < 1) throw_invalid("speakers must be >= 1");
  if (channels < 1) throw_invalid("channels must be >= 1");
  if (!(duration_s >= 4.0))
    throw_invalid("duration_s must be >= 4 s, got ", duration_s);
  if (overlap_ratio < 0.0 || overlap_ratio >= 1.0)
    throw_invalid("overlap_ratio must lie in [0, 1)");
  if (speakers == 1 && overlap_ratio > 0.0)
    throw_invalid("overlap target ", overlap_ratio,
                  " infeasible with a single speaker");
  if (t60_s < 0.0) throw_invalid("t60_s must be >= 0");
  if (sample_rate < 8000) throw_invalid("sample_rate must be >= 8 kHz");
}

double measured_overlap_ratio(const ActivityMatrix &activity) {
  Eigen::Index speech = 0, olap = 0;
  for (Eigen::Index t = 0; t < activity.num_frames(); ++t) {
    int n = 0;
    for (int s = 0; s < activity.num_speakers(); ++s)
      n += activity.values(s, t) >= 0.5 ? 1 : 0;
    if (n >= 1) ++speech;
    if (n >= 2) ++olap;
  }
  return speech == 0 ? 0.0
                     : static_cast<double>(olap) / static_cast<double>(speech);
}

SimSession simulate_session(const SimConfig &cfg) {
  cfg.validate();
  const int fs = cfg.sample_rate;
  const Eigen::Index samples =
      static_cast<Eigen::Index>(std::llround(cfg.duration_s * fs));

  SimSession session;
  session.session_id = "sim" + std::to_string(cfg.seed);

  SplitMix64 schedule_rng = SplitMix64::fork(cfg.seed, 1);
  const std::vector<std::vector<Bout>> bouts = schedule_bouts(cfg, schedule_rng);

  // Oracle annotation, activity and word list straight from the schedule.
  session.annotation.session = session.session_id;
  session.words.resize(static_cast<size_t>(cfg.speakers));
  std::vector<std::string> speaker_ids;
  static const char *kVocab[] = {"ba", "ko", "ri", "ta", "mu", "sel", "do",
                                 "pa", "ne", "vi", "lo", "ke", "sha", "un",
                                 "ga", "ti"};
  for (int s = 0; s < cfg.speakers; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), "spk%02d", s);
    speaker_ids.emplace_back(name);
    SplitMix64 word_rng = SplitMix64::fork(cfg.seed, 200 + static_cast<uint64_t>(s));
    for (const Bout &b : bouts[static_cast<size_t>(s)]) {
      session.annotation.segments.push_back({name, b.start, b.end});
      double t = snap_cs(b.start + 0.05);
      while (t + 0.25 <= b.end) {
        const double wdur = snap_cs(word_rng.uniform(0.15, 0.3));
        session.words[static_cast<size_t>(s)].push_back(
            {kVocab[word_rng.below(16)], t, snap_cs(t + wdur)});
        t = snap_cs(t + wdur + word_rng.uniform(0.05, 0.15));
      }
    }
  }
  session.annotation.sort_canonical();

  const Eigen::Index act_frames =
      static_cast<Eigen::Index>(std::llround(cfg.duration_s * 100.0));
  session.activity =
      rasterize_annotation(session.annotation, 0.01, cfg.duration_s, speaker_ids);
  if (session.activity.num_frames() < act_frames) {
    // rasterize sizes by max segment end; extend to the nominal duration.
    Eigen::MatrixXd padded =
        Eigen::MatrixXd::Zero(cfg.speakers, act_frames);
    padded.leftCols(session.activity.num_frames()) = session.activity.values;
    session.activity.values = std::move(padded);
  }

  // Dry mono sources: band-filtered noise with speaker-distinct envelopes,
  // 4 Hz syllabic modulation, raised-cosine bout edges.
  std::vector<Eigen::VectorXd> dry(static_cast<size_t>(cfg.speakers));
  for (int s = 0; s < cfg.speakers; ++s) {
    SplitMix64 rng = SplitMix64::fork(cfg.seed, 100 + static_cast<uint64_t>(s));
    // One resonance per octave-ish range. Distinctness is structural: the
    // golden-ratio rotation keeps speakers apart inside each range, and
    // every speaker carries full weight in their own rotating dominant
    // range while the others are attenuated.
    static const double kBandLo[4] = {220.0, 520.0, 1250.0, 2700.0};
    static const double kBandHi[4] = {520.0, 1250.0, 2700.0, 5400.0};
    std::vector<Biquad> bands;
    std::vector<double> gains;
    for (int b = 0; b < 4; ++b) {
      double u = s * 0.6180339887498949 + 0.15 * rng.uniform();
      u -= std::floor(u);
      const double f0 =
          kBandLo[b] * std::pow(kBandHi[b] / kBandLo[b], u);
      bands.emplace_back(f0, rng.uniform(4.0, 8.0), fs);
      gains.push_back(b == s % 4 ? 1.0
                                 : std::pow(10.0, rng.uniform(-0.9, -0.3)));
    }
    const double am_phase = rng.uniform(0.0, 2.0 * kPi);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(samples);
    for (Eigen::Index n = 0; n < samples; ++n) {
      const double white = rng.gaussian();
      double v = 0.0;
      for (int b = 0; b < 4; ++b)
        v += gains[static_cast<size_t>(b)] * bands[static_cast<size_t>(b)].step(white);
      const double tsec = static_cast<double>(n) / fs;
      const double am = 0.55 + 0.45 * std::sin(2.0 * kPi * 4.0 * tsec + am_phase);
      x[n] = v * am;
    }

    // Gate to the speaker's bouts with 10 ms raised-cosine edges.
    Eigen::VectorXd gate = Eigen::VectorXd::Zero(samples);
    const Eigen::Index edge = fs / 100;
    for (const Bout &b : bouts[static_cast<size_t>(s)]) {
      const Eigen::Index a = static_cast<Eigen::Index>(std::llround(b.start * fs));
      const Eigen::Index e = std::min<Eigen::Index>(
          samples, static_cast<Eigen::Index>(std::llround(b.end * fs)));
      for (Eigen::Index n = a; n < e; ++n) {
        double g = 1.0;
        if (n - a < edge)
          g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(n - a) / edge);
        else if (e - 1 - n < edge)
          g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(e - 1 - n) / edge);
        gate[n] = std::max(gate[n], g);
      }
    }
    x = x.cwiseProduct(gate);

    const double active = gate.sum();
    const double rms = active > 0.0 ? std::sqrt(x.squaredNorm() / active) : 0.0;
    const double level = 0.08 * std::pow(10.0, rng.uniform(-0.1, 0.1));
    if (rms > 0.0) x *= level / rms;
    dry[static_cast<size_t>(s)] = std::move(x);
  }

  // Imaging: per-channel gain and fractional delay as a frequency-domain
  // phase ramp over the whole signal, plus an exponential-decay tail when
  // t60 > 0. Channel 0 is the clean reference (unit gain, zero delay).
  const Eigen::Index tail_len =
      cfg.t60_s > 0.0
          ? std::min<Eigen::Index>(samples,
                                   static_cast<Eigen::Index>(1.2 * cfg.t60_s * fs))
          : 0;
  const Eigen::Index fft_len = next_pow2(samples + tail_len + fs / 10);
  RealFft fft(static_cast<int>(fft_len));
  const Eigen::Index fft_bins = fft_len / 2 + 1;

  session.source_images.assign(static_cast<size_t>(cfg.speakers), {});
  session.direct_images.assign(static_cast<size_t>(cfg.speakers), {});

  std::vector<double> time_buf(static_cast<size_t>(fft_len), 0.0);
  std::vector<std::complex<double>> dry_spec(static_cast<size_t>(fft_bins));
  std::vector<std::complex<double>> shaped(static_cast<size_t>(fft_bins));
  std::vector<std::complex<double>> tail_spec(static_cast<size_t>(fft_bins));

  for (int s = 0; s < cfg.speakers; ++s) {
    SplitMix64 rng = SplitMix64::fork(cfg.seed, 300 + static_cast<uint64_t>(s));
    std::fill(time_buf.begin(), time_buf.end(), 0.0);
    for (Eigen::Index n = 0; n < samples; ++n)
      time_buf[static_cast<size_t>(n)] = dry[static_cast<size_t>(s)][n];
    fft.forward(time_buf.data(), dry_spec.data());

    MultiChannelWave &image = session.source_images[static_cast<size_t>(s)];
    MultiChannelWave &direct = session.direct_images[static_cast<size_t>(s)];
    image.sample_rate = fs;
    direct.sample_rate = fs;
    image.samples.resize(cfg.channels, samples);
    direct.samples.resize(cfg.channels, samples);

    for (int c = 0; c < cfg.channels; ++c) {
      const double gain = c == 0 ? 1.0 : rng.uniform(0.75, 1.25);
      const double delay = c == 0 ? 0.0 : rng.uniform(0.0, 0.002);
      const double drr_db =
          std::clamp(8.0 - 15.0 * cfg.t60_s, -2.0, 8.0) + rng.uniform(-1.0, 1.0);

      for (Eigen::Index k = 0; k < fft_bins; ++k) {
        const double omega = 2.0 * kPi * static_cast<double>(k) / fft_len;
        const std::complex<double> ramp(std::cos(omega * delay * fs),
                                        -std::sin(omega * delay * fs));
        shaped[static_cast<size_t>(k)] = dry_spec[static_cast<size_t>(k)] * gain * ramp;
      }
      shaped[static_cast<size_t>(fft_bins) - 1] = 0.0;  // real Nyquist
      fft.inverse(shaped.data(), time_buf.data());
      for (Eigen::Index n = 0; n < samples; ++n)
        direct.samples(c, n) = time_buf[static_cast<size_t>(n)];

      if (tail_len > 0) {
        // Random exponential tail starting 8 ms after the direct path,
        // scaled to the drawn direct-to-reverb ratio.
        std::fill(time_buf.begin(), time_buf.end(), 0.0);
        const Eigen::Index n0 = fs * 8 / 1000;
        double tail_energy = 0.0;
        for (Eigen::Index n = n0; n < tail_len; ++n) {
          const double a =
              std::exp(-6.9078 * static_cast<double>(n) / (fs * cfg.t60_s));
          const double v = a * rng.gaussian();
          time_buf[static_cast<size_t>(n)] = v;
          tail_energy += v * v;
        }
        const double target = gain * gain / std::pow(10.0, drr_db / 10.0);
        const double scale =
            tail_energy > 0.0 ? std::sqrt(target / tail_energy) : 0.0;
        fft.forward(time_buf.data(), tail_spec.data());
        for (Eigen::Index k = 0; k < fft_bins; ++k)
          shaped[static_cast<size_t>(k)] =
              dry_spec[static_cast<size_t>(k)] * tail_spec[static_cast<size_t>(k)] * scale;
        fft.inverse(shaped.data(), time_buf.data());
        for (Eigen::Index n = 0; n < samples; ++n)
          image.samples(c, n) =
              direct.samples(c, n) + time_buf[static_cast<size_t>(n)];
      } else {
        image.samples.row(c) = direct.samples.row(c);
      }
    }
  }

  // Diffuse noise: independent white Gaussian per channel at the target SNR
  // against the summed speech images.
  Eigen::MatrixXd speech = Eigen::MatrixXd::Zero(cfg.channels, samples);
  for (const auto &img : session.source_images) speech += img.samples;
  SplitMix64 noise_rng = SplitMix64::fork(cfg.seed, 400);
  Eigen::MatrixXd noise(cfg.channels, samples);
  for (int c = 0; c < cfg.channels; ++c)
    for (Eigen::Index n = 0; n < samples; ++n)
      noise(c, n) = noise_rng.gaussian();
  const double speech_power = speech.squaredNorm() / static_cast<double>(speech.size());
  const double noise_power = noise.squaredNorm() / static_cast<double>(noise.size());
  const double sigma =
      std::sqrt(speech_power / std::pow(10.0, cfg.snr_db / 10.0) /
                std::max(noise_power, 1e-300));
  noise *= sigma;

  session.noise.sample_rate = fs;
  session.noise.samples = std::move(noise);
  session.mixture.sample_rate = fs;
  session.mixture.samples = speech + session.noise.samples;
  return session;
}

TfMask ideal_ratio_mask(const std::vector<Spectrogram> &sources,
                        const Spectrogram &noise, double eps) {
  if (sources.empty()) throw_invalid("ideal_ratio_mask needs >= 1 source");
  if (!(eps > 0.0)) throw_invalid("eps must be positive");
  noise.validate();
  const Eigen::Index frames = noise.num_frames(), bins = noise.num_bins();
  for (const auto &s : sources) {
    s.validate();
    if (s.num_frames() != frames || s.num_bins() != bins)
      throw_invalid("source spectrogram grid mismatch in ideal_ratio_mask");
  }

  auto channel_mean_power = [](const Spectrogram &s) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s.num_frames(), s.num_bins());
    for (const auto &ch : s.data) p += ch.cwiseAbs2();
    return Eigen::MatrixXd(p / static_cast<double>(s.channels()));
  };

  TfMask mask;
  mask.frame_shift_s = noise.frame_shift_s();
  Eigen::MatrixXd total = channel_mean_power(noise);
  std::vector<Eigen::MatrixXd> powers;
  powers.push_back(total);  // noise class power, appended last below
  for (size_t s = 0; s < sources.size(); ++s) {
    powers.push_back(channel_mean_power(sources[s]));
    total += powers.back();
  }
  total.array() += eps;

  char name[16];
  for (size_t s = 0; s < sources.size(); ++s) {
    std::snprintf(name, sizeof(name), "spk%02u", static_cast<unsigned>(s));
    mask.class_ids.emplace_back(name);
    mask.values.push_back(powers[s + 1].cwiseQuotient(total));
  }
  mask.class_ids.emplace_back(kNoiseClassId);
  mask.values.push_back(powers[0].cwiseQuotient(total));
  return mask;
}

}  // namespace meetsep
