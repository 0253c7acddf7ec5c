// Copyright 2026 The SAL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <numeric>

#include "doctest.h"
#include "sal/dsp.hpp"
#include "sal/metrics.hpp"
#include "sal/synth_scenes.hpp"
#include "test_util.hpp"

using namespace sal;
using sal_test::TempDir;

TEST_CASE("static trajectory holds one azimuth on the 6 Hz grid") {
  Rng rng(1);
  SceneParams params;
  SourceTrajectory traj = sample_trajectory(rng, params, Layout::kStereo);
  REQUIRE(traj.size() == 19);  // 3 s at 6 Hz, inclusive of both ends
  for (double a : traj.azimuth_rad) {
    CHECK(a == traj.azimuth_rad[0]);
    CHECK(std::fabs(a) <= kPi / 2.0);
  }
  for (double e : traj.elevation_rad) CHECK(e == 0.0);
}

TEST_CASE("linear sweep is linear with exact endpoints on 19 grid points") {
  Rng rng(2);
  SceneParams params;
  params.trajectory_kind = TrajectoryKind::kLinearSweep;
  SourceTrajectory traj = sample_trajectory(rng, params, Layout::kStereo);
  REQUIRE(traj.size() == 19);
  double a = traj.azimuth_rad.front();
  double b = traj.azimuth_rad.back();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    double u = static_cast<double>(i) / 18.0;
    CHECK(traj.azimuth_rad[i] == doctest::Approx(a + (b - a) * u).epsilon(1e-12));
  }
}

TEST_CASE("random walk steps stay within the clamp bound") {
  Rng rng(3);
  SceneParams params;
  params.trajectory_kind = TrajectoryKind::kRandomWalk;
  const double bound = 15.0 * kPi / 180.0;  // 3 sigma at 5 deg/step
  for (int trial = 0; trial < 20; ++trial) {
    SourceTrajectory traj = sample_trajectory(rng, params, Layout::kStereo);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      CHECK(std::fabs(traj.azimuth_rad[i] - traj.azimuth_rad[i - 1]) <=
            bound + 1e-12);
      CHECK(std::fabs(traj.azimuth_rad[i]) <= kPi / 2.0);
    }
  }
}

TEST_CASE("foa trajectories cover the full circle") {
  Rng rng(4);
  SceneParams params;
  bool beyond_lateral = false;
  for (int trial = 0; trial < 64; ++trial) {
    SourceTrajectory traj = sample_trajectory(rng, params, Layout::kFoa);
    for (double a : traj.azimuth_rad) {
      CHECK(a >= -kPi);
      CHECK(a < kPi);
      if (std::fabs(a) > kPi / 2.0) beyond_lateral = true;
    }
  }
  CHECK(beyond_lateral);
}

TEST_CASE("source signals are peak-normalized to 0.5") {
  Rng rng(5);
  for (SourceKind kind : {SourceKind::kWhiteNoiseBursts, SourceKind::kAmTone,
                          SourceKind::kClickTrain, SourceKind::kMixed}) {
    std::vector<double> s = sample_source_signal(rng, kind, 3.0);
    REQUIRE(s.size() == 48000);
    double peak = 0.0;
    for (double v : s) peak = std::max(peak, std::fabs(v));
    CHECK(peak == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("click train count matches the drawn rate within one click") {
  const std::uint64_t seed = 77;
  std::vector<double> s;
  {
    Rng rng(seed);
    s = sample_source_signal(rng, SourceKind::kClickTrain, 3.0);
  }
  // Replay the generator's first draws to recover the rate and phase.
  Rng replay(seed);
  double rate = replay.uniform(8.0, 20.0);
  int onsets = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] - s[i - 1] > 0.3) ++onsets;
  CHECK(std::fabs(onsets - rate * 3.0) <= 1.0);
}

TEST_CASE("different seeds give different signals") {
  Rng a(10), b(11);
  std::vector<double> sa = sample_source_signal(a, SourceKind::kWhiteNoiseBursts, 1.0);
  std::vector<double> sb = sample_source_signal(b, SourceKind::kWhiteNoiseBursts, 1.0);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(sa[i] - sb[i]));
  CHECK(max_diff > 0.01);
}

TEST_CASE("renderer: a source dead ahead gives identical channels") {
  Rng rng(20);
  SceneParams params;
  auto traj = sal_test::static_trajectory(0.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  CHECK(clip.samples[0] == clip.samples[1]);
}

TEST_CASE("renderer: Woodworth delay at +90 degrees lands on 10-11 samples") {
  // tau(pi/2) = (0.0875 / 343) (pi/2 + 1) = 655.9 us = 10.49 samples at 16 kHz.
  SceneParams params;
  double tau = woodworth_itd_s(kPi / 2.0, params.head_radius_m,
                               params.speed_of_sound_mps);
  CHECK(tau == doctest::Approx(655.9e-6).epsilon(1e-3));

  Rng rng(21);
  auto traj = sal_test::static_trajectory(kPi / 2.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  CueSequence cues = compute_stereo_cues(clip);
  std::vector<double> lags;
  for (std::size_t i = 0; i < cues.size(); ++i)
    if (!cues.itd_undefined[i])
      lags.push_back(cues.itd_s[i] * params.sample_rate_hz);
  std::sort(lags.begin(), lags.end());
  double median = lags[lags.size() / 2];
  CHECK((median == 10.0 || median == 11.0));
}

TEST_CASE("renderer: level difference at +90 degrees is +10 dB within 0.1") {
  Rng rng(22);
  SceneParams params;
  StftParams sp;
  auto traj = sal_test::static_trajectory(kPi / 2.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  CueSequence cues = compute_stereo_cues(clip);
  std::vector<double> ilds;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    // Skip the burst gaps: a silent frame has no level cue.
    std::span<const double> lf(clip.samples[0].data() + i * sp.hop,
                               static_cast<std::size_t>(sp.window_len));
    std::span<const double> rf(clip.samples[1].data() + i * sp.hop,
                               static_cast<std::size_t>(sp.window_len));
    if (frame_energy(lf) + frame_energy(rf) < 1e-3) continue;
    ilds.push_back(cues.ild_db[i]);
  }
  REQUIRE(ilds.size() > 20);
  std::sort(ilds.begin(), ilds.end());
  CHECK(ilds[ilds.size() / 2] == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("renderer rejects uncovered trajectories and bad azimuths") {
  Rng rng(23);
  SceneParams params;
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 3.0);
  auto short_traj = sal_test::static_trajectory(0.0, 1.0);
  CHECK_THROWS_AS(render_binaural(src, short_traj, params, rng),
                  std::invalid_argument);
  auto wide = sal_test::static_trajectory(2.5);  // outside [-pi/2, pi/2]
  CHECK_THROWS_AS(render_binaural(src, wide, params, rng), std::invalid_argument);
}

TEST_CASE("renderer hrtf hook stays unimplemented") {
  Rng rng(24);
  SceneParams params;
  params.hrtf_path = "kemar.sofa";
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 1.0);
  CHECK_THROWS_AS(render_binaural(src, sal_test::static_trajectory(0.0, 1.0),
                                  params, rng),
                  std::invalid_argument);
}

TEST_CASE("foa encoder closed forms") {
  Rng rng(25);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 1.0);

  SUBCASE("front: y silent, x == w == s") {
    AudioClip clip = encode_foa(src, sal_test::static_trajectory(0.0, 1.0));
    for (std::size_t i = 0; i < src.size(); ++i) {
      CHECK(clip.samples[0][i] == src[i]);
      CHECK(clip.samples[1][i] == 0.0);
      CHECK(clip.samples[2][i] == 0.0);
      CHECK(clip.samples[3][i] == src[i]);
    }
  }
  SUBCASE("left (+90): x silent, y == s") {
    AudioClip clip = encode_foa(src, sal_test::static_trajectory(kPi / 2.0, 1.0));
    for (std::size_t i = 0; i < src.size(); ++i) {
      CHECK(std::fabs(clip.samples[3][i]) <= 1e-12);
      CHECK(clip.samples[1][i] == doctest::Approx(src[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoding at phi then rotating by theta equals encoding at phi+theta") {
  Rng rng(26);
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 1.0);
  const double phi = 20.0 * kPi / 180.0;
  const double theta = 50.0 * kPi / 180.0;
  AudioClip rotated = rotate_foa(encode_foa(src, sal_test::static_trajectory(phi, 1.0)),
                                 theta);
  AudioClip direct = encode_foa(src, sal_test::static_trajectory(phi + theta, 1.0));
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < src.size(); ++i)
      CHECK(std::fabs(rotated.samples[c][i] - direct.samples[c][i]) <= 1e-9);
}

TEST_CASE("generate_dataset splits 100 entries 80-10-10") {
  TempDir dir;
  DatasetConfig config;
  config.count = 100;
  config.scene.duration_s = 0.5;  // keep the files small
  DatasetManifest manifest = generate_dataset(config, dir.str());
  CHECK(manifest.split_entries(Split::kTrain).size() == 80);
  CHECK(manifest.split_entries(Split::kVal).size() == 10);
  CHECK(manifest.split_entries(Split::kTest).size() == 10);
  // Files exist and reload cleanly.
  DatasetManifest back = load_manifest(dir.file("manifest.json"));
  CHECK(back.entries.size() == 100);
}

TEST_CASE("generate_dataset is byte-identical under the same master seed") {
  TempDir dir_a, dir_b, dir_c;
  DatasetConfig config;
  config.count = 24;
  config.scene.duration_s = 0.5;
  config.master_seed = 99;
  generate_dataset(config, dir_a.str());
  generate_dataset(config, dir_b.str());
  CHECK(sal_test::directory_hash(dir_a.str()) ==
        sal_test::directory_hash(dir_b.str()));
  config.master_seed = 100;
  generate_dataset(config, dir_c.str());
  CHECK(sal_test::directory_hash(dir_a.str()) !=
        sal_test::directory_hash(dir_c.str()));
}

TEST_CASE("generated label balance stays near one half") {
  // Label draws replicate the generator's per-entry seeding.
  DatasetConfig config;
  config.master_seed = 1;
  int negatives = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "scene_%06d", i);
    std::uint64_t seed = derive_seed(config.master_seed, idbuf);
    Rng rng(derive_seed(seed, "pretext"));
    if (rng.bernoulli(config.pretext.negative_probability)) ++negatives;
  }
  double frac = static_cast<double>(negatives) / n;
  CHECK(frac >= 0.46);
  CHECK(frac <= 0.54);
}

TEST_CASE("clean scenes: led sign tracks the azimuth sign") {
  SceneParams params;
  for (int trial = 0; trial < 12; ++trial) {
    Rng rng(300 + static_cast<std::uint64_t>(trial));
    SourceTrajectory traj = sample_trajectory(rng, params, Layout::kStereo);
    if (std::fabs(traj.azimuth_rad[0]) < 5.0 * kPi / 180.0) continue;
    auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
    AudioClip clip = render_binaural(src, traj, params, rng);
    CueSequence cues = compute_stereo_cues(clip);
    double mean_led =
        std::accumulate(cues.led.begin(), cues.led.end(), 0.0) /
        static_cast<double>(cues.led.size());
    CHECK(mean_led * traj.azimuth_rad[0] > 0.0);
  }
}

TEST_CASE("clean sweeps: per-frame led correlates with true azimuth") {
  SceneParams params;
  StftParams stft_params;
  std::vector<double> leds, azimuths;
  for (int trial = 0; trial < 8; ++trial) {
    Rng rng(400 + static_cast<std::uint64_t>(trial));
    auto traj = sal_test::sweep_trajectory(-60.0 * kPi / 180.0, 60.0 * kPi / 180.0);
    if (trial % 2) std::reverse(traj.azimuth_rad.begin(), traj.azimuth_rad.end());
    auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
    AudioClip clip = render_binaural(src, traj, params, rng);
    CueSequence cues = compute_stereo_cues(clip);
    for (std::size_t f = 0; f < cues.size(); ++f) {
      // Silent gap frames carry no level cue; keep energetic frames only.
      std::span<const double> lf(clip.samples[0].data() + f * stft_params.hop,
                                 static_cast<std::size_t>(stft_params.window_len));
      std::span<const double> rf(clip.samples[1].data() + f * stft_params.hop,
                                 static_cast<std::size_t>(stft_params.window_len));
      if (frame_energy(lf) + frame_energy(rf) < 1e-3) continue;
      leds.push_back(cues.led[f]);
      azimuths.push_back(traj.azimuth_at(
          stft_params.frame_center_s(static_cast<int>(f), params.sample_rate_hz)));
    }
  }
  auto rho = spearman(leds, azimuths);
  REQUIRE(rho.has_value());
  CHECK(*rho >= 0.9);
}

TEST_CASE("foa intensity direction tracks the true azimuth within 2 degrees") {
  StftParams stft_params;
  for (int trial = 0; trial < 8; ++trial) {
    Rng rng(500 + static_cast<std::uint64_t>(trial));
    SceneParams params;
    SourceTrajectory traj = sample_trajectory(rng, params, Layout::kFoa);
    auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
    AudioClip clip = encode_foa(src, traj);
    CueSequence cues = intensity_vector(stft(clip, stft_params));
    for (std::size_t f = 0; f < cues.ix.size(); ++f) {
      if (cues.energy[f] < 1e-4) continue;
      double est = std::atan2(cues.iy[f], cues.ix[f]) * 180.0 / kPi;
      CHECK(circular_error_deg(est, traj.azimuth_rad[0] * 180.0 / kPi) <= 2.0);
    }
  }
}

TEST_CASE("rotating the audio offsets the intensity DOA by theta") {
  Rng rng(600);
  const double phi = 15.0 * kPi / 180.0;
  const double theta = 70.0 * kPi / 180.0;
  auto traj = sal_test::static_trajectory(phi, 1.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 1.0);
  AudioClip rotated = rotate_foa(encode_foa(src, traj), theta);
  CueSequence cues = intensity_vector(stft(rotated));
  for (std::size_t f = 0; f < cues.ix.size(); ++f) {
    if (cues.energy[f] < 1e-4) continue;
    double est = std::atan2(cues.iy[f], cues.ix[f]) * 180.0 / kPi;
    CHECK(circular_error_deg(est, (phi + theta) * 180.0 / kPi) <= 2.0);
  }
}

TEST_CASE("scene params validation") {
  SceneParams params;
  CHECK_NOTHROW(params.validate());
  params.snr_db = -3.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = SceneParams();
  params.duration_s = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = SceneParams();
  params.sample_rate_hz = 44100;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("dataset config json round trip") {
  DatasetConfig config;
  config.count = 42;
  config.mode = PretextMode::kRotation;
  config.master_seed = 777;
  config.scene.snr_db = 12.5;
  config.scene.source_kind = SourceKind::kMixed;
  config.pretext.rotation_min_rad = 3.0;
  DatasetConfig back = dataset_config_from_json(to_json(config));
  CHECK(back.count == 42);
  CHECK(back.mode == PretextMode::kRotation);
  CHECK(back.master_seed == 777);
  CHECK(back.scene.snr_db == 12.5);
  CHECK(back.scene.source_kind == SourceKind::kMixed);
  CHECK(back.pretext.rotation_min_rad == 3.0);
  // Clean scenes omit snr_db and stay clean through the round trip.
  config.scene.snr_db = std::numeric_limits<double>::infinity();
  CHECK(dataset_config_from_json(to_json(config)).scene.clean());
}

TEST_CASE("noisy scenes have the requested snr") {
  Rng rng(700);
  SceneParams params;
  params.snr_db = 10.0;
  auto traj = sal_test::static_trajectory(0.3);
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 3.0);
  SceneParams clean = params;
  clean.snr_db = std::numeric_limits<double>::infinity();
  Rng rng_render(701);
  AudioClip quiet = render_binaural(src, traj, clean, rng_render);
  Rng rng_render2(701);
  AudioClip noisy = render_binaural(src, traj, params, rng_render2);
  double sig = 0.0, noise = 0.0;
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < quiet.num_samples(); ++i) {
      sig += quiet.samples[c][i] * quiet.samples[c][i];
      double d = noisy.samples[c][i] - quiet.samples[c][i];
      noise += d * d;
    }
  double snr = 10.0 * std::log10(sig / noise);
  CHECK(snr == doctest::Approx(10.0).epsilon(0.03));
}
