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
//
// Synthetic scene generation: source signals, trajectories, a spherical-head
// binaural renderer (Woodworth ITD + sine-law ILD), an FOA encoder, and the
// dataset generator that ties them to the pretext transforms. Ground truth
// is exact by construction, which is the point: every downstream number can
// be checked against the trajectory that produced the audio.

#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sal/audio_core.hpp"
#include "sal/rng.hpp"
#include "sal/spatial_transforms.hpp"

namespace sal {

enum class SourceKind { kWhiteNoiseBursts, kAmTone, kClickTrain, kMixed };
enum class TrajectoryKind { kStatic, kLinearSweep, kRandomWalk };

inline std::string source_kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::kWhiteNoiseBursts: return "white_noise_bursts";
    case SourceKind::kAmTone: return "am_tone";
    case SourceKind::kClickTrain: return "click_train";
    case SourceKind::kMixed: return "mixed";
  }
  return "?";
}

inline SourceKind source_kind_from_name(const std::string& s) {
  if (s == "white_noise_bursts") return SourceKind::kWhiteNoiseBursts;
  if (s == "am_tone") return SourceKind::kAmTone;
  if (s == "click_train") return SourceKind::kClickTrain;
  if (s == "mixed") return SourceKind::kMixed;
  throw std::invalid_argument("unknown source kind: " + s);
}

inline std::string trajectory_kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kStatic: return "static";
    case TrajectoryKind::kLinearSweep: return "linear_sweep";
    case TrajectoryKind::kRandomWalk: return "random_walk";
  }
  return "?";
}

inline TrajectoryKind trajectory_kind_from_name(const std::string& s) {
  if (s == "static") return TrajectoryKind::kStatic;
  if (s == "linear_sweep") return TrajectoryKind::kLinearSweep;
  if (s == "random_walk") return TrajectoryKind::kRandomWalk;
  throw std::invalid_argument("unknown trajectory kind: " + s);
}

struct SceneParams {
  double duration_s = 3.0;
  SourceKind source_kind = SourceKind::kWhiteNoiseBursts;
  TrajectoryKind trajectory_kind = TrajectoryKind::kStatic;
  // Diffuse-noise SNR; +inf renders clean scenes.
  double snr_db = std::numeric_limits<double>::infinity();
  double head_radius_m = 0.0875;
  double speed_of_sound_mps = 343.0;
  double ild_max_db = 10.0;
  // Gain-only rendering when false (used by the upmix oracle analysis).
  bool itd_enabled = true;
  int sample_rate_hz = kDefaultSampleRate;
  // Reserved hook; measured-HRTF rendering is not implemented.
  std::string hrtf_path;

  void validate() const {
    if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");
    if (!(snr_db >= 0.0))  // +inf passes
      throw std::invalid_argument("snr_db must be >= 0 or infinite");
    if (head_radius_m <= 0.0)
      throw std::invalid_argument("head radius must be positive");
    if (speed_of_sound_mps <= 0.0)
      throw std::invalid_argument("speed of sound must be positive");
    if (sample_rate_hz != kDefaultSampleRate)
      throw std::invalid_argument("only 16 kHz scenes are supported");
  }

  bool clean() const { return std::isinf(snr_db); }
};

// Woodworth spherical-head ITD: tau(phi) = (r/c) * (phi + sin phi), odd and
// increasing on [-pi/2, pi/2]. Positive for sources on the right.
inline double woodworth_itd_s(double azimuth_rad, double head_radius_m,
                              double speed_of_sound_mps) {
  return head_radius_m / speed_of_sound_mps *
         (azimuth_rad + std::sin(azimuth_rad));
}

inline constexpr double kTrajectoryRateHz = 6.0;

// Azimuth grid on the layout's range: [-pi/2, pi/2] lateral (stereo),
// [-pi, pi) full circle (FOA).
inline void azimuth_range(Layout layout, double* lo, double* hi) {
  if (layout == Layout::kFoa) {
    *lo = -kPi;
    *hi = kPi;
  } else {
    *lo = -kPi / 2.0;
    *hi = kPi / 2.0;
  }
}

// Samples a trajectory on the 6 Hz grid covering [0, duration]. Elevation is
// zero for all v1 scenes.
inline SourceTrajectory sample_trajectory(Rng& rng, const SceneParams& params,
                                          Layout layout) {
  params.validate();
  double lo, hi;
  azimuth_range(layout, &lo, &hi);
  int n = static_cast<int>(std::floor(params.duration_s * kTrajectoryRateHz +
                                      1e-9)) + 1;
  SourceTrajectory traj;
  traj.times_s.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    traj.times_s[static_cast<std::size_t>(i)] = i / kTrajectoryRateHz;
  if (traj.times_s.back() < params.duration_s - 1e-9) {
    traj.times_s.push_back(params.duration_s);
    ++n;
  }
  traj.azimuth_rad.resize(static_cast<std::size_t>(n));
  traj.elevation_rad.assign(static_cast<std::size_t>(n), 0.0);

  switch (params.trajectory_kind) {
    case TrajectoryKind::kStatic: {
      double a = rng.uniform(lo, hi);
      for (double& v : traj.azimuth_rad) v = a;
      break;
    }
    case TrajectoryKind::kLinearSweep: {
      double a = rng.uniform(lo, hi);
      double b = rng.uniform(lo, hi);
      for (int i = 0; i < n; ++i) {
        double u = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        traj.azimuth_rad[static_cast<std::size_t>(i)] = a + (b - a) * u;
      }
      break;
    }
    case TrajectoryKind::kRandomWalk: {
      const double sigma = 5.0 * kPi / 180.0;
      const double step_max = 3.0 * sigma;
      double a = rng.uniform(lo, hi);
      for (int i = 0; i < n; ++i) {
        traj.azimuth_rad[static_cast<std::size_t>(i)] = a;
        double step = std::clamp(rng.normal(0.0, sigma), -step_max, step_max);
        a = std::clamp(a + step, lo, hi);
      }
      break;
    }
  }
  return traj;
}

namespace detail {

inline void apply_ramps(std::vector<double>& s, std::size_t start,
                        std::size_t len, int ramp_samples) {
  for (int i = 0; i < ramp_samples && static_cast<std::size_t>(i) < len; ++i) {
    double g = 0.5 - 0.5 * std::cos(kPi * i / ramp_samples);
    s[start + static_cast<std::size_t>(i)] *= g;
    s[start + len - 1 - static_cast<std::size_t>(i)] *= g;
  }
}

}  // namespace detail

// Mono test signals, peak-normalized to 0.5.
inline std::vector<double> sample_source_signal(Rng& rng, SourceKind kind,
                                                double duration_s,
                                                int sample_rate_hz = kDefaultSampleRate) {
  std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::vector<double> s(n, 0.0);
  if (kind == SourceKind::kMixed) {
    SourceKind kinds[3] = {SourceKind::kWhiteNoiseBursts, SourceKind::kAmTone,
                           SourceKind::kClickTrain};
    kind = kinds[rng.below(3)];
  }
  switch (kind) {
    case SourceKind::kWhiteNoiseBursts: {
      double duty = rng.uniform(0.3, 0.7);
      int ramp = sample_rate_hz / 100;  // 10 ms
      std::size_t pos = 0;
      while (pos < n) {
        std::size_t burst = static_cast<std::size_t>(
            rng.uniform(0.05, 0.3) * sample_rate_hz);
        std::size_t len = std::min(burst, n - pos);
        for (std::size_t i = 0; i < len; ++i) s[pos + i] = rng.normal();
        detail::apply_ramps(s, pos, len, ramp);
        std::size_t gap = static_cast<std::size_t>(
            static_cast<double>(burst) * (1.0 - duty) / duty);
        pos += burst + gap;
      }
      break;
    }
    case SourceKind::kAmTone: {
      double carrier = rng.uniform(300.0, 3000.0);
      double am = rng.uniform(2.0, 8.0);
      double phase = rng.uniform(0.0, 2.0 * kPi);
      for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / sample_rate_hz;
        double env = 0.5 - 0.5 * std::cos(2.0 * kPi * am * t);
        s[i] = std::sin(2.0 * kPi * carrier * t + phase) * env;
      }
      break;
    }
    case SourceKind::kClickTrain: {
      double rate = rng.uniform(8.0, 20.0);
      double interval = 1.0 / rate;
      double t = rng.uniform(0.0, interval);
      int decay = sample_rate_hz / 500;  // 2 ms tail
      while (t < duration_s) {
        std::size_t at = static_cast<std::size_t>(t * sample_rate_hz);
        for (int i = 0; i < decay && at + static_cast<std::size_t>(i) < n; ++i)
          s[at + static_cast<std::size_t>(i)] +=
              std::exp(-3.0 * i / decay);
        t += interval;
      }
      break;
    }
    case SourceKind::kMixed:
      break;  // resolved above
  }
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0)
    for (double& v : s) v *= 0.5 / peak;
  return s;
}

// Adds independent white noise per channel at the given SNR relative to the
// mean signal power across channels. No-op for clean scenes.
inline void add_diffuse_noise(AudioClip& clip, double snr_db, Rng& rng) {
  if (std::isinf(snr_db)) return;
  double power = 0.0;
  std::size_t count = 0;
  for (const auto& ch : clip.samples) {
    for (double v : ch) power += v * v;
    count += ch.size();
  }
  if (count == 0) return;
  power /= static_cast<double>(count);
  double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  for (auto& ch : clip.samples)
    for (double& v : ch) v += sigma * rng.normal();
}

// Renders a mono source to stereo with the spherical-head gain/delay model:
//   - ITD: Woodworth tau(phi) split as -/+ tau/2 fractional delays around the
//     source clock (linear-interpolation delay line); the right ear leads for
//     positive azimuth. Rendering is offline, so the leading ear simply taps
//     ahead and no causal base delay is needed; a source dead ahead produces
//     sample-identical channels.
//   - ILD: frequency-independent gains g_r = 10^(+ild_max sin(phi) / 40),
//     g_l = 10^(-ild_max sin(phi) / 40), i.e. an energy ratio of
//     ild_max * sin(phi) dB.
inline AudioClip render_binaural(const std::vector<double>& source,
                                 const SourceTrajectory& traj,
                                 const SceneParams& params, Rng& rng) {
  params.validate();
  if (!params.hrtf_path.empty())
    throw std::invalid_argument("HRTF rendering is not implemented");
  std::size_t n = source.size();
  double last_t = n == 0 ? 0.0 : static_cast<double>(n - 1) / params.sample_rate_hz;
  if (!traj.covers(0.0, last_t))
    throw std::invalid_argument("trajectory does not cover the clip");
  for (double a : traj.azimuth_rad)
    if (std::fabs(a) > kPi / 2.0 + 1e-9)
      throw std::invalid_argument("stereo azimuth outside [-pi/2, pi/2]");

  AudioClip clip = AudioClip::zeros(Layout::kStereo, n, params.sample_rate_hz);
  auto tap = [&](double pos) -> double {
    if (pos < 0.0) return 0.0;
    double fl = std::floor(pos);
    std::size_t i0 = static_cast<std::size_t>(fl);
    if (i0 >= n) return 0.0;
    double frac = pos - fl;
    double a = source[i0];
    double b = i0 + 1 < n ? source[i0 + 1] : 0.0;
    return a * (1.0 - frac) + b * frac;
  };
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / params.sample_rate_hz;
    double phi = traj.azimuth_at(t);
    double sin_phi = std::sin(phi);
    double gl = std::pow(10.0, -params.ild_max_db * sin_phi / 40.0);
    double gr = std::pow(10.0, params.ild_max_db * sin_phi / 40.0);
    if (params.itd_enabled) {
      double tau = woodworth_itd_s(phi, params.head_radius_m,
                                   params.speed_of_sound_mps);
      double half = tau / 2.0 * params.sample_rate_hz;
      clip.samples[0][i] = gl * tap(static_cast<double>(i) - half);
      clip.samples[1][i] = gr * tap(static_cast<double>(i) + half);
    } else {
      clip.samples[0][i] = gl * source[i];
      clip.samples[1][i] = gr * source[i];
    }
  }
  add_diffuse_noise(clip, params.snr_db, rng);
  return clip;
}

// First-order ambisonic encoding, ACN order (w, y, z, x) with SN3D scaling:
//   w = s, y = s sin(phi) cos(el), z = s sin(el), x = s cos(phi) cos(el).
// Elevation is zero in v1 scenes, so z stays silent.
inline AudioClip encode_foa(const std::vector<double>& source,
                            const SourceTrajectory& traj,
                            int sample_rate_hz = kDefaultSampleRate) {
  std::size_t n = source.size();
  double last_t = n == 0 ? 0.0 : static_cast<double>(n - 1) / sample_rate_hz;
  if (!traj.covers(0.0, last_t))
    throw std::invalid_argument("trajectory does not cover the clip");
  AudioClip clip = AudioClip::zeros(Layout::kFoa, n, sample_rate_hz);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sample_rate_hz;
    double phi = traj.azimuth_at(t);
    double el = traj.elevation_at(t);
    double s = source[i];
    double cos_el = std::cos(el);
    clip.samples[0][i] = s;
    clip.samples[1][i] = s * std::sin(phi) * cos_el;
    clip.samples[2][i] = s * std::sin(el);
    clip.samples[3][i] = s * std::cos(phi) * cos_el;
  }
  return clip;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

struct DatasetConfig {
  SceneParams scene;
  int count = 100;
  PretextMode mode = PretextMode::kFlip;
  std::uint64_t master_seed = 1;
  PretextOptions pretext;

  void validate() const {
    scene.validate();
    if (count <= 0) throw std::invalid_argument("count must be positive");
  }
};

inline nlohmann::json to_json(const SceneParams& p) {
  nlohmann::json j{{"duration_s", p.duration_s},
                   {"source_kind", source_kind_name(p.source_kind)},
                   {"trajectory_kind", trajectory_kind_name(p.trajectory_kind)},
                   {"head_radius_m", p.head_radius_m},
                   {"speed_of_sound_mps", p.speed_of_sound_mps},
                   {"ild_max_db", p.ild_max_db},
                   {"itd_enabled", p.itd_enabled},
                   {"sample_rate_hz", p.sample_rate_hz}};
  if (!p.clean()) j["snr_db"] = p.snr_db;  // omitted = clean
  if (!p.hrtf_path.empty()) j["hrtf_path"] = p.hrtf_path;
  return j;
}

inline SceneParams scene_params_from_json(const nlohmann::json& j) {
  SceneParams p;
  if (j.contains("duration_s")) p.duration_s = j["duration_s"].get<double>();
  if (j.contains("source_kind"))
    p.source_kind = source_kind_from_name(j["source_kind"].get<std::string>());
  if (j.contains("trajectory_kind"))
    p.trajectory_kind =
        trajectory_kind_from_name(j["trajectory_kind"].get<std::string>());
  if (j.contains("snr_db") && j["snr_db"].is_number())
    p.snr_db = j["snr_db"].get<double>();
  if (j.contains("head_radius_m")) p.head_radius_m = j["head_radius_m"].get<double>();
  if (j.contains("speed_of_sound_mps"))
    p.speed_of_sound_mps = j["speed_of_sound_mps"].get<double>();
  if (j.contains("ild_max_db")) p.ild_max_db = j["ild_max_db"].get<double>();
  if (j.contains("itd_enabled")) p.itd_enabled = j["itd_enabled"].get<bool>();
  if (j.contains("sample_rate_hz"))
    p.sample_rate_hz = j["sample_rate_hz"].get<int>();
  if (j.contains("hrtf_path")) p.hrtf_path = j["hrtf_path"].get<std::string>();
  p.validate();
  return p;
}

inline nlohmann::json to_json(const DatasetConfig& c) {
  return nlohmann::json{{"scene", to_json(c.scene)},
                        {"count", c.count},
                        {"mode", pretext_mode_name(c.mode)},
                        {"master_seed", c.master_seed},
                        {"pretext",
                         {{"negative_probability", c.pretext.negative_probability},
                          {"rotation_min_rad", c.pretext.rotation_min_rad},
                          {"rotation_max_rad", c.pretext.rotation_max_rad},
                          {"mirror_augment", c.pretext.mirror_augment},
                          {"mirror_probability", c.pretext.mirror_probability}}}};
}

inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig c;
  if (j.contains("scene")) c.scene = scene_params_from_json(j["scene"]);
  if (j.contains("count")) c.count = j["count"].get<int>();
  if (j.contains("mode"))
    c.mode = pretext_mode_from_name(j["mode"].get<std::string>());
  if (j.contains("master_seed"))
    c.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("pretext")) {
    const auto& p = j["pretext"];
    if (p.contains("negative_probability"))
      c.pretext.negative_probability = p["negative_probability"].get<double>();
    if (p.contains("rotation_min_rad"))
      c.pretext.rotation_min_rad = p["rotation_min_rad"].get<double>();
    if (p.contains("rotation_max_rad"))
      c.pretext.rotation_max_rad = p["rotation_max_rad"].get<double>();
    if (p.contains("mirror_augment"))
      c.pretext.mirror_augment = p["mirror_augment"].get<bool>();
    if (p.contains("mirror_probability"))
      c.pretext.mirror_probability = p["mirror_probability"].get<double>();
  }
  c.validate();
  return c;
}

// Renders one scene (before the pretext transform) from its entry seed.
inline SceneData render_scene(const DatasetConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  Layout layout =
      config.mode == PretextMode::kFlip ? Layout::kStereo : Layout::kFoa;
  SourceTrajectory traj = sample_trajectory(rng, config.scene, layout);
  std::vector<double> source =
      sample_source_signal(rng, config.scene.source_kind,
                           config.scene.duration_s, config.scene.sample_rate_hz);
  SceneData scene;
  scene.trajectory = traj;
  if (layout == Layout::kStereo) {
    scene.audio = render_binaural(source, traj, config.scene, rng);
  } else {
    scene.audio = encode_foa(source, traj, config.scene.sample_rate_hz);
    add_diffuse_noise(scene.audio, config.scene.snr_db, rng);
  }
  return scene;
}

// Generates `count` labeled scenes under out_dir with an 80-10-10
// train/val/test split, writing float32 WAVs, trajectory JSONs, and the
// manifest. Fully deterministic: each entry draws from
// derive_seed(master_seed, id), so a rerun is byte-identical.
inline DatasetManifest generate_dataset(const DatasetConfig& config,
                                        const std::string& out_dir) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "audio");
  fs::create_directories(fs::path(out_dir) / "traj");

  int n = config.count;
  int n_train = static_cast<int>(std::llround(n * 0.8));
  int n_val = static_cast<int>(std::llround(n * 0.1));

  DatasetManifest manifest;
  manifest.root_dir = out_dir;
  for (int i = 0; i < n; ++i) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "scene_%06d", i);
    std::string id(idbuf);
    std::uint64_t seed = derive_seed(config.master_seed, id);

    SceneData scene = render_scene(config, seed);
    Rng rng(derive_seed(seed, "pretext"));
    TrainingExample ex = make_training_example(scene.trajectory, scene.audio,
                                               config.mode, rng, config.pretext);

    ManifestEntry entry;
    entry.id = id;
    entry.audio_path = "audio/" + id + ".wav";
    entry.trajectory_path = "traj/" + id + ".json";
    entry.label = ex.label;
    entry.scene_seed = seed;
    entry.split = i < n_train            ? Split::kTrain
                  : i < n_train + n_val ? Split::kVal
                                        : Split::kTest;
    write_wav(ex.audio, manifest.resolve(entry.audio_path), WavEncoding::kFloat32);
    write_trajectory(ex.trajectory, manifest.resolve(entry.trajectory_path));
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

}  // namespace sal
