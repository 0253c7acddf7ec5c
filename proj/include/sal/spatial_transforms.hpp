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
// Label-generating audio transforms (channel flip, FOA z-rotation) and
// label-preserving augmentations (joint mirror / shared rotation).

#pragma once

#include <cmath>
#include <stdexcept>

#include "sal/audio_core.hpp"
#include "sal/rng.hpp"

namespace sal {

// Rotation about the z-axis, normalized to [0, 2*pi).
class RotationAngle {
 public:
  explicit RotationAngle(double radians) : theta_(wrap_two_pi(radians)) {}
  double radians() const { return theta_; }
  double degrees() const { return theta_ * 180.0 / kPi; }

 private:
  double theta_;
};

// Swaps the left and right channels sample-exactly. An involution.
inline AudioClip flip_stereo(const AudioClip& clip) {
  if (clip.layout != Layout::kStereo)
    throw std::invalid_argument("flip_stereo requires a stereo clip");
  AudioClip out = clip;
  std::swap(out.samples[0], out.samples[1]);
  return out;
}

// Rotates an FOA clip about the z-axis:
//   y' = x sin(theta) + y cos(theta)
//   x' = x cos(theta) - y sin(theta)
// w and z are copied bit-identically. Rotating an encoded plane wave at
// azimuth phi yields the plane wave at phi + theta.
inline AudioClip rotate_foa(const AudioClip& clip, RotationAngle theta) {
  if (clip.layout != Layout::kFoa)
    throw std::invalid_argument("rotate_foa requires an FOA clip");
  double s = std::sin(theta.radians());
  double c = std::cos(theta.radians());
  AudioClip out = clip;
  const auto& y = clip.samples[1];
  const auto& x = clip.samples[3];
  auto& yo = out.samples[1];
  auto& xo = out.samples[3];
  for (std::size_t i = 0; i < y.size(); ++i) {
    yo[i] = x[i] * s + y[i] * c;
    xo[i] = x[i] * c - y[i] * s;
  }
  return out;
}

inline AudioClip rotate_foa(const AudioClip& clip, double theta_rad) {
  return rotate_foa(clip, RotationAngle(theta_rad));
}

// Mono downmix: (l + r) / 2 per sample.
inline AudioClip downmix_to_mono(const AudioClip& clip) {
  if (clip.layout != Layout::kStereo)
    throw std::invalid_argument("downmix_to_mono requires a stereo clip");
  AudioClip out = AudioClip::zeros(Layout::kMono, clip.num_samples(),
                                   clip.sample_rate_hz);
  for (std::size_t i = 0; i < clip.num_samples(); ++i)
    out.samples[0][i] = 0.5 * (clip.samples[0][i] + clip.samples[1][i]);
  return out;
}

// Sample-wise sum with no renormalization. The caller can inspect *peak_out
// to warn when the mixture exceeds full scale.
inline AudioClip mix_clips(const AudioClip& a, const AudioClip& b,
                           double* peak_out = nullptr) {
  if (a.layout != b.layout || a.sample_rate_hz != b.sample_rate_hz ||
      a.num_samples() != b.num_samples())
    throw std::invalid_argument("mix_clips requires matching shape and rate");
  AudioClip out = a;
  double peak = 0.0;
  for (int c = 0; c < a.num_channels(); ++c)
    for (std::size_t i = 0; i < a.num_samples(); ++i) {
      double v = a.samples[static_cast<std::size_t>(c)][i] +
                 b.samples[static_cast<std::size_t>(c)][i];
      out.samples[static_cast<std::size_t>(c)][i] = v;
      peak = std::max(peak, std::fabs(v));
    }
  if (peak_out) *peak_out = peak;
  return out;
}

// Reflects the trajectory about the front axis: phi -> -phi (wrapped back
// into [-pi, pi) for full-circle tracks).
inline SourceTrajectory mirror_trajectory(const SourceTrajectory& traj) {
  SourceTrajectory out = traj;
  for (double& a : out.azimuth_rad) a = wrap_pi(-a);
  return out;
}

// Shifts every azimuth by theta (full-circle tracks).
inline SourceTrajectory rotate_trajectory(const SourceTrajectory& traj,
                                          double theta_rad) {
  SourceTrajectory out = traj;
  for (double& a : out.azimuth_rad) a = wrap_pi(a + theta_rad);
  return out;
}

enum class PretextMode { kFlip, kRotation };

inline std::string pretext_mode_name(PretextMode mode) {
  return mode == PretextMode::kFlip ? "flip" : "rotation";
}

inline PretextMode pretext_mode_from_name(const std::string& s) {
  if (s == "flip") return PretextMode::kFlip;
  if (s == "rotation") return PretextMode::kRotation;
  throw std::invalid_argument("unknown mode: " + s);
}

struct PretextOptions {
  double negative_probability = 0.5;
  // Near-antipodal rotation range for negative FOA examples.
  double rotation_min_rad = 0.95 * kPi;
  double rotation_max_rad = 1.05 * kPi;
  // Joint mirror augmentation: flip both channels and the trajectory
  // (stereo), or rotate both audio and trajectory by a shared angle (FOA).
  // Label-preserving by construction.
  bool mirror_augment = true;
  double mirror_probability = 0.5;
};

struct TrainingExample {
  SourceTrajectory trajectory;
  AudioClip audio;
  AlignmentLabel label;
};

// Turns an aligned scene into a labeled training example. With probability
// `negative_probability` the audio (only) is transformed and y = 0; otherwise
// y = 1. Independently, the joint mirror augmentation may be applied to both
// streams, which leaves the label unchanged. Draw order is fixed so a seeded
// generator reproduces the same example stream.
inline TrainingExample make_training_example(const SourceTrajectory& traj,
                                             const AudioClip& audio,
                                             PretextMode mode, Rng& rng,
                                             const PretextOptions& opts = {}) {
  if (mode == PretextMode::kFlip && audio.layout != Layout::kStereo)
    throw std::invalid_argument("flip mode requires a stereo scene");
  if (mode == PretextMode::kRotation && audio.layout != Layout::kFoa)
    throw std::invalid_argument("rotation mode requires an FOA scene");

  TrainingExample ex{traj, audio, AlignmentLabel::make_aligned()};
  bool negative = rng.bernoulli(opts.negative_probability);
  if (negative) {
    if (mode == PretextMode::kFlip) {
      ex.audio = flip_stereo(ex.audio);
      ex.label = AlignmentLabel::flipped();
    } else {
      double theta = rng.uniform(opts.rotation_min_rad, opts.rotation_max_rad);
      ex.audio = rotate_foa(ex.audio, theta);
      ex.label = AlignmentLabel::rotated(theta);
    }
  }
  if (opts.mirror_augment && rng.bernoulli(opts.mirror_probability)) {
    if (mode == PretextMode::kFlip) {
      ex.audio = flip_stereo(ex.audio);
      ex.trajectory = mirror_trajectory(ex.trajectory);
    } else {
      double shared = rng.uniform(0.0, 2.0 * kPi);
      ex.audio = rotate_foa(ex.audio, shared);
      ex.trajectory = rotate_trajectory(ex.trajectory, shared);
    }
  }
  return ex;
}

}  // namespace sal
