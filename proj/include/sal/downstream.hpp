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
// Downstream evaluations on top of the alignment model and the synthetic
// renderer: direction-of-arrival estimation, one-shot DOA over embedding
// nearest neighbors, rotation alignment by grid scoring, mono-to-stereo
// upmixing (oracle and learned mask), and spatial-cue source separation.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sal/alignment_model.hpp"
#include "sal/audio_core.hpp"
#include "sal/dsp.hpp"
#include "sal/metrics.hpp"
#include "sal/spatial_transforms.hpp"
#include "sal/synth_scenes.hpp"

namespace sal {

// Per-frame azimuth track with a confidence (frame energy) and a flag for
// frames where the estimate is out of model range or undefined.
struct DoaEstimate {
  std::vector<double> azimuth_rad;
  std::vector<double> confidence;
  std::vector<std::uint8_t> flagged;

  std::size_t size() const { return azimuth_rad.size(); }
};

// Inverts the Woodworth model tau(phi) = (r/c)(phi + sin phi) by bisection.
// tau beyond the physical range clamps to +/- pi/2.
inline double invert_woodworth(double tau_s, double head_radius_m,
                               double speed_of_sound_mps, bool* clamped = nullptr) {
  double tau_max = woodworth_itd_s(kPi / 2.0, head_radius_m, speed_of_sound_mps);
  if (clamped) *clamped = false;
  if (tau_s >= tau_max) {
    if (clamped) *clamped = tau_s > tau_max;
    return kPi / 2.0;
  }
  if (tau_s <= -tau_max) {
    if (clamped) *clamped = tau_s < -tau_max;
    return -kPi / 2.0;
  }
  double lo = -kPi / 2.0, hi = kPi / 2.0;
  for (int iter = 0; iter < 60; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (woodworth_itd_s(mid, head_radius_m, speed_of_sound_mps) < tau_s)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Per-frame DOA from the GCC-PHAT delay, inverting the renderer's head
// model. Classical baseline: no learning involved.
inline DoaEstimate doa_from_gcc(const AudioClip& stereo,
                                const SceneParams& params = SceneParams(),
                                const StftParams& stft_params = StftParams(),
                                int max_lag = 16) {
  CueSequence cues = compute_stereo_cues(stereo, stft_params, max_lag);
  DoaEstimate est;
  std::size_t n = cues.itd_s.size();
  est.azimuth_rad.resize(n);
  est.confidence.resize(n);
  est.flagged.resize(n);
  const auto& l = stereo.samples[0];
  const auto& r = stereo.samples[1];
  for (std::size_t f = 0; f < n; ++f) {
    bool clamped = false;
    est.azimuth_rad[f] = invert_woodworth(cues.itd_s[f], params.head_radius_m,
                                          params.speed_of_sound_mps, &clamped);
    std::size_t start = f * static_cast<std::size_t>(stft_params.hop);
    std::span<const double> lf(l.data() + start,
                               static_cast<std::size_t>(stft_params.window_len));
    std::span<const double> rf(r.data() + start,
                               static_cast<std::size_t>(stft_params.window_len));
    est.confidence[f] = frame_energy(lf) + frame_energy(rf);
    est.flagged[f] = (clamped || cues.itd_undefined[f]) ? 1 : 0;
  }
  return est;
}

// Per-frame DOA from the acoustic intensity vector of an FOA clip.
inline DoaEstimate doa_from_intensity(const AudioClip& foa,
                                      const StftParams& stft_params = StftParams()) {
  if (foa.layout != Layout::kFoa)
    throw std::invalid_argument("doa_from_intensity requires an FOA clip");
  CueSequence cues = intensity_vector(stft(foa, stft_params));
  DoaEstimate est;
  std::size_t n = cues.ix.size();
  est.azimuth_rad.resize(n);
  est.confidence.resize(n);
  est.flagged.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    double e = cues.energy[f];
    est.confidence[f] = e;
    if (e <= kEnergyEps) {
      est.azimuth_rad[f] = 0.0;
      est.flagged[f] = 1;
    } else {
      est.azimuth_rad[f] = wrap_pi(std::atan2(cues.iy[f], cues.ix[f]));
      est.flagged[f] = 0;
    }
  }
  return est;
}

// Energy-weighted circular mean of the unflagged frames.
inline double doa_circular_mean_rad(const DoaEstimate& est) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t f = 0; f < est.size(); ++f) {
    if (est.flagged[f]) continue;
    sx += est.confidence[f] * std::cos(est.azimuth_rad[f]);
    sy += est.confidence[f] * std::sin(est.azimuth_rad[f]);
  }
  return std::atan2(sy, sx);
}

inline double doa_median_rad(const DoaEstimate& est) {
  std::vector<double> vals;
  for (std::size_t f = 0; f < est.size(); ++f)
    if (!est.flagged[f]) vals.push_back(est.azimuth_rad[f]);
  if (vals.empty()) return 0.0;
  std::sort(vals.begin(), vals.end());
  return vals[vals.size() / 2];
}

// ---------------------------------------------------------------------------
// One-shot DOA over embedding nearest neighbors
// ---------------------------------------------------------------------------

struct OneShotResult {
  std::vector<double> predicted_azimuth_rad;
  double mean_circular_error_deg = 0.0;
};

// Nearest support neighbor in Euclidean embedding distance. With a single
// example per class this coincides with a one-shot linear SVM.
inline OneShotResult one_shot_doa(
    const std::vector<std::vector<double>>& support_embeddings,
    const std::vector<double>& support_azimuth_rad,
    const std::vector<std::vector<double>>& query_embeddings,
    const std::vector<double>& query_azimuth_rad) {
  if (support_embeddings.empty())
    throw std::invalid_argument("empty support set");
  if (support_embeddings.size() != support_azimuth_rad.size())
    throw std::invalid_argument("support embedding/azimuth size mismatch");
  if (query_embeddings.size() != query_azimuth_rad.size())
    throw std::invalid_argument("query embedding/azimuth size mismatch");
  for (std::size_t i = 0; i + 1 < support_azimuth_rad.size(); ++i)
    for (std::size_t j = i + 1; j < support_azimuth_rad.size(); ++j)
      if (circular_error_deg(support_azimuth_rad[i] * 180.0 / kPi,
                             support_azimuth_rad[j] * 180.0 / kPi) < 1e-9)
        throw std::invalid_argument("duplicate azimuth class in support");

  OneShotResult result;
  double total = 0.0;
  for (std::size_t q = 0; q < query_embeddings.size(); ++q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < support_embeddings.size(); ++s) {
      double d = 0.0;
      for (std::size_t k = 0; k < support_embeddings[s].size(); ++k) {
        double diff = support_embeddings[s][k] - query_embeddings[q][k];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    result.predicted_azimuth_rad.push_back(support_azimuth_rad[best]);
    total += circular_error_deg(support_azimuth_rad[best] * 180.0 / kPi,
                                query_azimuth_rad[q] * 180.0 / kPi);
  }
  result.mean_circular_error_deg =
      query_embeddings.empty() ? 0.0
                               : total / static_cast<double>(query_embeddings.size());
  return result;
}

// ---------------------------------------------------------------------------
// Rotation alignment
// ---------------------------------------------------------------------------

struct RotationAlignmentResult {
  double theta_hat_rad = 0.0;
  double confidence = 0.0;
  std::vector<double> grid_deg;
  std::vector<double> grid_scores;  // mean log-odds per candidate
};

namespace detail {

inline AudioClip clip_window(const AudioClip& clip, std::size_t start,
                             std::size_t len) {
  AudioClip out;
  out.layout = clip.layout;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.resize(clip.samples.size());
  for (std::size_t c = 0; c < clip.samples.size(); ++c)
    out.samples[c].assign(clip.samples[c].begin() + static_cast<std::ptrdiff_t>(start),
                          clip.samples[c].begin() + static_cast<std::ptrdiff_t>(start + len));
  return out;
}

inline SourceTrajectory trajectory_window(const SourceTrajectory& traj,
                                          double t0, double t1) {
  SourceTrajectory out;
  int n = static_cast<int>(std::floor((t1 - t0) * kTrajectoryRateHz + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    double t = t0 + i / kTrajectoryRateHz;
    out.times_s.push_back(t - t0);
    out.azimuth_rad.push_back(traj.azimuth_at(t));
    out.elevation_rad.push_back(traj.elevation_at(t));
  }
  if (out.times_s.back() < t1 - t0 - 1e-9) {
    out.times_s.push_back(t1 - t0);
    out.azimuth_rad.push_back(traj.azimuth_at(t1));
    out.elevation_rad.push_back(traj.elevation_at(t1));
  }
  return out;
}

}  // namespace detail

// Estimates the misrotation of an FOA clip relative to its trajectory by
// scoring every candidate angle on a grid: de-rotate the audio by theta,
// run the alignment model over 3 s windows, and take the mean log-odds.
// The argmax wins; ties break toward the smaller angle. Confidence is the
// gap between the best and the median score over the grid.
inline RotationAlignmentResult rotation_alignment(const AudioClip& foa,
                                                  const SourceTrajectory& traj,
                                                  const AlignmentModel& model,
                                                  double grid_deg = 10.0,
                                                  const FeatureOptions& opts = {}) {
  if (foa.layout != Layout::kFoa)
    throw std::invalid_argument("rotation_alignment requires an FOA clip");
  if (grid_deg <= 0.0 || grid_deg > 180.0)
    throw std::invalid_argument("grid_deg out of range");
  // A never-fit model still carries identity normalization stats; its scores
  // would be meaningless.
  bool identity_stats = true;
  for (double v : model.audio_mean)
    if (v != 0.0) identity_stats = false;
  for (double v : model.audio_std)
    if (v != 1.0) identity_stats = false;
  if (identity_stats)
    throw std::invalid_argument("rotation_alignment requires a trained model");

  const double window_s = 3.0;
  std::size_t rate = static_cast<std::size_t>(foa.sample_rate_hz);
  std::size_t win = static_cast<std::size_t>(window_s * foa.sample_rate_hz);
  std::size_t hop = win / 2;
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  if (foa.num_samples() <= win) {
    windows.emplace_back(0, foa.num_samples());
  } else {
    for (std::size_t start = 0; start + win <= foa.num_samples(); start += hop)
      windows.emplace_back(start, win);
  }

  RotationAlignmentResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (double theta = 0.0; theta < 360.0 - 1e-9; theta += grid_deg) {
    double theta_rad = theta * kPi / 180.0;
    AudioClip derotated = rotate_foa(foa, -theta_rad);
    double score = 0.0;
    for (const auto& [start, len] : windows) {
      AudioClip w = detail::clip_window(derotated, start, len);
      SourceTrajectory tw = detail::trajectory_window(
          traj, static_cast<double>(start) / static_cast<double>(rate),
          static_cast<double>(start + len) / static_cast<double>(rate));
      score += model.logit(assemble_features(tw, w, opts));
    }
    score /= static_cast<double>(windows.size());
    result.grid_deg.push_back(theta);
    result.grid_scores.push_back(score);
    if (score > best) {
      best = score;
      result.theta_hat_rad = theta_rad;
    }
  }
  std::vector<double> sorted = result.grid_scores;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];
  result.confidence = best - median;
  return result;
}

// ---------------------------------------------------------------------------
// Upmixing (mono -> stereo)
// ---------------------------------------------------------------------------

struct UpmixResult {
  Spectrogram predicted;
  double l1_complex = 0.0;
  double baseline_l1 = 0.0;  // mono duplicated into both channels
};

inline double mono_duplication_l1(const Spectrogram& mono_spec,
                                  const Spectrogram& target_spec) {
  Spectrogram dup = target_spec;
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < dup.num_frames; ++f)
      for (int b = 0; b < dup.num_bins; ++b) dup.at(f, b, c) = mono_spec.at(f, b, 0);
  return l1_spec(dup, target_spec, L1Mode::kComplex);
}

// Oracle upmix: per frame, the renderer's gain/delay model gives the ear
// responses h_l = g_l e^{-iw tau/2} and h_r = g_r e^{+iw tau/2}, so the
// downmix response is H = (h_l + h_r) / 2. The oracle inverts H to recover
// the source spectrum from the mono input and re-applies the ear responses.
// Exact for gain-only scenes; with delays enabled the error concentrates at
// the comb nulls of H, where the level difference keeps |H| bounded away
// from zero.
inline UpmixResult upmix_oracle(const AudioClip& mono,
                                const SourceTrajectory& traj,
                                const SceneParams& params,
                                const AudioClip& target_stereo,
                                const StftParams& stft_params = StftParams()) {
  if (mono.layout != Layout::kMono)
    throw std::invalid_argument("upmix_oracle requires a mono clip");
  Spectrogram mono_spec = stft(mono, stft_params);
  Spectrogram target_spec = stft(target_stereo, stft_params);
  UpmixResult result;
  result.predicted = target_spec;  // shape template
  for (int f = 0; f < mono_spec.num_frames; ++f) {
    double phi = traj.azimuth_at(stft_params.frame_center_s(f, mono.sample_rate_hz));
    double sin_phi = std::sin(phi);
    double gl = std::pow(10.0, -params.ild_max_db * sin_phi / 40.0);
    double gr = std::pow(10.0, params.ild_max_db * sin_phi / 40.0);
    double tau = params.itd_enabled
                     ? woodworth_itd_s(phi, params.head_radius_m,
                                       params.speed_of_sound_mps)
                     : 0.0;
    for (int b = 0; b < mono_spec.num_bins; ++b) {
      double w = 2.0 * kPi * b * mono.sample_rate_hz / stft_params.window_len;
      std::complex<double> ramp{std::cos(w * tau / 2.0), std::sin(w * tau / 2.0)};
      std::complex<double> hl = gl * std::conj(ramp);
      std::complex<double> hr = gr * ramp;
      std::complex<double> h = 0.5 * (hl + hr);
      double denom = std::norm(h);
      std::complex<double> source =
          denom > 1e-12 ? mono_spec.at(f, b, 0) * std::conj(h) / denom
                        : std::complex<double>(0.0, 0.0);
      result.predicted.at(f, b, 0) = hl * source;
      result.predicted.at(f, b, 1) = hr * source;
    }
  }
  result.l1_complex = l1_spec(result.predicted, target_spec, L1Mode::kComplex);
  result.baseline_l1 = mono_duplication_l1(mono_spec, target_spec);
  return result;
}

// Learned upmix: a per-frame real mask m(t) = tanh(w . (sin phi, cos phi) + b)
// scales the mono spectrogram into the half-difference D = m * M, giving
// L = M + D and R = M - D. Frequency-independent by design: it captures the
// level cue and leaves the delay phase ramp to the oracle path.
struct UpmixMask {
  std::vector<double> w{0.0, 0.0};
  double b = 0.0;

  double mask(double sin_phi, double cos_phi) const {
    return std::tanh(w[0] * sin_phi + w[1] * cos_phi + b);
  }
};

struct UpmixTrainConfig {
  double lr = 0.5;
  int epochs = 60;
  StftParams stft;
};

namespace detail {

struct UpmixClip {
  Spectrogram mono_spec;
  Spectrogram target_spec;
  std::vector<double> sin_phi, cos_phi;  // per frame
};

inline UpmixClip prepare_upmix_clip(const AudioClip& stereo,
                                    const SourceTrajectory& traj,
                                    const StftParams& params) {
  UpmixClip c;
  AudioClip mono = downmix_to_mono(stereo);
  c.mono_spec = stft(mono, params);
  c.target_spec = stft(stereo, params);
  c.sin_phi.resize(static_cast<std::size_t>(c.mono_spec.num_frames));
  c.cos_phi.resize(static_cast<std::size_t>(c.mono_spec.num_frames));
  for (int f = 0; f < c.mono_spec.num_frames; ++f) {
    double phi = traj.azimuth_at(params.frame_center_s(f, stereo.sample_rate_hz));
    c.sin_phi[static_cast<std::size_t>(f)] = std::sin(phi);
    c.cos_phi[static_cast<std::size_t>(f)] = std::cos(phi);
  }
  return c;
}

// L1 loss of the masked prediction and its subgradient w.r.t. the mask
// parameters. Loss is the mean over bins and both channels.
inline double upmix_loss_and_grad(const UpmixMask& mask, const UpmixClip& clip,
                                  double* gw0, double* gw1, double* gb) {
  double loss = 0.0;
  int F = clip.mono_spec.num_frames, B = clip.mono_spec.num_bins;
  double scale = 1.0 / (2.0 * F * B);
  for (int f = 0; f < F; ++f) {
    double sp = clip.sin_phi[static_cast<std::size_t>(f)];
    double cp = clip.cos_phi[static_cast<std::size_t>(f)];
    double m = mask.mask(sp, cp);
    double dm = 0.0;
    for (int b = 0; b < B; ++b) {
      std::complex<double> M = clip.mono_spec.at(f, b, 0);
      std::complex<double> L = clip.target_spec.at(f, b, 0);
      std::complex<double> R = clip.target_spec.at(f, b, 1);
      std::complex<double> dl = M + m * M - L;
      std::complex<double> dr = M - m * M - R;
      loss += std::fabs(dl.real()) + std::fabs(dl.imag()) + std::fabs(dr.real()) +
              std::fabs(dr.imag());
      auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
      dm += sgn(dl.real()) * M.real() + sgn(dl.imag()) * M.imag() -
            sgn(dr.real()) * M.real() - sgn(dr.imag()) * M.imag();
    }
    double dpre = dm * scale * (1.0 - m * m);
    if (gw0) {
      *gw0 += dpre * sp;
      *gw1 += dpre * cp;
      *gb += dpre;
    }
  }
  return loss * scale;
}

}  // namespace detail

// Full-batch subgradient descent on the complex-L1 loss over the train
// split. Entries stored with flipped audio are flipped back first: upmixing
// is defined on spatially aligned pairs.
inline UpmixMask train_upmix_mask(const DatasetManifest& manifest,
                                  const UpmixTrainConfig& config = {}) {
  std::vector<detail::UpmixClip> clips;
  for (const auto* entry : manifest.split_entries(Split::kTrain)) {
    SceneData scene = load_entry(manifest, *entry);
    if (scene.audio.layout != Layout::kStereo)
      throw std::invalid_argument("upmix training requires stereo scenes");
    if (entry->label.misalignment == Misalignment::kChannelFlip)
      scene.audio = flip_stereo(scene.audio);
    clips.push_back(
        detail::prepare_upmix_clip(scene.audio, scene.trajectory, config.stft));
  }
  if (clips.empty()) throw std::invalid_argument("empty split: train");

  UpmixMask mask;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double gw0 = 0.0, gw1 = 0.0, gb = 0.0;
    for (const auto& clip : clips)
      detail::upmix_loss_and_grad(mask, clip, &gw0, &gw1, &gb);
    double n = static_cast<double>(clips.size());
    double lr = config.lr / (1.0 + 0.05 * epoch);
    mask.w[0] -= lr * gw0 / n;
    mask.w[1] -= lr * gw1 / n;
    mask.b -= lr * gb / n;
  }
  return mask;
}

inline UpmixResult upmix_learned(const UpmixMask& mask, const AudioClip& mono,
                                 const SourceTrajectory& traj,
                                 const AudioClip& target_stereo,
                                 const StftParams& stft_params = StftParams()) {
  if (mono.layout != Layout::kMono)
    throw std::invalid_argument("upmix_learned requires a mono clip");
  Spectrogram mono_spec = stft(mono, stft_params);
  Spectrogram target_spec = stft(target_stereo, stft_params);
  UpmixResult result;
  result.predicted = target_spec;  // shape template
  for (int f = 0; f < mono_spec.num_frames; ++f) {
    double phi = traj.azimuth_at(stft_params.frame_center_s(f, mono.sample_rate_hz));
    double m = mask.mask(std::sin(phi), std::cos(phi));
    for (int b = 0; b < mono_spec.num_bins; ++b) {
      std::complex<double> M = mono_spec.at(f, b, 0);
      result.predicted.at(f, b, 0) = M + m * M;
      result.predicted.at(f, b, 1) = M - m * M;
    }
  }
  result.l1_complex = l1_spec(result.predicted, target_spec, L1Mode::kComplex);
  result.baseline_l1 = mono_duplication_l1(mono_spec, target_spec);
  return result;
}

// ---------------------------------------------------------------------------
// Source separation by spatial-cue masking
// ---------------------------------------------------------------------------

struct SeparationResult {
  // Per-source estimated magnitudes, flattened like Spectrogram data.
  std::vector<std::vector<double>> estimated_magnitude;
  std::vector<double> l1_magnitude;    // per source
  double mixture_baseline_l1 = 0.0;    // mixture used as the estimate
  double ideal_mask_l1 = 0.0;          // ideal binary mask oracle
  bool degenerate = false;
};

namespace detail {

inline std::vector<double> magnitudes(const Spectrogram& spec) {
  std::vector<double> out(spec.data.size());
  for (std::size_t i = 0; i < spec.data.size(); ++i) out[i] = std::abs(spec.data[i]);
  return out;
}

}  // namespace detail

// Ideal binary mask: each (frame, bin, channel) cell goes to the source with
// the larger true magnitude. Among complementary binary masks this minimizes
// the summed magnitude L1, so it lower-bounds any cue-driven binary mask.
inline SeparationResult ideal_mask(const AudioClip& mixture,
                                   const AudioClip& true_a,
                                   const AudioClip& true_b,
                                   const StftParams& stft_params = StftParams()) {
  Spectrogram mix = stft(mixture, stft_params);
  Spectrogram sa = stft(true_a, stft_params);
  Spectrogram sb = stft(true_b, stft_params);
  if (!mix.same_shape(sa) || !mix.same_shape(sb))
    throw std::invalid_argument("separation shapes differ");

  std::vector<double> mix_mag = detail::magnitudes(mix);
  std::vector<double> mag_a = detail::magnitudes(sa);
  std::vector<double> mag_b = detail::magnitudes(sb);
  SeparationResult result;
  result.estimated_magnitude.assign(2, std::vector<double>(mix_mag.size(), 0.0));
  for (std::size_t i = 0; i < mix_mag.size(); ++i) {
    if (mag_a[i] >= mag_b[i])
      result.estimated_magnitude[0][i] = mix_mag[i];
    else
      result.estimated_magnitude[1][i] = mix_mag[i];
  }
  result.l1_magnitude = {l1_values(result.estimated_magnitude[0], mag_a),
                         l1_values(result.estimated_magnitude[1], mag_b)};
  result.mixture_baseline_l1 =
      0.5 * (l1_values(mix_mag, mag_a) + l1_values(mix_mag, mag_b));
  result.ideal_mask_l1 = 0.5 * (result.l1_magnitude[0] + result.l1_magnitude[1]);
  return result;
}

// Spatial separation of a two-source stereo mixture. Per TF bin the observed
// level difference and (low-frequency) inter-channel phase are compared with
// the cues each source's trajectory predicts under the renderer model; the
// bin goes to the nearer source. Identical trajectories carry no spatial
// information: the result is flagged degenerate and a 0.5/0.5 split is used.
inline SeparationResult separate_spatial(const AudioClip& mixture,
                                         const SourceTrajectory& traj_a,
                                         const SourceTrajectory& traj_b,
                                         const AudioClip& true_a,
                                         const AudioClip& true_b,
                                         const SceneParams& params = SceneParams(),
                                         const StftParams& stft_params = StftParams()) {
  if (mixture.layout != Layout::kStereo)
    throw std::invalid_argument("separate_spatial requires a stereo mixture");
  Spectrogram mix = stft(mixture, stft_params);
  Spectrogram sa = stft(true_a, stft_params);
  Spectrogram sb = stft(true_b, stft_params);
  if (!mix.same_shape(sa) || !mix.same_shape(sb))
    throw std::invalid_argument("separation shapes differ");

  SeparationResult ideal = ideal_mask(mixture, true_a, true_b, stft_params);

  // Degenerate when the trajectories coincide over the clip.
  double max_gap = 0.0;
  for (int f = 0; f < mix.num_frames; ++f) {
    double t = stft_params.frame_center_s(f, mixture.sample_rate_hz);
    max_gap = std::max(max_gap, std::fabs(traj_a.azimuth_at(t) - traj_b.azimuth_at(t)));
  }
  bool degenerate = max_gap < 1e-9;

  std::vector<double> mix_mag = detail::magnitudes(mix);
  SeparationResult result;
  result.degenerate = degenerate;
  result.estimated_magnitude.assign(2, std::vector<double>(mix_mag.size(), 0.0));

  // Phase is only discriminative below the frequency where the largest
  // possible delay wraps.
  double tau_max =
      woodworth_itd_s(kPi / 2.0, params.head_radius_m, params.speed_of_sound_mps);
  double f_phase_max = tau_max > 0.0 ? 1.0 / (2.0 * tau_max) : 0.0;

  for (int f = 0; f < mix.num_frames; ++f) {
    double t = stft_params.frame_center_s(f, mixture.sample_rate_hz);
    double phi_a = traj_a.azimuth_at(t);
    double phi_b = traj_b.azimuth_at(t);
    double ild_a = params.ild_max_db * std::sin(phi_a);
    double ild_b = params.ild_max_db * std::sin(phi_b);
    double tau_a = params.itd_enabled
                       ? woodworth_itd_s(phi_a, params.head_radius_m,
                                         params.speed_of_sound_mps)
                       : 0.0;
    double tau_b = params.itd_enabled
                       ? woodworth_itd_s(phi_b, params.head_radius_m,
                                         params.speed_of_sound_mps)
                       : 0.0;
    for (int b = 0; b < mix.num_bins; ++b) {
      std::complex<double> L = mix.at(f, b, 0);
      std::complex<double> R = mix.at(f, b, 1);
      double obs_ild = 20.0 * (std::log10(std::abs(R) + kEnergyEps) -
                               std::log10(std::abs(L) + kEnergyEps));
      double da = std::fabs(obs_ild - ild_a) / params.ild_max_db;
      double db = std::fabs(obs_ild - ild_b) / params.ild_max_db;
      double freq = static_cast<double>(b) * mixture.sample_rate_hz /
                    stft_params.window_len;
      if (params.itd_enabled && freq > 0.0 && freq <= f_phase_max) {
        double obs_phase = std::arg(R * std::conj(L));
        double w = 2.0 * kPi * freq;
        da += std::fabs(wrap_pi(obs_phase - w * tau_a)) / kPi;
        db += std::fabs(wrap_pi(obs_phase - w * tau_b)) / kPi;
      }
      std::size_t idx_l = (static_cast<std::size_t>(0) * mix.num_frames + f) *
                              static_cast<std::size_t>(mix.num_bins) + b;
      std::size_t idx_r = (static_cast<std::size_t>(1) * mix.num_frames + f) *
                              static_cast<std::size_t>(mix.num_bins) + b;
      if (degenerate) {
        result.estimated_magnitude[0][idx_l] = 0.5 * mix_mag[idx_l];
        result.estimated_magnitude[0][idx_r] = 0.5 * mix_mag[idx_r];
        result.estimated_magnitude[1][idx_l] = 0.5 * mix_mag[idx_l];
        result.estimated_magnitude[1][idx_r] = 0.5 * mix_mag[idx_r];
      } else {
        int win = da <= db ? 0 : 1;
        result.estimated_magnitude[static_cast<std::size_t>(win)][idx_l] = mix_mag[idx_l];
        result.estimated_magnitude[static_cast<std::size_t>(win)][idx_r] = mix_mag[idx_r];
      }
    }
  }

  std::vector<double> mag_a = detail::magnitudes(sa);
  std::vector<double> mag_b = detail::magnitudes(sb);
  result.l1_magnitude = {l1_values(result.estimated_magnitude[0], mag_a),
                         l1_values(result.estimated_magnitude[1], mag_b)};
  result.mixture_baseline_l1 = ideal.mixture_baseline_l1;
  result.ideal_mask_l1 = ideal.ideal_mask_l1;
  return result;
}

}  // namespace sal
