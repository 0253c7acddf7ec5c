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
// The spatial-alignment classifier: an audio-cue branch and a trajectory
// branch (one affine + tanh layer each), fused per frame, mean-pooled, and
// read out by a logistic head. Trained with minibatch SGD (momentum 0.9) on
// the binary cross-entropy objective, gradients by exact backpropagation.
//
// The head sees [audio; trajectory; audio (*) trajectory] where (*) is the
// elementwise product of the two branch activations. The product block is
// what lets a linear head read out per-frame cue/trajectory agreement --
// with plain concatenation the decision would be additively separable in the
// two streams and the alignment task would be unlearnable.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sal/audio_core.hpp"
#include "sal/dsp.hpp"
#include "sal/rng.hpp"

namespace sal {

enum class FeatureMode { kCues, kMel };

inline std::string feature_mode_name(FeatureMode m) {
  return m == FeatureMode::kCues ? "cues" : "mel";
}

inline FeatureMode feature_mode_from_name(const std::string& s) {
  if (s == "cues") return FeatureMode::kCues;
  if (s == "mel") return FeatureMode::kMel;
  throw std::invalid_argument("unknown feature mode: " + s);
}

struct FeatureOptions {
  StftParams stft;
  int gcc_max_lag = 16;
  FeatureMode mode = FeatureMode::kCues;
  MelParams mel;
  // Ablation: zero the directional FOA channels before cue extraction.
  bool zero_xyz = false;
};

// Frame-aligned feature pair. Audio features per frame:
//   stereo cues: (itd in ms, ild in dB, led in nats)
//   FOA cues:    (ix / e, iy / e, ln e)
//   mel mode:    stacked per-channel log-mel rows
// Trajectory features per frame: (sin phi, cos phi) at the frame center.
// Values are raw; z-normalization stats live in the model.
struct FeatureSequence {
  std::vector<std::vector<double>> audio;
  std::vector<std::vector<double>> traj;

  int frames() const { return static_cast<int>(audio.size()); }
  int audio_dim() const { return audio.empty() ? 0 : static_cast<int>(audio[0].size()); }
};

inline FeatureSequence assemble_features(const SourceTrajectory& traj,
                                         const AudioClip& clip,
                                         const FeatureOptions& opts = {}) {
  clip.validate();
  traj.validate();
  int frames = opts.stft.num_frames(clip.num_samples());
  if (frames <= 0) throw std::invalid_argument("clip shorter than one frame");
  double first_center = opts.stft.frame_center_s(0, clip.sample_rate_hz);
  double last_center = opts.stft.frame_center_s(frames - 1, clip.sample_rate_hz);
  if (!traj.covers(first_center, last_center))
    throw std::invalid_argument("trajectory does not cover the clip");

  FeatureSequence seq;
  seq.traj.resize(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    double phi = traj.azimuth_at(opts.stft.frame_center_s(f, clip.sample_rate_hz));
    seq.traj[static_cast<std::size_t>(f)] = {std::sin(phi), std::cos(phi)};
  }

  seq.audio.resize(static_cast<std::size_t>(frames));
  if (opts.mode == FeatureMode::kMel) {
    MelSpectrogram mel = log_mel(stft(clip, opts.stft), opts.mel);
    for (int f = 0; f < frames; ++f) {
      auto& row = seq.audio[static_cast<std::size_t>(f)];
      row.resize(static_cast<std::size_t>(mel.n_mels) * mel.num_channels);
      std::size_t k = 0;
      for (int c = 0; c < mel.num_channels; ++c)
        for (int m = 0; m < mel.n_mels; ++m) row[k++] = mel.at(f, m, c);
    }
    return seq;
  }

  if (clip.layout == Layout::kStereo) {
    CueSequence cues = compute_stereo_cues(clip, opts.stft, opts.gcc_max_lag);
    for (int f = 0; f < frames; ++f) {
      std::size_t i = static_cast<std::size_t>(f);
      seq.audio[i] = {cues.itd_s[i] * 1000.0, cues.ild_db[i], cues.led[i]};
    }
  } else if (clip.layout == Layout::kFoa) {
    if (opts.zero_xyz) {
      // Zeroed directional channels make the intensity identically zero;
      // only the omni energy track survives.
      Spectrogram w_spec =
          stft(std::span<const double>(clip.samples[0]), opts.stft,
               clip.sample_rate_hz);
      for (int f = 0; f < frames; ++f) {
        double e = 0.0;
        for (int b = 0; b < w_spec.num_bins; ++b) e += std::norm(w_spec.at(f, b, 0));
        seq.audio[static_cast<std::size_t>(f)] = {0.0, 0.0,
                                                  std::log(e + kEnergyEps)};
      }
      return seq;
    }
    CueSequence cues = intensity_vector(stft(clip, opts.stft));
    for (int f = 0; f < frames; ++f) {
      std::size_t i = static_cast<std::size_t>(f);
      double e = cues.energy[i] + kEnergyEps;
      seq.audio[i] = {cues.ix[i] / e, cues.iy[i] / e, std::log(e)};
    }
  } else {
    throw std::invalid_argument("cue features require stereo or FOA input");
  }
  return seq;
}

// Per-example binary cross-entropy in nats, probability clamped to
// [1e-7, 1 - 1e-7].
inline double bce_loss(double p, int y) {
  double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

struct Hyper {
  double lr = 0.05;
  int batch = 32;
  int max_epochs = 200;
  int patience = 5;
  double momentum = 0.9;
  std::uint64_t seed = 1;
};

struct AlignmentModel {
  int audio_dim = 3;
  int traj_dim = 2;
  int hidden = 16;
  FeatureMode feature_mode = FeatureMode::kCues;

  // Row-major weights: audio_w is [hidden x audio_dim], traj_w is
  // [hidden x traj_dim], head_w is [3 * hidden] over
  // [audio block | traj block | product block].
  std::vector<double> audio_w, audio_b;
  std::vector<double> traj_w, traj_b;
  std::vector<double> head_w;
  double head_b = 0.0;

  std::vector<double> audio_mean, audio_std, traj_mean, traj_std;
  Hyper hyper;

  void check_dims(const FeatureSequence& f) const {
    if (f.frames() == 0) throw std::invalid_argument("empty feature sequence");
    if (f.audio_dim() != audio_dim)
      throw std::invalid_argument("audio feature dimension mismatch");
  }

  // Pre-sigmoid score (log-odds of alignment).
  double logit(const FeatureSequence& f) const {
    check_dims(f);
    int T = f.frames();
    int h = hidden;
    std::vector<double> pooled(static_cast<std::size_t>(3 * h), 0.0);
    std::vector<double> ha(static_cast<std::size_t>(h)), hv(static_cast<std::size_t>(h));
    for (int t = 0; t < T; ++t) {
      branch(f.audio[static_cast<std::size_t>(t)], audio_w, audio_b, audio_mean,
             audio_std, ha);
      branch(f.traj[static_cast<std::size_t>(t)], traj_w, traj_b, traj_mean,
             traj_std, hv);
      for (int k = 0; k < h; ++k) {
        pooled[static_cast<std::size_t>(k)] += ha[static_cast<std::size_t>(k)];
        pooled[static_cast<std::size_t>(h + k)] += hv[static_cast<std::size_t>(k)];
        pooled[static_cast<std::size_t>(2 * h + k)] +=
            ha[static_cast<std::size_t>(k)] * hv[static_cast<std::size_t>(k)];
      }
    }
    double z = head_b;
    for (int k = 0; k < 3 * h; ++k)
      z += head_w[static_cast<std::size_t>(k)] * pooled[static_cast<std::size_t>(k)] / T;
    return z;
  }

  double predict(const FeatureSequence& f) const {
    return 1.0 / (1.0 + std::exp(-logit(f)));
  }

  // tanh activations of the audio branch only, [frames x hidden].
  std::vector<std::vector<double>> audio_embedding(const FeatureSequence& f) const {
    check_dims(f);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(f.frames()));
    std::vector<double> ha(static_cast<std::size_t>(hidden));
    for (int t = 0; t < f.frames(); ++t) {
      branch(f.audio[static_cast<std::size_t>(t)], audio_w, audio_b, audio_mean,
             audio_std, ha);
      out[static_cast<std::size_t>(t)] = ha;
    }
    return out;
  }

  std::vector<double> pooled_audio_embedding(const FeatureSequence& f) const {
    auto emb = audio_embedding(f);
    std::vector<double> pooled(static_cast<std::size_t>(hidden), 0.0);
    for (const auto& row : emb)
      for (int k = 0; k < hidden; ++k)
        pooled[static_cast<std::size_t>(k)] += row[static_cast<std::size_t>(k)];
    for (double& v : pooled) v /= static_cast<double>(emb.size());
    return pooled;
  }

 private:
  void branch(const std::vector<double>& x, const std::vector<double>& w,
              const std::vector<double>& b, const std::vector<double>& mean,
              const std::vector<double>& std_, std::vector<double>& out) const {
    int d = static_cast<int>(x.size());
    for (int k = 0; k < hidden; ++k) {
      double z = b[static_cast<std::size_t>(k)];
      for (int j = 0; j < d; ++j) {
        double n =
            (x[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) /
            std_[static_cast<std::size_t>(j)];
        z += w[static_cast<std::size_t>(k * d + j)] * n;
      }
      out[static_cast<std::size_t>(k)] = std::tanh(z);
    }
  }
};

// Fresh model with weights ~ U(-1, 1)/sqrt(fan_in), zero biases, identity
// normalization stats.
inline AlignmentModel init_model(int audio_dim, int traj_dim, int hidden,
                                 FeatureMode mode, Rng& rng) {
  AlignmentModel m;
  m.audio_dim = audio_dim;
  m.traj_dim = traj_dim;
  m.hidden = hidden;
  m.feature_mode = mode;
  auto fill = [&](std::vector<double>& w, int rows, int cols) {
    double s = 1.0 / std::sqrt(static_cast<double>(cols));
    w.resize(static_cast<std::size_t>(rows) * cols);
    for (double& v : w) v = rng.uniform(-s, s);
  };
  fill(m.audio_w, hidden, audio_dim);
  fill(m.traj_w, hidden, traj_dim);
  fill(m.head_w, 1, 3 * hidden);
  m.audio_b.assign(static_cast<std::size_t>(hidden), 0.0);
  m.traj_b.assign(static_cast<std::size_t>(hidden), 0.0);
  m.head_b = 0.0;
  m.audio_mean.assign(static_cast<std::size_t>(audio_dim), 0.0);
  m.audio_std.assign(static_cast<std::size_t>(audio_dim), 1.0);
  m.traj_mean.assign(static_cast<std::size_t>(traj_dim), 0.0);
  m.traj_std.assign(static_cast<std::size_t>(traj_dim), 1.0);
  return m;
}

// ---------------------------------------------------------------------------
// Dataset preparation and training
// ---------------------------------------------------------------------------

struct PreparedExample {
  FeatureSequence features;
  int label = 1;  // y = 1 aligned
  Split split = Split::kTrain;
};

struct PreparedDataset {
  std::vector<PreparedExample> examples;
  int audio_dim = 0;
  int traj_dim = 2;

  std::vector<std::size_t> indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < examples.size(); ++i)
      if (examples[i].split == s) out.push_back(i);
    return out;
  }
};

inline PreparedDataset prepare_dataset(const DatasetManifest& manifest,
                                       const FeatureOptions& opts = {}) {
  PreparedDataset data;
  for (const auto& entry : manifest.entries) {
    SceneData scene = load_entry(manifest, entry);
    PreparedExample ex;
    ex.features = assemble_features(scene.trajectory, scene.audio, opts);
    ex.label = entry.label.aligned ? 1 : 0;
    ex.split = entry.split;
    data.examples.push_back(std::move(ex));
  }
  if (!data.examples.empty())
    data.audio_dim = data.examples[0].features.audio_dim();
  return data;
}

struct Gradients {
  std::vector<double> audio_w, audio_b, traj_w, traj_b, head_w;
  double head_b = 0.0;

  static Gradients zeros_like(const AlignmentModel& m) {
    Gradients g;
    g.audio_w.assign(m.audio_w.size(), 0.0);
    g.audio_b.assign(m.audio_b.size(), 0.0);
    g.traj_w.assign(m.traj_w.size(), 0.0);
    g.traj_b.assign(m.traj_b.size(), 0.0);
    g.head_w.assign(m.head_w.size(), 0.0);
    g.head_b = 0.0;
    return g;
  }
};

namespace detail {

// Normalized flat features for the training loop.
struct FlatExample {
  std::vector<double> audio;  // T * audio_dim
  std::vector<double> traj;   // T * traj_dim
  int frames = 0;
  int label = 1;
};

inline FlatExample flatten_normalized(const AlignmentModel& m,
                                      const PreparedExample& ex) {
  FlatExample f;
  f.frames = ex.features.frames();
  f.label = ex.label;
  f.audio.resize(static_cast<std::size_t>(f.frames) * m.audio_dim);
  f.traj.resize(static_cast<std::size_t>(f.frames) * m.traj_dim);
  for (int t = 0; t < f.frames; ++t) {
    for (int j = 0; j < m.audio_dim; ++j)
      f.audio[static_cast<std::size_t>(t * m.audio_dim + j)] =
          (ex.features.audio[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] -
           m.audio_mean[static_cast<std::size_t>(j)]) /
          m.audio_std[static_cast<std::size_t>(j)];
    for (int j = 0; j < m.traj_dim; ++j)
      f.traj[static_cast<std::size_t>(t * m.traj_dim + j)] =
          (ex.features.traj[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] -
           m.traj_mean[static_cast<std::size_t>(j)]) /
          m.traj_std[static_cast<std::size_t>(j)];
  }
  return f;
}

struct Scratch {
  std::vector<double> ha, hv;  // T * hidden each
};

// Forward over normalized flat features; stores branch activations when a
// backward pass follows.
inline double flat_logit(const AlignmentModel& m, const FlatExample& f,
                         Scratch* scratch) {
  int h = m.hidden, T = f.frames;
  if (scratch) {
    scratch->ha.resize(static_cast<std::size_t>(T) * h);
    scratch->hv.resize(static_cast<std::size_t>(T) * h);
  }
  std::vector<double> pooled(static_cast<std::size_t>(3 * h), 0.0);
  for (int t = 0; t < T; ++t) {
    const double* xa = f.audio.data() + static_cast<std::size_t>(t) * m.audio_dim;
    const double* xv = f.traj.data() + static_cast<std::size_t>(t) * m.traj_dim;
    for (int k = 0; k < h; ++k) {
      double za = m.audio_b[static_cast<std::size_t>(k)];
      for (int j = 0; j < m.audio_dim; ++j)
        za += m.audio_w[static_cast<std::size_t>(k * m.audio_dim + j)] * xa[j];
      double zv = m.traj_b[static_cast<std::size_t>(k)];
      for (int j = 0; j < m.traj_dim; ++j)
        zv += m.traj_w[static_cast<std::size_t>(k * m.traj_dim + j)] * xv[j];
      double a = std::tanh(za);
      double v = std::tanh(zv);
      if (scratch) {
        scratch->ha[static_cast<std::size_t>(t) * h + k] = a;
        scratch->hv[static_cast<std::size_t>(t) * h + k] = v;
      }
      pooled[static_cast<std::size_t>(k)] += a;
      pooled[static_cast<std::size_t>(h + k)] += v;
      pooled[static_cast<std::size_t>(2 * h + k)] += a * v;
    }
  }
  double z = m.head_b;
  for (int k = 0; k < 3 * h; ++k)
    z += m.head_w[static_cast<std::size_t>(k)] * pooled[static_cast<std::size_t>(k)] / T;
  return z;
}

// Accumulates gradients of the (clamp-free) BCE for one example, scaled by
// `weight`. Returns the clamped loss value.
inline double flat_example_grad(const AlignmentModel& m, const FlatExample& f,
                                double weight, Scratch& scratch, Gradients& g) {
  int h = m.hidden, T = f.frames;
  double z = flat_logit(m, f, &scratch);
  double p = 1.0 / (1.0 + std::exp(-z));
  double dz = (p - f.label) * weight;

  // Head gradients need the pooled vector again; rebuild from scratch space.
  std::vector<double> pooled(static_cast<std::size_t>(3 * h), 0.0);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < h; ++k) {
      double a = scratch.ha[static_cast<std::size_t>(t) * h + k];
      double v = scratch.hv[static_cast<std::size_t>(t) * h + k];
      pooled[static_cast<std::size_t>(k)] += a;
      pooled[static_cast<std::size_t>(h + k)] += v;
      pooled[static_cast<std::size_t>(2 * h + k)] += a * v;
    }
  for (int k = 0; k < 3 * h; ++k)
    g.head_w[static_cast<std::size_t>(k)] +=
        dz * pooled[static_cast<std::size_t>(k)] / T;
  g.head_b += dz;

  for (int t = 0; t < T; ++t) {
    const double* xa = f.audio.data() + static_cast<std::size_t>(t) * m.audio_dim;
    const double* xv = f.traj.data() + static_cast<std::size_t>(t) * m.traj_dim;
    for (int k = 0; k < h; ++k) {
      double a = scratch.ha[static_cast<std::size_t>(t) * h + k];
      double v = scratch.hv[static_cast<std::size_t>(t) * h + k];
      double dha = dz / T *
                   (m.head_w[static_cast<std::size_t>(k)] +
                    m.head_w[static_cast<std::size_t>(2 * h + k)] * v);
      double dhv = dz / T *
                   (m.head_w[static_cast<std::size_t>(h + k)] +
                    m.head_w[static_cast<std::size_t>(2 * h + k)] * a);
      double dza = dha * (1.0 - a * a);
      double dzv = dhv * (1.0 - v * v);
      for (int j = 0; j < m.audio_dim; ++j)
        g.audio_w[static_cast<std::size_t>(k * m.audio_dim + j)] += dza * xa[j];
      g.audio_b[static_cast<std::size_t>(k)] += dza;
      for (int j = 0; j < m.traj_dim; ++j)
        g.traj_w[static_cast<std::size_t>(k * m.traj_dim + j)] += dzv * xv[j];
      g.traj_b[static_cast<std::size_t>(k)] += dzv;
    }
  }
  return bce_loss(p, f.label) * weight;
}

}  // namespace detail

// Mean BCE and its gradients over a batch of examples. Normalization uses
// the model's stored stats. The gradient treats the probability clamp as
// inactive, which holds everywhere the loss is finite and unclamped.
inline double batch_loss_and_gradients(
    const AlignmentModel& model,
    const std::vector<const PreparedExample*>& batch, Gradients* grads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  Gradients local = Gradients::zeros_like(model);
  detail::Scratch scratch;
  double loss = 0.0;
  double w = 1.0 / static_cast<double>(batch.size());
  for (const PreparedExample* ex : batch) {
    detail::FlatExample f = detail::flatten_normalized(model, *ex);
    loss += detail::flat_example_grad(model, f, w, scratch, local);
  }
  if (grads) *grads = std::move(local);
  return loss;
}

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_accuracy;
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  int best_epoch = -1;
};

// Computes per-feature mean/std over the train split and stores them in the
// model. Standard deviations are floored to avoid dividing by zero.
inline void fit_normalization(AlignmentModel& model, const PreparedDataset& data) {
  auto train_idx = data.indices_of(Split::kTrain);
  if (train_idx.empty()) throw std::invalid_argument("empty split: train");
  auto fit = [&](int dim, bool audio, std::vector<double>& mean,
                 std::vector<double>& std_) {
    mean.assign(static_cast<std::size_t>(dim), 0.0);
    std_.assign(static_cast<std::size_t>(dim), 0.0);
    std::size_t count = 0;
    for (std::size_t i : train_idx) {
      const auto& rows = audio ? data.examples[i].features.audio
                               : data.examples[i].features.traj;
      for (const auto& row : rows) {
        for (int j = 0; j < dim; ++j) mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
        ++count;
      }
    }
    for (double& v : mean) v /= static_cast<double>(count);
    for (std::size_t i : train_idx) {
      const auto& rows = audio ? data.examples[i].features.audio
                               : data.examples[i].features.traj;
      for (const auto& row : rows)
        for (int j = 0; j < dim; ++j) {
          double d = row[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
          std_[static_cast<std::size_t>(j)] += d * d;
        }
    }
    for (double& v : std_) v = std::max(std::sqrt(v / static_cast<double>(count)), 1e-8);
  };
  fit(data.audio_dim, true, model.audio_mean, model.audio_std);
  fit(data.traj_dim, false, model.traj_mean, model.traj_std);
}

inline double evaluate_accuracy(const AlignmentModel& model,
                                const PreparedDataset& data, Split split) {
  auto idx = data.indices_of(split);
  if (idx.empty())
    throw std::invalid_argument("empty split: " + split_name(split));
  std::size_t correct = 0;
  for (std::size_t i : idx) {
    double p = model.predict(data.examples[i].features);
    int pred = p >= 0.5 ? 1 : 0;
    if (pred == data.examples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

// Minibatch SGD with momentum and early stopping on the val-accuracy plateau
// (patience epochs without improvement). Restores the best-val weights before
// computing the final test accuracy. Deterministic under hyper.seed: the
// shuffle schedule, init, and batch order are all drawn from one generator.
inline TrainReport train(AlignmentModel& model, const PreparedDataset& data,
                         const Hyper& hyper) {
  auto train_idx = data.indices_of(Split::kTrain);
  auto val_idx = data.indices_of(Split::kVal);
  if (train_idx.empty()) throw std::invalid_argument("empty split: train");
  if (val_idx.empty()) throw std::invalid_argument("empty split: val");

  Rng rng(hyper.seed);
  model = init_model(data.audio_dim, data.traj_dim, model.hidden,
                     model.feature_mode, rng);
  model.hyper = hyper;
  fit_normalization(model, data);

  std::vector<detail::FlatExample> flat;
  flat.reserve(data.examples.size());
  for (const auto& ex : data.examples)
    flat.push_back(detail::flatten_normalized(model, ex));

  Gradients vel = Gradients::zeros_like(model);
  Gradients grads = Gradients::zeros_like(model);
  detail::Scratch scratch;
  TrainReport report;
  report.seed = hyper.seed;

  AlignmentModel best = model;
  double best_val = -1.0;
  int since_best = 0;

  auto apply = [&](std::vector<double>& w, std::vector<double>& v,
                   const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = hyper.momentum * v[i] - hyper.lr * g[i];
      w[i] += v[i];
    }
  };

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    // Fisher-Yates with the run generator: a fixed shuffling schedule.
    for (std::size_t i = train_idx.size(); i > 1; --i) {
      std::size_t j = rng.below(i);
      std::swap(train_idx[i - 1], train_idx[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(hyper.batch)) {
      std::size_t end = std::min(train_idx.size(),
                                 start + static_cast<std::size_t>(hyper.batch));
      double w = 1.0 / static_cast<double>(end - start);
      std::fill(grads.audio_w.begin(), grads.audio_w.end(), 0.0);
      std::fill(grads.audio_b.begin(), grads.audio_b.end(), 0.0);
      std::fill(grads.traj_w.begin(), grads.traj_w.end(), 0.0);
      std::fill(grads.traj_b.begin(), grads.traj_b.end(), 0.0);
      std::fill(grads.head_w.begin(), grads.head_w.end(), 0.0);
      grads.head_b = 0.0;
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i)
        batch_loss += detail::flat_example_grad(model, flat[train_idx[i]], w,
                                                scratch, grads);
      epoch_loss += batch_loss * static_cast<double>(end - start);
      apply(model.audio_w, vel.audio_w, grads.audio_w);
      apply(model.audio_b, vel.audio_b, grads.audio_b);
      apply(model.traj_w, vel.traj_w, grads.traj_w);
      apply(model.traj_b, vel.traj_b, grads.traj_b);
      apply(model.head_w, vel.head_w, grads.head_w);
      vel.head_b = hyper.momentum * vel.head_b - hyper.lr * grads.head_b;
      model.head_b += vel.head_b;
    }
    epoch_loss /= static_cast<double>(train_idx.size());
    report.train_loss.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) {
      report.diverged = true;
      break;
    }

    std::size_t correct = 0;
    for (std::size_t i : val_idx) {
      double z = detail::flat_logit(model, flat[i], nullptr);
      if ((z >= 0.0 ? 1 : 0) == flat[i].label) ++correct;
    }
    double val_acc = static_cast<double>(correct) / static_cast<double>(val_idx.size());
    report.val_accuracy.push_back(val_acc);
    if (val_acc >= best_val) {
      // Ties keep the later snapshot: accuracy saturates well before the
      // margins stop growing.
      best = model;
      report.best_epoch = epoch;
    }
    if (val_acc > best_val + 1e-12) {
      best_val = val_acc;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }

  if (report.best_epoch >= 0) model = best;
  auto test_idx = data.indices_of(Split::kTest);
  if (!test_idx.empty())
    report.test_accuracy = evaluate_accuracy(model, data, Split::kTest);
  return report;
}

// ---------------------------------------------------------------------------
// PCA (Jacobi eigendecomposition of the covariance)
// ---------------------------------------------------------------------------

struct PcaResult {
  std::vector<std::vector<double>> components;   // k x d orthonormal rows
  std::vector<std::vector<double>> projections;  // n x k
  std::vector<double> explained_variance;        // ratios, descending
  std::vector<double> mean;
  bool degenerate = false;
};

inline PcaResult pca(const std::vector<std::vector<double>>& rows, int k) {
  if (rows.empty()) throw std::invalid_argument("pca needs data");
  int d = static_cast<int>(rows[0].size());
  int n = static_cast<int>(rows.size());
  if (k < 1 || k > d) throw std::invalid_argument("invalid component count");
  if (n <= d) throw std::invalid_argument("pca needs more rows than dimensions");

  PcaResult result;
  result.mean.assign(static_cast<std::size_t>(d), 0.0);
  for (const auto& row : rows)
    for (int j = 0; j < d; ++j) result.mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
  for (double& v : result.mean) v /= static_cast<double>(n);

  std::vector<std::vector<double>> cov(
      static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (const auto& row : rows)
    for (int a = 0; a < d; ++a) {
      double da = row[static_cast<std::size_t>(a)] - result.mean[static_cast<std::size_t>(a)];
      for (int b = a; b < d; ++b)
        cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
            da * (row[static_cast<std::size_t>(b)] - result.mean[static_cast<std::size_t>(b)]);
    }
  double total = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] /= (n - 1);
      cov[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] =
          cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    total += cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)];
  }
  if (total < 1e-14) {
    result.degenerate = true;
    result.components.assign(static_cast<std::size_t>(k),
                             std::vector<double>(static_cast<std::size_t>(d), 0.0));
    result.projections.assign(static_cast<std::size_t>(n),
                              std::vector<double>(static_cast<std::size_t>(k), 0.0));
    result.explained_variance.assign(static_cast<std::size_t>(k), 0.0);
    return result;
  }

  // Cyclic Jacobi rotations.
  std::vector<std::vector<double>> v(
      static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q)
        off += cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] *
               cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
    if (off < 1e-24 * total * total) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        double apq = cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
        if (std::fabs(apq) < 1e-300) continue;
        double app = cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)];
        double aqq = cov[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)];
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < d; ++i) {
          double aip = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
          double aiq = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
          cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] = c * aip - s * aiq;
          cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = s * aip + c * aiq;
        }
        for (int i = 0; i < d; ++i) {
          double api = cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
          double aqi = cov[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)];
          cov[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] = c * api - s * aqi;
          cov[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] = s * api + c * aqi;
        }
        for (int i = 0; i < d; ++i) {
          double vip = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
          double viq = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
          v[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] = c * vip - s * viq;
          v[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = s * vip + c * viq;
        }
      }
  }

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] >
           cov[static_cast<std::size_t>(b)][static_cast<std::size_t>(b)];
  });

  result.components.resize(static_cast<std::size_t>(k));
  result.explained_variance.resize(static_cast<std::size_t>(k));
  double eig_total = 0.0;
  for (int i = 0; i < d; ++i)
    eig_total += std::max(0.0, cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
  for (int i = 0; i < k; ++i) {
    int col = order[static_cast<std::size_t>(i)];
    std::vector<double> comp(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
      comp[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j)][static_cast<std::size_t>(col)];
    // Deterministic sign: largest-magnitude coordinate is positive.
    int arg = 0;
    for (int j = 1; j < d; ++j)
      if (std::fabs(comp[static_cast<std::size_t>(j)]) >
          std::fabs(comp[static_cast<std::size_t>(arg)]))
        arg = j;
    if (comp[static_cast<std::size_t>(arg)] < 0.0)
      for (double& x : comp) x = -x;
    result.explained_variance[static_cast<std::size_t>(i)] =
        std::max(0.0, cov[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)]) /
        eig_total;
    result.components[static_cast<std::size_t>(i)] = std::move(comp);
  }

  result.projections.assign(static_cast<std::size_t>(n),
                            std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j)
        acc += (rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                result.mean[static_cast<std::size_t>(j)]) *
               result.components[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      result.projections[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = acc;
    }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint and report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Hyper& h) {
  return nlohmann::json{{"lr", h.lr},           {"batch", h.batch},
                        {"max_epochs", h.max_epochs}, {"patience", h.patience},
                        {"momentum", h.momentum},     {"seed", h.seed}};
}

inline Hyper hyper_from_json(const nlohmann::json& j) {
  Hyper h;
  if (j.contains("lr")) h.lr = j["lr"].get<double>();
  if (j.contains("batch")) h.batch = j["batch"].get<int>();
  if (j.contains("max_epochs")) h.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("patience")) h.patience = j["patience"].get<int>();
  if (j.contains("momentum")) h.momentum = j["momentum"].get<double>();
  if (j.contains("seed")) h.seed = j["seed"].get<std::uint64_t>();
  return h;
}

inline void save_checkpoint(const AlignmentModel& m, const std::string& path) {
  nlohmann::json j{{"format_version", 1},
                   {"feature_mode", feature_mode_name(m.feature_mode)},
                   {"audio_dim", m.audio_dim},
                   {"traj_dim", m.traj_dim},
                   {"hidden", m.hidden},
                   {"audio_w", m.audio_w},
                   {"audio_b", m.audio_b},
                   {"traj_w", m.traj_w},
                   {"traj_b", m.traj_b},
                   {"head_w", m.head_w},
                   {"head_b", m.head_b},
                   {"audio_mean", m.audio_mean},
                   {"audio_std", m.audio_std},
                   {"traj_mean", m.traj_mean},
                   {"traj_std", m.traj_std},
                   {"hyper", to_json(m.hyper)}};
  write_json_file(path, j);
}

inline AlignmentModel load_checkpoint(const std::string& path) {
  nlohmann::json j = read_json_file(path);
  if (j.at("format_version").get<int>() != 1)
    throw std::invalid_argument("unsupported checkpoint format version");
  AlignmentModel m;
  m.feature_mode = feature_mode_from_name(j.at("feature_mode").get<std::string>());
  m.audio_dim = j.at("audio_dim").get<int>();
  m.traj_dim = j.at("traj_dim").get<int>();
  m.hidden = j.at("hidden").get<int>();
  m.audio_w = j.at("audio_w").get<std::vector<double>>();
  m.audio_b = j.at("audio_b").get<std::vector<double>>();
  m.traj_w = j.at("traj_w").get<std::vector<double>>();
  m.traj_b = j.at("traj_b").get<std::vector<double>>();
  m.head_w = j.at("head_w").get<std::vector<double>>();
  m.head_b = j.at("head_b").get<double>();
  m.audio_mean = j.at("audio_mean").get<std::vector<double>>();
  m.audio_std = j.at("audio_std").get<std::vector<double>>();
  m.traj_mean = j.at("traj_mean").get<std::vector<double>>();
  m.traj_std = j.at("traj_std").get<std::vector<double>>();
  m.hyper = hyper_from_json(j.at("hyper"));
  if (m.audio_w.size() != static_cast<std::size_t>(m.hidden) * m.audio_dim ||
      m.head_w.size() != static_cast<std::size_t>(3 * m.hidden))
    throw std::invalid_argument("checkpoint weight shapes inconsistent");
  return m;
}

inline nlohmann::json to_json(const TrainReport& r) {
  return nlohmann::json{{"train_loss", r.train_loss},
                        {"val_accuracy", r.val_accuracy},
                        {"test_accuracy", r.test_accuracy},
                        {"seed", r.seed},
                        {"diverged", r.diverged},
                        {"best_epoch", r.best_epoch}};
}

inline void write_train_report_csv(const TrainReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << "epoch,loss,val_acc\n";
  char buf[96];
  for (std::size_t i = 0; i < r.train_loss.size(); ++i) {
    double va = i < r.val_accuracy.size() ? r.val_accuracy[i] : 0.0;
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", i, r.train_loss[i], va);
    out << buf;
  }
}

}  // namespace sal
