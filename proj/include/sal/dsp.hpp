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
// Time-frequency analysis and spatial-cue kernels: STFT / inverse STFT,
// log-mel features, GCC-PHAT delay estimation, level cues, and FOA
// cross-channel features.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sal/audio_core.hpp"
#include "sal/fft.hpp"

namespace sal {

inline constexpr double kEnergyEps = 1e-10;
inline constexpr double kPhatEps = 1e-12;
inline constexpr double kLogFloor = 1e-10;

// Hann analysis window, hop <= window/2 so that the weighted overlap-add
// inverse has nonzero window-power coverage everywhere (the reconstruction
// analogue of the constant-overlap-add condition for this window).
struct StftParams {
  int window_len = 512;
  int hop = 160;

  StftParams() = default;
  StftParams(int window, int hop_samples) : window_len(window), hop(hop_samples) {
    validate();
  }

  void validate() const {
    if (window_len < 2 || (window_len & (window_len - 1)) != 0)
      throw std::invalid_argument("window_len must be a power of two");
    if (hop < 1 || hop > window_len / 2)
      throw std::invalid_argument(
          "hop must be in [1, window_len/2] for overlap-add reconstruction");
  }

  int num_bins() const { return window_len / 2 + 1; }
  int num_frames(std::size_t n) const {
    if (n < static_cast<std::size_t>(window_len)) return 0;
    return 1 + static_cast<int>((n - static_cast<std::size_t>(window_len)) /
                                static_cast<std::size_t>(hop));
  }
  double frame_center_s(int frame, int sample_rate_hz) const {
    return (static_cast<double>(frame) * hop + window_len / 2.0) /
           sample_rate_hz;
  }
};

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * kPi * i / n);  // periodic
  return w;
}

// Complex STFT, channel-major storage: data[((ch * frames) + f) * bins + b].
struct Spectrogram {
  int num_frames = 0;
  int num_bins = 0;
  int num_channels = 0;
  int sample_rate_hz = kDefaultSampleRate;
  StftParams params;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(int frame, int bin, int ch) {
    return data[(static_cast<std::size_t>(ch) * num_frames + frame) * num_bins +
                bin];
  }
  const std::complex<double>& at(int frame, int bin, int ch) const {
    return data[(static_cast<std::size_t>(ch) * num_frames + frame) * num_bins +
                bin];
  }
  bool same_shape(const Spectrogram& other) const {
    return num_frames == other.num_frames && num_bins == other.num_bins &&
           num_channels == other.num_channels;
  }
};

// STFT of one channel. Input must be at least one window long.
inline Spectrogram stft(std::span<const double> x, const StftParams& params,
                        int sample_rate_hz = kDefaultSampleRate) {
  params.validate();
  if (x.size() < static_cast<std::size_t>(params.window_len))
    throw std::invalid_argument("input shorter than the analysis window");
  Spectrogram spec;
  spec.params = params;
  spec.sample_rate_hz = sample_rate_hz;
  spec.num_frames = params.num_frames(x.size());
  spec.num_bins = params.num_bins();
  spec.num_channels = 1;
  spec.data.resize(static_cast<std::size_t>(spec.num_frames) * spec.num_bins);

  std::vector<double> window = hann_window(params.window_len);
  std::vector<double> frame(static_cast<std::size_t>(params.window_len));
  std::vector<std::complex<double>> bins;
  for (int f = 0; f < spec.num_frames; ++f) {
    const double* src = x.data() + static_cast<std::size_t>(f) * params.hop;
    for (int i = 0; i < params.window_len; ++i)
      frame[static_cast<std::size_t>(i)] = src[i] * window[static_cast<std::size_t>(i)];
    fft_real(frame.data(), params.window_len, bins);
    std::copy(bins.begin(), bins.end(),
              spec.data.begin() + static_cast<std::size_t>(f) * spec.num_bins);
  }
  return spec;
}

// STFT of every channel of a clip. Channel pairs share one complex FFT.
inline Spectrogram stft(const AudioClip& clip,
                        const StftParams& params = StftParams()) {
  params.validate();
  if (clip.num_samples() < static_cast<std::size_t>(params.window_len))
    throw std::invalid_argument("input shorter than the analysis window");
  Spectrogram spec;
  spec.params = params;
  spec.sample_rate_hz = clip.sample_rate_hz;
  spec.num_frames = params.num_frames(clip.num_samples());
  spec.num_bins = params.num_bins();
  spec.num_channels = clip.num_channels();
  spec.data.resize(static_cast<std::size_t>(spec.num_channels) *
                   spec.num_frames * spec.num_bins);

  std::vector<double> window = hann_window(params.window_len);
  std::vector<double> fa(static_cast<std::size_t>(params.window_len));
  std::vector<double> fb(static_cast<std::size_t>(params.window_len));
  std::vector<std::complex<double>> ba, bb;
  for (int f = 0; f < spec.num_frames; ++f) {
    std::size_t start = static_cast<std::size_t>(f) * params.hop;
    for (int c = 0; c < spec.num_channels; c += 2) {
      const double* a = clip.samples[static_cast<std::size_t>(c)].data() + start;
      for (int i = 0; i < params.window_len; ++i)
        fa[static_cast<std::size_t>(i)] = a[i] * window[static_cast<std::size_t>(i)];
      if (c + 1 < spec.num_channels) {
        const double* b =
            clip.samples[static_cast<std::size_t>(c) + 1].data() + start;
        for (int i = 0; i < params.window_len; ++i)
          fb[static_cast<std::size_t>(i)] = b[i] * window[static_cast<std::size_t>(i)];
        fft_two_real(fa.data(), fb.data(), params.window_len, ba, bb);
        std::copy(bb.begin(), bb.end(),
                  spec.data.begin() +
                      (static_cast<std::size_t>(c + 1) * spec.num_frames + f) *
                          spec.num_bins);
      } else {
        fft_real(fa.data(), params.window_len, ba);
      }
      std::copy(ba.begin(), ba.end(),
                spec.data.begin() +
                    (static_cast<std::size_t>(c) * spec.num_frames + f) *
                        spec.num_bins);
    }
  }
  return spec;
}

// Weighted overlap-add inverse of one channel. Perfect reconstruction on the
// interior (up to rounding); edges are attenuated by partial window coverage.
inline std::vector<double> istft(const Spectrogram& spec, int channel = 0) {
  const StftParams& p = spec.params;
  if (channel < 0 || channel >= spec.num_channels)
    throw std::invalid_argument("channel out of range");
  std::size_t n = static_cast<std::size_t>(spec.num_frames - 1) * p.hop +
                  static_cast<std::size_t>(p.window_len);
  std::vector<double> out(n, 0.0);
  std::vector<double> norm(n, 0.0);
  std::vector<double> window = hann_window(p.window_len);
  std::vector<std::complex<double>> bins(static_cast<std::size_t>(spec.num_bins));
  for (int f = 0; f < spec.num_frames; ++f) {
    for (int b = 0; b < spec.num_bins; ++b)
      bins[static_cast<std::size_t>(b)] = spec.at(f, b, channel);
    std::vector<double> frame = ifft_real(bins, p.window_len);
    std::size_t start = static_cast<std::size_t>(f) * p.hop;
    for (int i = 0; i < p.window_len; ++i) {
      double w = window[static_cast<std::size_t>(i)];
      out[start + static_cast<std::size_t>(i)] += w * frame[static_cast<std::size_t>(i)];
      norm[start + static_cast<std::size_t>(i)] += w * w;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (norm[i] > 1e-12) out[i] /= norm[i];
  return out;
}

inline AudioClip istft_clip(const Spectrogram& spec, Layout layout) {
  if (channel_count(layout) != spec.num_channels)
    throw std::invalid_argument("layout does not match spectrogram channels");
  AudioClip clip;
  clip.layout = layout;
  clip.sample_rate_hz = spec.sample_rate_hz;
  clip.samples.resize(static_cast<std::size_t>(spec.num_channels));
  for (int c = 0; c < spec.num_channels; ++c)
    clip.samples[static_cast<std::size_t>(c)] = istft(spec, c);
  return clip;
}

// ---------------------------------------------------------------------------
// Log-mel features
// ---------------------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

struct MelParams {
  int n_mels = 64;
  double f_min_hz = 0.0;
  double f_max_hz = 8000.0;
};

// Triangular HTK-mel filterbank sampled at FFT bin centers; rows are scaled
// to unit peak. Row-major [n_mels x n_bins].
inline std::vector<std::vector<double>> mel_filterbank(const MelParams& mel,
                                                       int n_bins,
                                                       int sample_rate_hz,
                                                       int window_len) {
  if (mel.n_mels < 1) throw std::invalid_argument("n_mels must be positive");
  if (mel.n_mels > n_bins)
    throw std::invalid_argument("n_mels exceeds spectrogram bin count");
  double mel_lo = hz_to_mel(mel.f_min_hz);
  double mel_hi = hz_to_mel(mel.f_max_hz);
  std::vector<double> centers(static_cast<std::size_t>(mel.n_mels) + 2);
  for (int i = 0; i < mel.n_mels + 2; ++i)
    centers[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (mel.n_mels + 1));

  std::vector<std::vector<double>> bank(
      static_cast<std::size_t>(mel.n_mels),
      std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int m = 0; m < mel.n_mels; ++m) {
    double left = centers[static_cast<std::size_t>(m)];
    double mid = centers[static_cast<std::size_t>(m) + 1];
    double right = centers[static_cast<std::size_t>(m) + 2];
    double peak = 0.0;
    for (int b = 0; b < n_bins; ++b) {
      double f = static_cast<double>(b) * sample_rate_hz / window_len;
      double w = 0.0;
      if (f > left && f < right)
        w = f <= mid ? (f - left) / (mid - left) : (right - f) / (right - mid);
      bank[static_cast<std::size_t>(m)][static_cast<std::size_t>(b)] = w;
      peak = std::max(peak, w);
    }
    if (peak > 0.0)
      for (double& w : bank[static_cast<std::size_t>(m)]) w /= peak;
  }
  return bank;
}

// Natural-log mel power, floored at kLogFloor. [frames x n_mels x channels],
// channel-major like Spectrogram.
struct MelSpectrogram {
  int num_frames = 0;
  int n_mels = 0;
  int num_channels = 0;
  std::vector<double> values;

  double& at(int frame, int mel, int ch) {
    return values[(static_cast<std::size_t>(ch) * num_frames + frame) * n_mels +
                  mel];
  }
  double at(int frame, int mel, int ch) const {
    return values[(static_cast<std::size_t>(ch) * num_frames + frame) * n_mels +
                  mel];
  }
};

inline MelSpectrogram log_mel(const Spectrogram& spec,
                              const MelParams& mel = MelParams()) {
  if (spec.sample_rate_hz != kDefaultSampleRate)
    throw std::invalid_argument("log_mel expects 16 kHz input");
  auto bank = mel_filterbank(mel, spec.num_bins, spec.sample_rate_hz,
                             spec.params.window_len);
  MelSpectrogram out;
  out.num_frames = spec.num_frames;
  out.n_mels = mel.n_mels;
  out.num_channels = spec.num_channels;
  out.values.resize(static_cast<std::size_t>(out.num_channels) *
                    out.num_frames * out.n_mels);
  for (int c = 0; c < spec.num_channels; ++c)
    for (int f = 0; f < spec.num_frames; ++f)
      for (int m = 0; m < mel.n_mels; ++m) {
        double acc = 0.0;
        const auto& row = bank[static_cast<std::size_t>(m)];
        for (int b = 0; b < spec.num_bins; ++b) {
          double w = row[static_cast<std::size_t>(b)];
          if (w != 0.0) acc += w * std::norm(spec.at(f, b, c));
        }
        out.at(f, m, c) = std::log(std::max(acc, kLogFloor));
      }
  return out;
}

// ---------------------------------------------------------------------------
// GCC-PHAT
// ---------------------------------------------------------------------------

struct GccPhatResult {
  int lag = 0;        // positive lag: the right frame is delayed w.r.t. left
  bool undefined = false;
  std::vector<double> correlation;  // index 0 corresponds to -max_lag
};

// Whitened cross-correlation peak between two equal-length frames. The
// returned lag is positive when `right` is a delayed copy of `left`
// (right lags left).
//
// Swapping the inputs negates the lag exactly: the channels are transformed
// separately (so each spectrum is bit-identical across the two calls, which
// the packed two-channel FFT would not give), the swapped cross spectrum is
// then the exact elementwise conjugate, and the correlation is evaluated
// per lag with conjugate-symmetric rotation recurrences, making the swapped
// curve a bitwise mirror of the original.
inline GccPhatResult gcc_phat(std::span<const double> left,
                              std::span<const double> right, int max_lag = 16) {
  if (left.size() != right.size())
    throw std::invalid_argument("gcc_phat frames must have equal length");
  int n = static_cast<int>(left.size());
  if (max_lag < 0 || max_lag >= n)
    throw std::invalid_argument("max_lag must be smaller than the frame");
  int fft_n = 1;
  while (fft_n < n) fft_n <<= 1;

  std::vector<double> padded(static_cast<std::size_t>(fft_n), 0.0);
  std::copy(left.begin(), left.end(), padded.begin());
  std::vector<std::complex<double>> ls, rs;
  fft_real(padded.data(), fft_n, ls);
  std::fill(padded.begin(), padded.end(), 0.0);
  std::copy(right.begin(), right.end(), padded.begin());
  fft_real(padded.data(), fft_n, rs);

  bool all_zero = true;
  for (double v : left)
    if (v != 0.0) { all_zero = false; break; }
  if (all_zero)
    for (double v : right)
      if (v != 0.0) { all_zero = false; break; }

  int half = fft_n / 2;
  std::vector<std::complex<double>> cross(static_cast<std::size_t>(half) + 1);
  for (int k = 0; k <= half; ++k) {
    std::complex<double> c = std::conj(ls[static_cast<std::size_t>(k)]) *
                             rs[static_cast<std::size_t>(k)];
    cross[static_cast<std::size_t>(k)] = c / (std::abs(c) + kPhatEps);
  }

  GccPhatResult result;
  result.correlation.resize(static_cast<std::size_t>(2 * max_lag) + 1);
  double best = -1e300;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    // (1/N) [ W0 + W_{N/2} cos(pi lag) + 2 sum_k Re(W_k e^{i 2 pi k lag / N}) ]
    double angle = 2.0 * kPi * std::abs(lag) / fft_n;
    std::complex<double> rot{std::cos(angle),
                             lag < 0 ? -std::sin(angle) : std::sin(angle)};
    std::complex<double> w{1.0, 0.0};
    double acc = cross[0].real();
    for (int k = 1; k < half; ++k) {
      w *= rot;
      const std::complex<double>& c = cross[static_cast<std::size_t>(k)];
      acc += 2.0 * (c.real() * w.real() - c.imag() * w.imag());
    }
    acc += cross[static_cast<std::size_t>(half)].real() * ((lag & 1) ? -1.0 : 1.0);
    double v = acc / fft_n;
    result.correlation[static_cast<std::size_t>(lag + max_lag)] = v;
    // Exact ties resolve toward the smallest delay, which keeps the argmax
    // antisymmetric under a channel swap.
    if (v > best || (v == best && std::abs(lag) < std::abs(result.lag))) {
      best = v;
      result.lag = lag;
    }
  }
  if (all_zero) {
    result.lag = 0;
    result.undefined = true;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Level cues
// ---------------------------------------------------------------------------

inline double frame_energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

// Level difference in dB, positive when the right channel is louder.
// Implemented as a difference of logs so a channel swap negates it exactly.
inline double ild_db(std::span<const double> left, std::span<const double> right) {
  if (left.size() != right.size())
    throw std::invalid_argument("ild_db frames must have equal length");
  return 10.0 * (std::log10(frame_energy(right) + kEnergyEps) -
                 std::log10(frame_energy(left) + kEnergyEps));
}

// Log-energy difference in nats, positive when the right channel is louder.
inline double led(std::span<const double> left, std::span<const double> right) {
  if (left.size() != right.size())
    throw std::invalid_argument("led frames must have equal length");
  return std::log(frame_energy(right) + kEnergyEps) -
         std::log(frame_energy(left) + kEnergyEps);
}

// ---------------------------------------------------------------------------
// Per-frame cue sequences
// ---------------------------------------------------------------------------

// Per-frame spatial cues on the STFT frame grid. Stereo cues populate
// itd_s / ild_db / led; FOA cues populate ix / iy / energy.
//
// itd_s is positive when the source is to the listener's right, i.e. the
// right ear leads and the LEFT channel is the delayed one; it is therefore
// the negated gcc_phat lag over the sample rate.
struct CueSequence {
  std::vector<double> itd_s;
  std::vector<double> ild_db;
  std::vector<double> led;
  std::vector<std::uint8_t> itd_undefined;
  std::vector<double> ix;
  std::vector<double> iy;
  std::vector<double> energy;

  std::size_t size() const {
    return !itd_s.empty() ? itd_s.size() : ix.size();
  }
};

inline CueSequence compute_stereo_cues(const AudioClip& clip,
                                       const StftParams& params = StftParams(),
                                       int max_lag = 16) {
  if (clip.layout != Layout::kStereo)
    throw std::invalid_argument("stereo cues require a stereo clip");
  int frames = params.num_frames(clip.num_samples());
  if (frames <= 0) throw std::invalid_argument("clip shorter than one frame");
  CueSequence cues;
  cues.itd_s.resize(static_cast<std::size_t>(frames));
  cues.ild_db.resize(static_cast<std::size_t>(frames));
  cues.led.resize(static_cast<std::size_t>(frames));
  cues.itd_undefined.resize(static_cast<std::size_t>(frames));
  const auto& l = clip.samples[0];
  const auto& r = clip.samples[1];
  for (int f = 0; f < frames; ++f) {
    std::size_t start = static_cast<std::size_t>(f) * params.hop;
    std::span<const double> lf(l.data() + start,
                               static_cast<std::size_t>(params.window_len));
    std::span<const double> rf(r.data() + start,
                               static_cast<std::size_t>(params.window_len));
    GccPhatResult g = gcc_phat(lf, rf, max_lag);
    cues.itd_s[static_cast<std::size_t>(f)] =
        -static_cast<double>(g.lag) / clip.sample_rate_hz;
    cues.itd_undefined[static_cast<std::size_t>(f)] = g.undefined ? 1 : 0;
    cues.ild_db[static_cast<std::size_t>(f)] = ild_db(lf, rf);
    cues.led[static_cast<std::size_t>(f)] = led(lf, rf);
  }
  return cues;
}

// Per-bin FOA cross features: |W|^2 and Re/Im of Y*conj(W), Z*conj(W),
// X*conj(W). Layout [frames x bins x 7], frame-major.
struct FoaCrossFeatures {
  int num_frames = 0;
  int num_bins = 0;
  std::vector<double> values;

  double at(int frame, int bin, int k) const {
    return values[(static_cast<std::size_t>(frame) * num_bins + bin) * 7 + k];
  }
};

inline FoaCrossFeatures foa_cross_features(const Spectrogram& spec) {
  if (spec.num_channels != 4)
    throw std::invalid_argument("foa_cross_features requires 4 channels");
  FoaCrossFeatures out;
  out.num_frames = spec.num_frames;
  out.num_bins = spec.num_bins;
  out.values.resize(static_cast<std::size_t>(spec.num_frames) * spec.num_bins * 7);
  std::size_t idx = 0;
  for (int f = 0; f < spec.num_frames; ++f)
    for (int b = 0; b < spec.num_bins; ++b) {
      std::complex<double> w = spec.at(f, b, 0);
      std::complex<double> cw = std::conj(w);
      std::complex<double> yw = spec.at(f, b, 1) * cw;
      std::complex<double> zw = spec.at(f, b, 2) * cw;
      std::complex<double> xw = spec.at(f, b, 3) * cw;
      out.values[idx++] = std::norm(w);
      out.values[idx++] = yw.real();
      out.values[idx++] = yw.imag();
      out.values[idx++] = zw.real();
      out.values[idx++] = zw.imag();
      out.values[idx++] = xw.real();
      out.values[idx++] = xw.imag();
    }
  return out;
}

// Horizontal acoustic intensity per frame: ix = sum_f Re(W conj X),
// iy = sum_f Re(W conj Y), energy = sum_f |W|^2. atan2(iy, ix) points at the
// source azimuth for a clean encoded plane wave, and is invariant to any
// positive gain applied to all four channels.
inline CueSequence intensity_vector(const Spectrogram& spec) {
  if (spec.num_channels != 4)
    throw std::invalid_argument("intensity_vector requires 4 channels");
  CueSequence cues;
  cues.ix.resize(static_cast<std::size_t>(spec.num_frames));
  cues.iy.resize(static_cast<std::size_t>(spec.num_frames));
  cues.energy.resize(static_cast<std::size_t>(spec.num_frames));
  for (int f = 0; f < spec.num_frames; ++f) {
    double ix = 0.0, iy = 0.0, e = 0.0;
    for (int b = 0; b < spec.num_bins; ++b) {
      std::complex<double> w = spec.at(f, b, 0);
      ix += (w * std::conj(spec.at(f, b, 3))).real();
      iy += (w * std::conj(spec.at(f, b, 1))).real();
      e += std::norm(w);
    }
    cues.ix[static_cast<std::size_t>(f)] = ix;
    cues.iy[static_cast<std::size_t>(f)] = iy;
    cues.energy[static_cast<std::size_t>(f)] = e;
  }
  return cues;
}

// Debug dump: "frame,itd_s,ild_db,led[,ix,iy,energy]" depending on which cue
// arrays are populated.
inline void write_cues_csv(const CueSequence& cues, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  bool stereo = !cues.itd_s.empty();
  bool foa = !cues.ix.empty();
  out << "frame";
  if (stereo) out << ",itd_s,ild_db,led";
  if (foa) out << ",ix,iy,energy";
  out << "\n";
  std::size_t n = cues.size();
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < n; ++i) {
    out << i;
    if (stereo) {
      put(cues.itd_s[i]);
      put(cues.ild_db[i]);
      put(cues.led[i]);
    }
    if (foa) {
      put(cues.ix[i]);
      put(cues.iy[i]);
      put(cues.energy[i]);
    }
    out << "\n";
  }
}

}  // namespace sal
