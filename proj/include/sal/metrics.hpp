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
// Shared statistical metrics: correlation coefficients, circular error, and
// L1 spectrogram distances.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sal/dsp.hpp"

namespace sal {

// Product-moment correlation. Returns nullopt when either series has zero
// variance (the coefficient is undefined there).
inline std::optional<double> pearson(std::span<const double> x,
                                     std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("series lengths differ");
  if (x.size() < 3) throw std::invalid_argument("need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// Ranks with ties averaged.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Rank correlation: Pearson of the rank vectors.
inline std::optional<double> spearman(std::span<const double> x,
                                      std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("series lengths differ");
  std::vector<double> rx = ranks(x);
  std::vector<double> ry = ranks(y);
  return pearson(rx, ry);
}

// Angular distance on the circle, in [0, 180] degrees.
inline double circular_error_deg(double a_deg, double b_deg) {
  double d = std::fmod(std::fabs(a_deg - b_deg), 360.0);
  return std::min(d, 360.0 - d);
}

enum class L1Mode { kComplex, kMagnitude };

// Mean L1 distance over all time-frequency bins and channels. Complex mode
// uses |Re d| + |Im d| per bin; magnitude mode uses | |pred| - |target| |.
inline double l1_spec(const Spectrogram& pred, const Spectrogram& target,
                      L1Mode mode) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("spectrogram shapes differ");
  if (pred.data.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    if (mode == L1Mode::kComplex) {
      std::complex<double> d = pred.data[i] - target.data[i];
      acc += std::fabs(d.real()) + std::fabs(d.imag());
    } else {
      acc += std::fabs(std::abs(pred.data[i]) - std::abs(target.data[i]));
    }
  }
  return acc / static_cast<double>(pred.data.size());
}

// Mean |a - b| over two equal-length value arrays (e.g. magnitudes).
inline double l1_values(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("value array shapes differ");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace sal
