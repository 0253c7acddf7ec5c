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

#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

namespace sal {

// Iterative radix-2 FFT with cached twiddle/bit-reversal tables. Sizes are
// powers of two; everything in this library runs at 512 or 1024.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    if (n < 1 || (n & (n - 1)) != 0)
      throw std::invalid_argument("FFT size must be a power of two");
    rev_.resize(static_cast<std::size_t>(n));
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      rev_[static_cast<std::size_t>(i)] = r;
    }
    tw_.resize(static_cast<std::size_t>(n / 2));
    for (int j = 0; j < n / 2; ++j) {
      double a = -2.0 * 3.141592653589793238462643383279502884 * j / n;
      tw_[static_cast<std::size_t>(j)] = {std::cos(a), std::sin(a)};
    }
  }

  int size() const { return n_; }

  void forward(std::complex<double>* x) const {
    for (int i = 0; i < n_; ++i) {
      int r = rev_[static_cast<std::size_t>(i)];
      if (i < r) std::swap(x[i], x[r]);
    }
    for (int len = 2; len <= n_; len <<= 1) {
      int step = n_ / len;
      for (int i = 0; i < n_; i += len) {
        for (int j = 0; j < len / 2; ++j) {
          std::complex<double> u = x[i + j];
          std::complex<double> v =
              x[i + j + len / 2] * tw_[static_cast<std::size_t>(j * step)];
          x[i + j] = u + v;
          x[i + j + len / 2] = u - v;
        }
      }
    }
  }

  // Inverse transform including the 1/n scale.
  void inverse(std::complex<double>* x) const {
    for (int i = 0; i < n_; ++i) x[i] = std::conj(x[i]);
    forward(x);
    double inv = 1.0 / n_;
    for (int i = 0; i < n_; ++i) x[i] = std::conj(x[i]) * inv;
  }

  static const Fft& plan(int n) {
    thread_local std::map<int, Fft> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Fft(n)).first;
    return it->second;
  }

 private:
  int n_;
  std::vector<int> rev_;
  std::vector<std::complex<double>> tw_;
};

// Forward FFTs of two real signals of length n in one complex transform.
// Outputs are one-sided (n/2 + 1 bins each).
inline void fft_two_real(const double* a, const double* b, int n,
                         std::vector<std::complex<double>>& out_a,
                         std::vector<std::complex<double>>& out_b) {
  const Fft& plan = Fft::plan(n);
  std::vector<std::complex<double>> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = {a[i], b[i]};
  plan.forward(z.data());
  int half = n / 2;
  out_a.resize(static_cast<std::size_t>(half + 1));
  out_b.resize(static_cast<std::size_t>(half + 1));
  for (int k = 0; k <= half; ++k) {
    std::complex<double> zk = z[static_cast<std::size_t>(k)];
    std::complex<double> zmk = std::conj(z[static_cast<std::size_t>((n - k) % n)]);
    out_a[static_cast<std::size_t>(k)] = 0.5 * (zk + zmk);
    std::complex<double> d = zk - zmk;  // = 2i * B[k]
    out_b[static_cast<std::size_t>(k)] = {0.5 * d.imag(), -0.5 * d.real()};
  }
}

inline void fft_real(const double* a, int n,
                     std::vector<std::complex<double>>& out) {
  const Fft& plan = Fft::plan(n);
  std::vector<std::complex<double>> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = {a[i], 0.0};
  plan.forward(z.data());
  out.assign(z.begin(), z.begin() + n / 2 + 1);
}

// Inverse of a one-sided spectrum of a real signal of length n.
inline std::vector<double> ifft_real(const std::vector<std::complex<double>>& spec,
                                     int n) {
  const Fft& plan = Fft::plan(n);
  std::vector<std::complex<double>> z(static_cast<std::size_t>(n));
  int half = n / 2;
  for (int k = 0; k <= half; ++k) z[static_cast<std::size_t>(k)] = spec[static_cast<std::size_t>(k)];
  for (int k = half + 1; k < n; ++k)
    z[static_cast<std::size_t>(k)] = std::conj(spec[static_cast<std::size_t>(n - k)]);
  plan.inverse(z.data());
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)].real();
  return out;
}

}  // namespace sal
