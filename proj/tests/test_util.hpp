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

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "sal/alignment_model.hpp"
#include "sal/audio_core.hpp"
#include "sal/rng.hpp"
#include "sal/synth_scenes.hpp"

namespace sal_test {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("sal_test_" + std::to_string(static_cast<long>(::getpid())) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline sal::SourceTrajectory static_trajectory(double azimuth_rad,
                                               double duration_s = 3.0) {
  sal::SourceTrajectory traj;
  int n = static_cast<int>(duration_s * sal::kTrajectoryRateHz) + 1;
  for (int i = 0; i < n; ++i) {
    traj.times_s.push_back(i / sal::kTrajectoryRateHz);
    traj.azimuth_rad.push_back(azimuth_rad);
    traj.elevation_rad.push_back(0.0);
  }
  return traj;
}

inline sal::SourceTrajectory sweep_trajectory(double from_rad, double to_rad,
                                              double duration_s = 3.0) {
  sal::SourceTrajectory traj;
  int n = static_cast<int>(duration_s * sal::kTrajectoryRateHz) + 1;
  for (int i = 0; i < n; ++i) {
    double u = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    traj.times_s.push_back(i / sal::kTrajectoryRateHz);
    traj.azimuth_rad.push_back(from_rad + (to_rad - from_rad) * u);
    traj.elevation_rad.push_back(0.0);
  }
  return traj;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed,
                                       double amp = 0.5) {
  sal::Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = amp * (2.0 * rng.uniform() - 1.0);
  return x;
}

// In-memory dataset on the generator's exact seeding path, skipping the WAV
// round trip. Split assignment matches generate_dataset (80-10-10 by index).
inline sal::PreparedDataset build_dataset(const sal::DatasetConfig& config,
                                          const sal::FeatureOptions& fopts = {}) {
  sal::PreparedDataset data;
  int n_train = static_cast<int>(std::llround(config.count * 0.8));
  int n_val = static_cast<int>(std::llround(config.count * 0.1));
  for (int i = 0; i < config.count; ++i) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "scene_%06d", i);
    std::uint64_t seed = sal::derive_seed(config.master_seed, idbuf);
    sal::SceneData scene = sal::render_scene(config, seed);
    sal::Rng rng(sal::derive_seed(seed, "pretext"));
    sal::TrainingExample ex = sal::make_training_example(
        scene.trajectory, scene.audio, config.mode, rng, config.pretext);
    sal::PreparedExample pe;
    pe.features = sal::assemble_features(ex.trajectory, ex.audio, fopts);
    pe.label = ex.label.aligned ? 1 : 0;
    pe.split = i < n_train            ? sal::Split::kTrain
               : i < n_train + n_val ? sal::Split::kVal
                                     : sal::Split::kTest;
    data.examples.push_back(std::move(pe));
  }
  if (!data.examples.empty())
    data.audio_dim = data.examples[0].features.audio_dim();
  return data;
}

// Hash of every regular file under a directory, order-independent of the
// filesystem walk.
inline std::uint64_t directory_hash(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : files) {
    std::string rel = fs::relative(p, dir).string();
    h ^= sal::fnv1a64(rel);
    h *= 0x100000001b3ULL;
    h ^= sal::fnv1a64(sal::detail::read_file_bytes(p.string()));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sal_test
