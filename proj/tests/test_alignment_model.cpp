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
#include "sal/alignment_model.hpp"
#include "sal/spatial_transforms.hpp"
#include "sal/synth_scenes.hpp"
#include "test_util.hpp"

using namespace sal;
using sal_test::TempDir;

namespace {

DatasetConfig flip_config(int count, std::uint64_t seed,
                          double snr_db = std::numeric_limits<double>::infinity()) {
  DatasetConfig config;
  config.count = count;
  config.mode = PretextMode::kFlip;
  config.master_seed = seed;
  config.scene.duration_s = 1.5;
  config.scene.snr_db = snr_db;
  config.scene.source_kind = SourceKind::kMixed;
  config.scene.trajectory_kind = TrajectoryKind::kRandomWalk;
  return config;
}

// Random features, fixed frame count; exercises the math without any audio.
PreparedDataset random_feature_dataset(int n, int frames, std::uint64_t seed) {
  Rng rng(seed);
  PreparedDataset data;
  data.audio_dim = 3;
  for (int i = 0; i < n; ++i) {
    PreparedExample ex;
    ex.label = rng.bernoulli(0.5) ? 1 : 0;
    ex.split = Split::kTrain;
    ex.features.audio.resize(static_cast<std::size_t>(frames));
    ex.features.traj.resize(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
      ex.features.audio[static_cast<std::size_t>(t)] = {rng.normal(), rng.normal(),
                                                        rng.normal()};
      ex.features.traj[static_cast<std::size_t>(t)] = {rng.normal(), rng.normal()};
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

}  // namespace

TEST_CASE("assembled features agree in sign with the trajectory at +45") {
  Rng rng(1);
  SceneParams params;
  auto traj = sal_test::static_trajectory(kPi / 4.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 3.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  FeatureSequence feats = assemble_features(traj, clip);
  REQUIRE(feats.frames() > 0);
  REQUIRE(feats.audio_dim() == 3);
  double mean_led = 0.0, mean_sin = 0.0;
  for (int t = 0; t < feats.frames(); ++t) {
    mean_led += feats.audio[static_cast<std::size_t>(t)][2];
    mean_sin += feats.traj[static_cast<std::size_t>(t)][0];
  }
  CHECK(mean_led > 0.0);
  CHECK(mean_sin > 0.0);
}

TEST_CASE("flipping the clip negates the audio features, not the trajectory") {
  Rng rng(2);
  SceneParams params;
  auto traj = sal_test::static_trajectory(0.5);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 1.5);
  AudioClip clip = render_binaural(src, traj, params, rng);
  FeatureSequence a = assemble_features(traj, clip);
  FeatureSequence b = assemble_features(traj, flip_stereo(clip));
  REQUIRE(a.frames() == b.frames());
  for (int t = 0; t < a.frames(); ++t) {
    for (int j = 0; j < 3; ++j)
      CHECK(b.audio[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] ==
            -a.audio[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
    CHECK(b.traj[static_cast<std::size_t>(t)] == a.traj[static_cast<std::size_t>(t)]);
  }
}

TEST_CASE("a zero trajectory maps to (0, 1) features before normalization") {
  Rng rng(3);
  SceneParams params;
  auto traj = sal_test::static_trajectory(0.0, 1.0);
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 1.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  FeatureSequence feats = assemble_features(traj, clip);
  for (int t = 0; t < feats.frames(); ++t) {
    CHECK(feats.traj[static_cast<std::size_t>(t)][0] == 0.0);
    CHECK(feats.traj[static_cast<std::size_t>(t)][1] == 1.0);
  }
}

TEST_CASE("assemble_features rejects coverage mismatches") {
  Rng rng(4);
  SceneParams params;
  auto src = sample_source_signal(rng, SourceKind::kAmTone, 3.0);
  AudioClip clip = render_binaural(src, sal_test::static_trajectory(0.0), params, rng);
  auto short_traj = sal_test::static_trajectory(0.0, 1.0);
  CHECK_THROWS_AS(assemble_features(short_traj, clip), std::invalid_argument);
}

TEST_CASE("mel feature mode stacks both channels") {
  Rng rng(5);
  SceneParams params;
  auto traj = sal_test::static_trajectory(0.4, 1.0);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 1.0);
  AudioClip clip = render_binaural(src, traj, params, rng);
  FeatureOptions opts;
  opts.mode = FeatureMode::kMel;
  FeatureSequence feats = assemble_features(traj, clip, opts);
  CHECK(feats.audio_dim() == 128);  // 64 mels x 2 channels
}

TEST_CASE("bce loss matches the analytic values") {
  CHECK(bce_loss(1.0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::isfinite(bce_loss(0.0, 1)));  // clamped
  CHECK(std::isfinite(bce_loss(1.0, 0)));
}

TEST_CASE("batch loss equals the mean of per-example cross entropies") {
  PreparedDataset data = random_feature_dataset(3, 9, 11);
  Rng rng(12);
  AlignmentModel model = init_model(3, 2, 16, FeatureMode::kCues, rng);
  std::vector<const PreparedExample*> batch;
  for (const auto& ex : data.examples) batch.push_back(&ex);
  double loss = batch_loss_and_gradients(model, batch, nullptr);
  // The objective is the negated mean per-example log-likelihood term.
  double expected = 0.0;
  for (const auto& ex : data.examples) {
    double p = model.predict(ex.features);
    expected += -(ex.label * std::log(p) + (1 - ex.label) * std::log(1.0 - p));
  }
  expected /= 3.0;
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  PreparedDataset data = random_feature_dataset(6, 12, 21);
  Rng rng(22);
  AlignmentModel model = init_model(3, 2, 8, FeatureMode::kCues, rng);
  std::vector<const PreparedExample*> batch;
  for (const auto& ex : data.examples) batch.push_back(&ex);

  Gradients grads;
  batch_loss_and_gradients(model, batch, &grads);

  const double eps = 1e-4;
  double max_rel = 0.0;
  auto check_block = [&](std::vector<double>& w, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      double keep = w[i];
      w[i] = keep + eps;
      double up = batch_loss_and_gradients(model, batch, nullptr);
      w[i] = keep - eps;
      double down = batch_loss_and_gradients(model, batch, nullptr);
      w[i] = keep;
      double fd = (up - down) / (2.0 * eps);
      // Relative error with an absolute floor at the oracle's own noise
      // level (the central difference is only accurate to ~1e-8 here).
      double rel = std::fabs(fd - g[i]) / std::max({std::fabs(fd), std::fabs(g[i]), 1e-4});
      max_rel = std::max(max_rel, rel);
    }
  };
  check_block(model.audio_w, grads.audio_w);
  check_block(model.audio_b, grads.audio_b);
  check_block(model.traj_w, grads.traj_w);
  check_block(model.traj_b, grads.traj_b);
  check_block(model.head_w, grads.head_w);
  {
    double keep = model.head_b;
    model.head_b = keep + eps;
    double up = batch_loss_and_gradients(model, batch, nullptr);
    model.head_b = keep - eps;
    double down = batch_loss_and_gradients(model, batch, nullptr);
    model.head_b = keep;
    double fd = (up - down) / (2.0 * eps);
    max_rel = std::max(max_rel, std::fabs(fd - grads.head_b) /
                                    std::max({std::fabs(fd),
                                              std::fabs(grads.head_b), 1e-4}));
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("training solves the clean flip task") {
  PreparedDataset data = sal_test::build_dataset(flip_config(500, 31));
  AlignmentModel model;
  Hyper hyper;
  hyper.seed = 5;
  TrainReport report = train(model, data, hyper);
  CHECK_FALSE(report.diverged);
  CHECK(report.test_accuracy >= 0.9);
  CHECK(report.train_loss.size() == report.val_accuracy.size());
  CHECK(evaluate_accuracy(model, data, Split::kTest) == report.test_accuracy);
}

TEST_CASE("the mel feature mode also solves the flip task") {
  DatasetConfig config;
  config.count = 300;
  config.mode = PretextMode::kFlip;
  config.master_seed = 77;
  config.scene.duration_s = 1.0;
  config.scene.source_kind = SourceKind::kWhiteNoiseBursts;
  config.scene.trajectory_kind = TrajectoryKind::kStatic;
  FeatureOptions fopts;
  fopts.mode = FeatureMode::kMel;
  PreparedDataset data = sal_test::build_dataset(config, fopts);
  AlignmentModel model;
  model.feature_mode = FeatureMode::kMel;
  Hyper hyper;
  hyper.seed = 78;
  TrainReport report = train(model, data, hyper);
  CHECK(report.test_accuracy >= 0.85);
}

TEST_CASE("training is deterministic under a fixed seed") {
  PreparedDataset data = sal_test::build_dataset(flip_config(120, 32));
  Hyper hyper;
  hyper.seed = 9;
  hyper.max_epochs = 20;
  AlignmentModel a, b;
  TrainReport ra = train(a, data, hyper);
  TrainReport rb = train(b, data, hyper);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(a.audio_w == b.audio_w);
  CHECK(a.head_w == b.head_w);
  CHECK(a.head_b == b.head_b);
}

TEST_CASE("an all-zero model predicts 0.5 and scores the base rate") {
  PreparedDataset data = sal_test::build_dataset(flip_config(60, 33));
  Rng rng(34);
  AlignmentModel model = init_model(3, 2, 16, FeatureMode::kCues, rng);
  std::fill(model.audio_w.begin(), model.audio_w.end(), 0.0);
  std::fill(model.traj_w.begin(), model.traj_w.end(), 0.0);
  std::fill(model.head_w.begin(), model.head_w.end(), 0.0);
  model.head_b = 0.0;
  auto idx = data.indices_of(Split::kTest);
  std::size_t positives = 0;
  for (std::size_t i : idx) {
    CHECK(model.predict(data.examples[i].features) == 0.5);
    positives += static_cast<std::size_t>(data.examples[i].label);
  }
  // p = 0.5 thresholds to "aligned", so accuracy equals the base rate.
  double expected = static_cast<double>(positives) / static_cast<double>(idx.size());
  CHECK(evaluate_accuracy(model, data, Split::kTest) == doctest::Approx(expected));
}

TEST_CASE("audio embeddings stay in (-1,1), are deterministic, and see flips") {
  Rng rng(41);
  SceneParams params;
  auto traj = sal_test::static_trajectory(0.6, 1.5);
  auto src = sample_source_signal(rng, SourceKind::kWhiteNoiseBursts, 1.5);
  AudioClip clip = render_binaural(src, traj, params, rng);
  FeatureSequence feats = assemble_features(traj, clip);
  FeatureSequence flipped = assemble_features(traj, flip_stereo(clip));

  Rng init_rng(42);
  AlignmentModel model = init_model(3, 2, 16, FeatureMode::kCues, init_rng);
  auto emb = model.audio_embedding(feats);
  auto emb2 = model.audio_embedding(feats);
  CHECK(emb == emb2);
  for (const auto& row : emb)
    for (double v : row) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  auto emb_flip = model.audio_embedding(flipped);
  double dist = 0.0;
  for (std::size_t t = 0; t < emb.size(); ++t)
    for (std::size_t k = 0; k < emb[t].size(); ++k) {
      double d = emb[t][k] - emb_flip[t][k];
      dist += d * d;
    }
  CHECK(dist > 0.0);
}

TEST_CASE("pca recovers a one-dimensional subspace exactly") {
  Rng rng(51);
  std::vector<double> direction(8);
  for (double& v : direction) v = rng.normal();
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) {
    double a = rng.normal();
    std::vector<double> row(8);
    for (int j = 0; j < 8; ++j) row[static_cast<std::size_t>(j)] = a * direction[static_cast<std::size_t>(j)] + 3.0;
    rows.push_back(std::move(row));
  }
  PcaResult p = pca(rows, 3);
  CHECK_FALSE(p.degenerate);
  CHECK(p.explained_variance[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t a = 0; a < p.components.size(); ++a)
    for (std::size_t b = 0; b < p.components.size(); ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 8; ++j) dot += p.components[a][j] * p.components[b][j];
      CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) <= 1e-9);
    }
}

TEST_CASE("pca flags degenerate zero-variance input") {
  std::vector<std::vector<double>> rows(20, std::vector<double>(4, 1.5));
  PcaResult p = pca(rows, 2);
  CHECK(p.degenerate);
}

TEST_CASE("pca eigenvalue ratios are descending and sum to one") {
  Rng rng(52);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> row(6);
    for (int j = 0; j < 6; ++j)
      row[static_cast<std::size_t>(j)] = rng.normal() * (j + 1);
    rows.push_back(std::move(row));
  }
  PcaResult p = pca(rows, 6);
  double total = 0.0;
  for (std::size_t i = 0; i < p.explained_variance.size(); ++i) {
    if (i) CHECK(p.explained_variance[i] <= p.explained_variance[i - 1] + 1e-12);
    total += p.explained_variance[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca validates its input") {
  std::vector<std::vector<double>> rows(4, std::vector<double>(8, 0.0));
  CHECK_THROWS_AS(pca(rows, 2), std::invalid_argument);  // n <= d
  rows.assign(40, std::vector<double>(8, 0.0));
  CHECK_THROWS_AS(pca(rows, 0), std::invalid_argument);
  CHECK_THROWS_AS(pca(rows, 9), std::invalid_argument);
}

TEST_CASE("mirror augmentation does not destroy learnability") {
  DatasetConfig with_aug = flip_config(500, 61);
  DatasetConfig without_aug = flip_config(500, 61);
  without_aug.pretext.mirror_augment = false;
  Hyper hyper;
  hyper.seed = 62;
  AlignmentModel model_a, model_b;
  TrainReport ra = train(model_a, sal_test::build_dataset(with_aug), hyper);
  TrainReport rb = train(model_b, sal_test::build_dataset(without_aug), hyper);
  CHECK(ra.test_accuracy >= 0.9);
  CHECK(rb.test_accuracy >= 0.9);
}

TEST_CASE("accuracy degrades monotonically with noise") {
  const std::uint64_t seed = 71;
  Hyper hyper;
  hyper.seed = 72;
  auto run = [&](double snr) {
    PreparedDataset data = sal_test::build_dataset(flip_config(500, seed, snr));
    AlignmentModel model;
    return train(model, data, hyper).test_accuracy;
  };
  double noisy = run(0.0);
  double mid = run(20.0);
  double clean = run(std::numeric_limits<double>::infinity());
  CHECK(noisy <= mid + 1e-12);
  CHECK(mid <= clean + 1e-12);
}

TEST_CASE("training aborts with a diverged report on NaN features") {
  PreparedDataset data = random_feature_dataset(40, 6, 81);
  for (std::size_t i = 0; i < data.examples.size(); ++i)
    data.examples[i].split = i < 30 ? Split::kTrain : Split::kVal;
  data.examples[0].features.audio[0][0] = std::numeric_limits<double>::quiet_NaN();
  AlignmentModel model;
  Hyper hyper;
  hyper.max_epochs = 3;
  TrainReport report = train(model, data, hyper);
  CHECK(report.diverged);
}

TEST_CASE("training requires non-empty train and val splits") {
  PreparedDataset data = random_feature_dataset(10, 4, 82);
  for (auto& ex : data.examples) ex.split = Split::kTest;
  AlignmentModel model;
  CHECK_THROWS_WITH_AS(train(model, data, Hyper{}),
                       doctest::Contains("empty split"), std::invalid_argument);
}

TEST_CASE("checkpoints round trip byte-identically") {
  TempDir dir;
  PreparedDataset data = sal_test::build_dataset(flip_config(120, 91));
  AlignmentModel model;
  Hyper hyper;
  hyper.seed = 92;
  hyper.max_epochs = 15;
  train(model, data, hyper);
  save_checkpoint(model, dir.file("ck.json"));
  AlignmentModel back = load_checkpoint(dir.file("ck.json"));
  CHECK(back.audio_w == model.audio_w);
  CHECK(back.head_w == model.head_w);
  CHECK(back.audio_mean == model.audio_mean);
  save_checkpoint(back, dir.file("ck2.json"));
  CHECK(detail::read_file_bytes(dir.file("ck.json")) ==
        detail::read_file_bytes(dir.file("ck2.json")));
  // Identical predictions.
  for (const auto& ex : data.examples)
    CHECK(back.predict(ex.features) == model.predict(ex.features));
}

TEST_CASE("train report serializes to json and csv") {
  TempDir dir;
  TrainReport report;
  report.train_loss = {0.7, 0.5};
  report.val_accuracy = {0.6, 0.9};
  report.test_accuracy = 0.91;
  report.seed = 3;
  report.best_epoch = 1;
  write_json_file(dir.file("r.json"), to_json(report));
  write_train_report_csv(report, dir.file("r.csv"));
  nlohmann::json j = read_json_file(dir.file("r.json"));
  CHECK(j["test_accuracy"].get<double>() == 0.91);
  std::string csv = detail::read_file_bytes(dir.file("r.csv"));
  CHECK(csv.rfind("epoch,loss,val_acc\n", 0) == 0);
  CHECK(csv.find("\n0,0.7,0.6\n") != std::string::npos);
}
