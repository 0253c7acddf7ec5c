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
// Batch front door: every subcommand reads its inputs, writes machine-
// readable outputs plus a resolved_config.json echo into --out, and never
// mutates its inputs. All numbers land in JSON/CSV so nothing downstream
// has to parse log text.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sal/alignment_model.hpp"
#include "sal/audio_core.hpp"
#include "sal/downstream.hpp"
#include "sal/metrics.hpp"
#include "sal/synth_scenes.hpp"

namespace sal::cli {

namespace fs = std::filesystem;

inline void ensure_out_dir(const std::string& out) {
  fs::create_directories(out);
}

inline void write_resolved_config(const std::string& out, nlohmann::json j) {
  write_json_file((fs::path(out) / "resolved_config.json").string(), j);
}

// --- gen -------------------------------------------------------------------

struct GenOptions {
  std::string out_dir;
  std::string config_path;  // optional DatasetConfig JSON
  std::optional<int> count;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<std::string> source_kind;
  std::optional<std::string> trajectory_kind;
};

inline DatasetConfig resolve_gen_config(const GenOptions& opts) {
  DatasetConfig config;
  if (!opts.config_path.empty())
    config = dataset_config_from_json(read_json_file(opts.config_path));
  if (opts.count) config.count = *opts.count;
  if (opts.mode) config.mode = pretext_mode_from_name(*opts.mode);
  if (opts.seed) config.master_seed = *opts.seed;
  if (opts.snr_db) config.scene.snr_db = *opts.snr_db;
  if (opts.source_kind)
    config.scene.source_kind = source_kind_from_name(*opts.source_kind);
  if (opts.trajectory_kind)
    config.scene.trajectory_kind =
        trajectory_kind_from_name(*opts.trajectory_kind);
  config.validate();
  return config;
}

inline void run_gen(const GenOptions& opts) {
  DatasetConfig config = resolve_gen_config(opts);
  ensure_out_dir(opts.out_dir);
  generate_dataset(config, opts.out_dir);
  write_resolved_config(opts.out_dir, to_json(config));
}

// --- train -----------------------------------------------------------------

struct TrainOptions {
  std::string manifest_path;
  std::string out_dir;
  std::string config_path;  // optional Hyper JSON (plus "hidden")
  std::optional<std::uint64_t> seed;
  std::string features = "cues";
};

inline void run_train(const TrainOptions& opts) {
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  Hyper hyper;
  int hidden = 16;
  if (!opts.config_path.empty()) {
    nlohmann::json j = read_json_file(opts.config_path);
    hyper = hyper_from_json(j);
    if (j.contains("hidden")) hidden = j["hidden"].get<int>();
  }
  if (opts.seed) hyper.seed = *opts.seed;

  FeatureOptions fopts;
  fopts.mode = feature_mode_from_name(opts.features);
  PreparedDataset data = prepare_dataset(manifest, fopts);

  AlignmentModel model;
  model.hidden = hidden;
  model.feature_mode = fopts.mode;
  TrainReport report = train(model, data, hyper);

  ensure_out_dir(opts.out_dir);
  save_checkpoint(model, (fs::path(opts.out_dir) / "checkpoint.json").string());
  write_json_file((fs::path(opts.out_dir) / "train_report.json").string(),
                  to_json(report));
  write_train_report_csv(report,
                         (fs::path(opts.out_dir) / "train_report.csv").string());
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "train"},
                                       {"manifest", opts.manifest_path},
                                       {"features", opts.features},
                                       {"hidden", hidden},
                                       {"hyper", to_json(hyper)}});
  if (report.diverged) throw std::runtime_error("training diverged (NaN loss)");
}

// --- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string out_dir;
  std::string split = "test";
  bool zero_xyz = false;
};

inline double run_eval(const EvalOptions& opts) {
  AlignmentModel model = load_checkpoint(opts.checkpoint_path);
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  FeatureOptions fopts;
  fopts.mode = model.feature_mode;
  fopts.zero_xyz = opts.zero_xyz;
  PreparedDataset data = prepare_dataset(manifest, fopts);
  Split split = split_from_name(opts.split);
  auto idx = data.indices_of(split);
  double acc = evaluate_accuracy(model, data, split);

  ensure_out_dir(opts.out_dir);
  write_json_file(
      (fs::path(opts.out_dir) / "eval.json").string(),
      nlohmann::json{{"accuracy", acc},
                     {"n", idx.size()},
                     {"correct", static_cast<std::size_t>(
                                     std::llround(acc * static_cast<double>(idx.size())))},
                     {"split", opts.split},
                     {"zero_xyz", opts.zero_xyz}});
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "eval"},
                                       {"checkpoint", opts.checkpoint_path},
                                       {"manifest", opts.manifest_path},
                                       {"split", opts.split},
                                       {"zero_xyz", opts.zero_xyz}});
  return acc;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string out_dir;
  std::string split = "test";
  int bins = 32;
  bool write_tracks = true;
  bool dump_cues = false;
};

// Correlates the first principal component of held-out audio embeddings with
// the true azimuth, and emits a per-clip binned track (the textual analogue
// of projecting the embedding bin onto the frame). Frames below an energy
// floor are excluded: silence carries no spatial information.
inline nlohmann::json run_analyze(const AnalyzeOptions& opts) {
  AlignmentModel model = load_checkpoint(opts.checkpoint_path);
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  FeatureOptions fopts;
  fopts.mode = model.feature_mode;
  Split split = split_from_name(opts.split);

  std::vector<std::vector<double>> embeddings;
  std::vector<double> azimuths;
  std::vector<std::pair<std::string, std::size_t>> clip_spans;  // id, kept frames
  ensure_out_dir(opts.out_dir);
  if (opts.dump_cues)
    fs::create_directories(fs::path(opts.out_dir) / "cues");
  for (const auto* entry : manifest.split_entries(split)) {
    SceneData scene = load_entry(manifest, *entry);
    // The correlation target is the azimuth the audio actually encodes, so
    // restore the alignment recorded in the misalignment label.
    if (entry->label.misalignment == Misalignment::kChannelFlip)
      scene.audio = flip_stereo(scene.audio);
    else if (entry->label.misalignment == Misalignment::kRotation)
      scene.audio = rotate_foa(scene.audio, -entry->label.rotation_rad);
    FeatureSequence feats = assemble_features(scene.trajectory, scene.audio, fopts);
    auto emb = model.audio_embedding(feats);
    std::vector<double> energy(static_cast<std::size_t>(feats.frames()), 0.0);
    double max_energy = 0.0;
    for (int t = 0; t < feats.frames(); ++t) {
      double e = 0.0;
      for (const auto& ch : scene.audio.samples)
        e += frame_energy(std::span<const double>(
            ch.data() + static_cast<std::size_t>(t) * fopts.stft.hop,
            static_cast<std::size_t>(fopts.stft.window_len)));
      energy[static_cast<std::size_t>(t)] = e;
      max_energy = std::max(max_energy, e);
    }
    std::size_t kept = 0;
    for (int t = 0; t < feats.frames(); ++t) {
      if (energy[static_cast<std::size_t>(t)] < 1e-6 * max_energy) continue;
      embeddings.push_back(emb[static_cast<std::size_t>(t)]);
      double tc = fopts.stft.frame_center_s(t, scene.audio.sample_rate_hz);
      azimuths.push_back(scene.trajectory.azimuth_at(tc));
      ++kept;
    }
    clip_spans.emplace_back(entry->id, kept);
    if (opts.dump_cues && scene.audio.layout == Layout::kStereo)
      write_cues_csv(compute_stereo_cues(scene.audio, fopts.stft, fopts.gcc_max_lag),
                     (fs::path(opts.out_dir) / "cues" / (entry->id + ".csv")).string());
  }
  if (embeddings.empty()) throw std::invalid_argument("empty split: " + opts.split);

  PcaResult p = pca(embeddings, 1);
  std::vector<double> pc1(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) pc1[i] = p.projections[i][0];
  auto pr = pearson(pc1, azimuths);
  auto sr = spearman(pc1, azimuths);

  nlohmann::json analysis{
      {"pearson_r", pr ? *pr : 0.0},
      {"spearman_rho", sr ? *sr : 0.0},
      {"abs_pearson_r", pr ? std::fabs(*pr) : 0.0},
      {"abs_spearman_rho", sr ? std::fabs(*sr) : 0.0},
      {"correlation_defined", pr.has_value() && sr.has_value()},
      {"pc1_explained_variance", p.explained_variance[0]},
      {"degenerate", p.degenerate},
      {"n_frames", embeddings.size()},
      {"n_clips", clip_spans.size()}};
  write_json_file((fs::path(opts.out_dir) / "analysis.json").string(), analysis);

  if (opts.write_tracks) {
    double lo = *std::min_element(pc1.begin(), pc1.end());
    double hi = *std::max_element(pc1.begin(), pc1.end());
    double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out((fs::path(opts.out_dir) / "tracks.csv").string(),
                      std::ios::trunc);
    out << "clip_id,frame,pc1,pc1_bin,true_azimuth_rad\n";
    char buf[160];
    std::size_t i = 0;
    for (const auto& [id, frames] : clip_spans)
      for (std::size_t f = 0; f < frames; ++f, ++i) {
        int bin = std::min(opts.bins - 1,
                           static_cast<int>((pc1[i] - lo) / span * opts.bins));
        std::snprintf(buf, sizeof buf, "%s,%zu,%.9g,%d,%.9g\n", id.c_str(), f,
                      pc1[i], bin, azimuths[i]);
        out << buf;
      }
  }
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "analyze"},
                                       {"checkpoint", opts.checkpoint_path},
                                       {"manifest", opts.manifest_path},
                                       {"split", opts.split},
                                       {"bins", opts.bins}});
  return analysis;
}

// --- doa -------------------------------------------------------------------

struct DoaOptions {
  std::string manifest_path;
  std::string out_dir;
  std::string split = "test";
  std::string scene_config_path;  // optional SceneParams JSON (head model)
};

inline nlohmann::json run_doa(const DoaOptions& opts) {
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  SceneParams params;
  if (!opts.scene_config_path.empty())
    params = scene_params_from_json(read_json_file(opts.scene_config_path));
  Split split = split_from_name(opts.split);

  nlohmann::json clips = nlohmann::json::array();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto* entry : manifest.split_entries(split)) {
    SceneData scene = load_entry(manifest, *entry);
    // Estimation error is measured against the trajectory, so restore the
    // alignment that the stored misalignment label encodes.
    if (entry->label.misalignment == Misalignment::kChannelFlip)
      scene.audio = flip_stereo(scene.audio);
    else if (entry->label.misalignment == Misalignment::kRotation)
      scene.audio = rotate_foa(scene.audio, -entry->label.rotation_rad);
    DoaEstimate est = scene.audio.layout == Layout::kFoa
                          ? doa_from_intensity(scene.audio)
                          : doa_from_gcc(scene.audio, params);
    double max_conf = 0.0;
    for (double v : est.confidence) max_conf = std::max(max_conf, v);
    double err_sum = 0.0;
    std::size_t frames = 0;
    StftParams sp;
    for (std::size_t f = 0; f < est.size(); ++f) {
      if (est.flagged[f]) continue;
      if (est.confidence[f] < 1e-3 * max_conf) continue;  // silent gaps
      double t = sp.frame_center_s(static_cast<int>(f), scene.audio.sample_rate_hz);
      err_sum += circular_error_deg(est.azimuth_rad[f] * 180.0 / kPi,
                                    scene.trajectory.azimuth_at(t) * 180.0 / kPi);
      ++frames;
    }
    double mean_err = frames ? err_sum / static_cast<double>(frames) : 180.0;
    clips.push_back(nlohmann::json{{"id", entry->id},
                                   {"mean_error_deg", mean_err},
                                   {"frames", frames},
                                   {"method", scene.audio.layout == Layout::kFoa
                                                  ? "intensity"
                                                  : "gcc"}});
    total += mean_err;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("empty split: " + opts.split);

  nlohmann::json result{{"clips", clips},
                        {"mean_error_deg", total / static_cast<double>(count)},
                        {"n_clips", count}};
  ensure_out_dir(opts.out_dir);
  write_json_file((fs::path(opts.out_dir) / "doa.json").string(), result);
  std::ofstream csv((fs::path(opts.out_dir) / "doa.csv").string(), std::ios::trunc);
  csv << "clip_id,mean_error_deg\n";
  for (const auto& c : clips)
    csv << c["id"].get<std::string>() << "," << c["mean_error_deg"].get<double>()
        << "\n";
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "doa"},
                                       {"manifest", opts.manifest_path},
                                       {"split", opts.split}});
  return result;
}

// --- align -----------------------------------------------------------------

struct AlignOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string out_dir;
  std::string split = "test";
  double grid_deg = 10.0;
};

inline nlohmann::json run_align(const AlignOptions& opts) {
  AlignmentModel model = load_checkpoint(opts.checkpoint_path);
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  FeatureOptions fopts;
  fopts.mode = model.feature_mode;
  Split split = split_from_name(opts.split);

  nlohmann::json clips = nlohmann::json::array();
  double total = 0.0;
  std::size_t count = 0, within_step = 0;
  for (const auto* entry : manifest.split_entries(split)) {
    SceneData scene = load_entry(manifest, *entry);
    if (scene.audio.layout != Layout::kFoa)
      throw std::invalid_argument("align requires FOA scenes");
    double truth_deg = entry->label.misalignment == Misalignment::kRotation
                           ? entry->label.rotation_rad * 180.0 / kPi
                           : 0.0;
    RotationAlignmentResult r =
        rotation_alignment(scene.audio, scene.trajectory, model, opts.grid_deg, fopts);
    double err = circular_error_deg(r.theta_hat_rad * 180.0 / kPi, truth_deg);
    clips.push_back(nlohmann::json{{"id", entry->id},
                                   {"theta_true_deg", truth_deg},
                                   {"theta_hat_deg", r.theta_hat_rad * 180.0 / kPi},
                                   {"confidence", r.confidence},
                                   {"error_deg", err}});
    total += err;
    if (err <= opts.grid_deg + 1e-9) ++within_step;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("empty split: " + opts.split);

  nlohmann::json result{
      {"clips", clips},
      {"mean_error_deg", total / static_cast<double>(count)},
      {"frac_within_one_step",
       static_cast<double>(within_step) / static_cast<double>(count)},
      {"grid_deg", opts.grid_deg},
      {"n_clips", count}};
  ensure_out_dir(opts.out_dir);
  write_json_file((fs::path(opts.out_dir) / "align.json").string(), result);
  std::ofstream csv((fs::path(opts.out_dir) / "align.csv").string(), std::ios::trunc);
  csv << "clip_id,theta_true_deg,theta_hat_deg,confidence,error_deg\n";
  for (const auto& c : clips)
    csv << c["id"].get<std::string>() << "," << c["theta_true_deg"].get<double>()
        << "," << c["theta_hat_deg"].get<double>() << ","
        << c["confidence"].get<double>() << "," << c["error_deg"].get<double>()
        << "\n";
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "align"},
                                       {"checkpoint", opts.checkpoint_path},
                                       {"manifest", opts.manifest_path},
                                       {"split", opts.split},
                                       {"grid_deg", opts.grid_deg}});
  return result;
}

// --- upmix -----------------------------------------------------------------

struct UpmixOptions {
  std::string manifest_path;
  std::string out_dir;
  std::string scene_config_path;  // head model for the oracle path
  bool write_audio = false;
};

inline nlohmann::json run_upmix(const UpmixOptions& opts) {
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  SceneParams params;
  if (!opts.scene_config_path.empty())
    params = scene_params_from_json(read_json_file(opts.scene_config_path));
  UpmixMask mask = train_upmix_mask(manifest);

  ensure_out_dir(opts.out_dir);
  if (opts.write_audio) fs::create_directories(fs::path(opts.out_dir) / "audio");
  nlohmann::json clips = nlohmann::json::array();
  double sum_learned = 0.0, sum_oracle = 0.0, sum_baseline = 0.0;
  std::size_t count = 0;
  for (const auto* entry : manifest.split_entries(Split::kTest)) {
    SceneData scene = load_entry(manifest, *entry);
    AudioClip target = entry->label.misalignment == Misalignment::kChannelFlip
                           ? flip_stereo(scene.audio)
                           : scene.audio;
    AudioClip mono = downmix_to_mono(target);
    UpmixResult learned = upmix_learned(mask, mono, scene.trajectory, target);
    UpmixResult oracle = upmix_oracle(mono, scene.trajectory, params, target);
    clips.push_back(nlohmann::json{{"id", entry->id},
                                   {"learned_l1", learned.l1_complex},
                                   {"oracle_l1", oracle.l1_complex},
                                   {"baseline_l1", learned.baseline_l1}});
    sum_learned += learned.l1_complex;
    sum_oracle += oracle.l1_complex;
    sum_baseline += learned.baseline_l1;
    ++count;
    if (opts.write_audio)
      write_wav(istft_clip(learned.predicted, Layout::kStereo),
                (fs::path(opts.out_dir) / "audio" / (entry->id + "_upmix.wav")).string());
  }
  if (count == 0) throw std::invalid_argument("empty split: test");

  nlohmann::json result{{"clips", clips},
                        {"mean_learned_l1", sum_learned / static_cast<double>(count)},
                        {"mean_oracle_l1", sum_oracle / static_cast<double>(count)},
                        {"mean_baseline_l1", sum_baseline / static_cast<double>(count)},
                        {"mask_w", mask.w},
                        {"mask_b", mask.b},
                        {"n_clips", count}};
  write_json_file((fs::path(opts.out_dir) / "upmix.json").string(), result);
  std::ofstream csv((fs::path(opts.out_dir) / "upmix.csv").string(), std::ios::trunc);
  csv << "clip_id,learned_l1,oracle_l1,baseline_l1\n";
  for (const auto& c : clips)
    csv << c["id"].get<std::string>() << "," << c["learned_l1"].get<double>()
        << "," << c["oracle_l1"].get<double>() << ","
        << c["baseline_l1"].get<double>() << "\n";
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "upmix"},
                                       {"manifest", opts.manifest_path},
                                       {"write_audio", opts.write_audio}});
  return result;
}

// --- separate --------------------------------------------------------------

struct SeparateOptions {
  std::string manifest_path;
  std::string out_dir;
  std::string scene_config_path;
  int max_pairs = 0;  // 0 = all
  bool write_audio = false;
};

inline nlohmann::json run_separate(const SeparateOptions& opts) {
  DatasetManifest manifest = load_manifest(opts.manifest_path);
  SceneParams params;
  if (!opts.scene_config_path.empty())
    params = scene_params_from_json(read_json_file(opts.scene_config_path));

  auto test = manifest.split_entries(Split::kTest);
  ensure_out_dir(opts.out_dir);
  if (opts.write_audio) fs::create_directories(fs::path(opts.out_dir) / "audio");
  nlohmann::json pairs = nlohmann::json::array();
  double sum_spatial = 0.0, sum_baseline = 0.0, sum_ideal = 0.0;
  std::size_t count = 0;
  StftParams stft_params;
  for (std::size_t i = 0; i + 1 < test.size(); i += 2) {
    if (opts.max_pairs > 0 && count >= static_cast<std::size_t>(opts.max_pairs))
      break;
    SceneData a = load_entry(manifest, *test[i]);
    SceneData b = load_entry(manifest, *test[i + 1]);
    // Restore alignment for entries stored with flipped audio.
    if (test[i]->label.misalignment == Misalignment::kChannelFlip)
      a.audio = flip_stereo(a.audio);
    if (test[i + 1]->label.misalignment == Misalignment::kChannelFlip)
      b.audio = flip_stereo(b.audio);
    double peak = 0.0;
    AudioClip mixture = mix_clips(a.audio, b.audio, &peak);
    SeparationResult r = separate_spatial(mixture, a.trajectory, b.trajectory,
                                          a.audio, b.audio, params, stft_params);
    double spatial = 0.5 * (r.l1_magnitude[0] + r.l1_magnitude[1]);
    pairs.push_back(nlohmann::json{{"id_a", test[i]->id},
                                   {"id_b", test[i + 1]->id},
                                   {"l1_a", r.l1_magnitude[0]},
                                   {"l1_b", r.l1_magnitude[1]},
                                   {"spatial_l1", spatial},
                                   {"baseline_l1", r.mixture_baseline_l1},
                                   {"ideal_l1", r.ideal_mask_l1},
                                   {"mixture_peak", peak},
                                   {"clipped", peak > 1.0},
                                   {"degenerate", r.degenerate}});
    sum_spatial += spatial;
    sum_baseline += r.mixture_baseline_l1;
    sum_ideal += r.ideal_mask_l1;
    ++count;

    if (opts.write_audio) {
      Spectrogram mix = stft(mixture, stft_params);
      std::vector<double> mix_mag = detail::magnitudes(mix);
      for (int s = 0; s < 2; ++s) {
        Spectrogram est = mix;
        for (std::size_t k = 0; k < est.data.size(); ++k) {
          double ratio = mix_mag[k] > 0.0
                             ? r.estimated_magnitude[static_cast<std::size_t>(s)][k] /
                                   mix_mag[k]
                             : 0.0;
          est.data[k] *= ratio;
        }
        std::string name = (s == 0 ? test[i]->id : test[i + 1]->id) + "_sep.wav";
        write_wav(istft_clip(est, Layout::kStereo),
                  (fs::path(opts.out_dir) / "audio" / name).string());
      }
    }
  }
  if (count == 0) throw std::invalid_argument("no test pairs to separate");

  nlohmann::json result{{"pairs", pairs},
                        {"mean_spatial_l1", sum_spatial / static_cast<double>(count)},
                        {"mean_baseline_l1", sum_baseline / static_cast<double>(count)},
                        {"mean_ideal_l1", sum_ideal / static_cast<double>(count)},
                        {"n_pairs", count}};
  write_json_file((fs::path(opts.out_dir) / "separate.json").string(), result);
  std::ofstream csv((fs::path(opts.out_dir) / "separate.csv").string(), std::ios::trunc);
  csv << "id_a,id_b,spatial_l1,baseline_l1,ideal_l1,degenerate\n";
  for (const auto& p : pairs)
    csv << p["id_a"].get<std::string>() << "," << p["id_b"].get<std::string>()
        << "," << p["spatial_l1"].get<double>() << ","
        << p["baseline_l1"].get<double>() << "," << p["ideal_l1"].get<double>()
        << "," << (p["degenerate"].get<bool>() ? 1 : 0) << "\n";
  write_resolved_config(opts.out_dir,
                        nlohmann::json{{"command", "separate"},
                                       {"manifest", opts.manifest_path},
                                       {"max_pairs", opts.max_pairs}});
  return result;
}

// --- report ----------------------------------------------------------------

struct ReportOptions {
  std::string run_dir;
  std::string out_dir;
};

inline void run_report(const ReportOptions& opts) {
  static const char* kKnown[] = {"eval.json",   "analysis.json", "doa.json",
                                 "align.json",  "upmix.json",    "separate.json",
                                 "train_report.json"};
  ensure_out_dir(opts.out_dir);
  std::ofstream md((fs::path(opts.out_dir) / "report.md").string(), std::ios::trunc);
  std::ofstream csv((fs::path(opts.out_dir) / "metrics.csv").string(), std::ios::trunc);
  md << "# Run report\n\nScanned `" << opts.run_dir << "`.\n";
  csv << "source,metric,value\n";
  std::vector<fs::path> found;
  for (const auto& entry : fs::recursive_directory_iterator(opts.run_dir)) {
    if (!entry.is_regular_file()) continue;
    for (const char* name : kKnown)
      if (entry.path().filename() == name) found.push_back(entry.path());
  }
  std::sort(found.begin(), found.end());
  for (const auto& path : found) {
    nlohmann::json j = read_json_file(path.string());
    std::string rel = fs::relative(path, opts.run_dir).string();
    md << "\n## " << rel << "\n\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_number()) {
        md << "- " << it.key() << ": " << it.value().dump() << "\n";
        csv << rel << "," << it.key() << "," << it.value().dump() << "\n";
      } else if (it.value().is_boolean()) {
        md << "- " << it.key() << ": " << (it.value().get<bool>() ? "true" : "false")
           << "\n";
      }
    }
  }
  if (found.empty()) md << "\nNo result files found.\n";
}

}  // namespace sal::cli
