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
// sal: synthetic spatial-audio alignment lab. Subcommands generate labeled
// scenes, train/evaluate the alignment classifier, and run the downstream
// analyses. Exit codes: 0 success, 2 invalid input or configuration, 1 any
// other failure; errors are also emitted as JSON on stdout.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sal/cli.hpp"

namespace {

void add_optional(CLI::App* cmd, const char* flag, std::optional<double>& slot,
                  const char* help) {
  cmd->add_option_function<double>(
      flag, [&slot](const double& v) { slot = v; }, help);
}

void add_optional(CLI::App* cmd, const char* flag,
                  std::optional<std::uint64_t>& slot, const char* help) {
  cmd->add_option_function<std::uint64_t>(
      flag, [&slot](const std::uint64_t& v) { slot = v; }, help);
}

void add_optional(CLI::App* cmd, const char* flag, std::optional<int>& slot,
                  const char* help) {
  cmd->add_option_function<int>(
      flag, [&slot](const int& v) { slot = v; }, help);
}

void add_optional(CLI::App* cmd, const char* flag,
                  std::optional<std::string>& slot, const char* help) {
  cmd->add_option_function<std::string>(
      flag, [&slot](const std::string& v) { slot = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-audio alignment lab"};
  app.require_subcommand(1);

  sal::cli::GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a labeled scene dataset");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--config", gen.config_path, "Dataset config JSON");
  add_optional(gen_cmd, "--n", gen.count, "Number of scenes");
  add_optional(gen_cmd, "--mode", gen.mode, "Pretext mode: flip|rotation");
  add_optional(gen_cmd, "--seed", gen.seed, "Master seed");
  add_optional(gen_cmd, "--snr-db", gen.snr_db, "Diffuse-noise SNR (omit for clean)");
  add_optional(gen_cmd, "--source-kind", gen.source_kind,
               "white_noise_bursts|am_tone|click_train|mixed");
  add_optional(gen_cmd, "--trajectory-kind", gen.trajectory_kind,
               "static|linear_sweep|random_walk");

  sal::cli::TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the alignment classifier");
  train_cmd->add_option("--manifest", train.manifest_path, "Dataset manifest")->required();
  train_cmd->add_option("--out", train.out_dir, "Output directory")->required();
  train_cmd->add_option("--config", train.config_path, "Hyperparameter JSON");
  train_cmd->add_option("--features", train.features, "Feature mode: cues|mel");
  add_optional(train_cmd, "--seed", train.seed, "Training seed");

  sal::cli::EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "Checkpoint JSON")->required();
  eval_cmd->add_option("--manifest", eval.manifest_path, "Dataset manifest")->required();
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();
  eval_cmd->add_option("--split", eval.split, "train|val|test");
  eval_cmd->add_flag("--zero-xyz", eval.zero_xyz, "Zero directional FOA channels");

  sal::cli::AnalyzeOptions analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Embedding PCA / azimuth correlation");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint_path, "Checkpoint")->required();
  analyze_cmd->add_option("--manifest", analyze.manifest_path, "Dataset manifest")->required();
  analyze_cmd->add_option("--out", analyze.out_dir, "Output directory")->required();
  analyze_cmd->add_option("--split", analyze.split, "train|val|test");
  analyze_cmd->add_option("--bins", analyze.bins, "Track bin count");
  analyze_cmd->add_flag("--dump-cues", analyze.dump_cues, "Write per-clip cue CSVs");

  sal::cli::DoaOptions doa;
  CLI::App* doa_cmd = app.add_subcommand("doa", "Classical DOA estimation");
  doa_cmd->add_option("--manifest", doa.manifest_path, "Dataset manifest")->required();
  doa_cmd->add_option("--out", doa.out_dir, "Output directory")->required();
  doa_cmd->add_option("--split", doa.split, "train|val|test");
  doa_cmd->add_option("--scene-config", doa.scene_config_path, "SceneParams JSON");

  sal::cli::AlignOptions align;
  CLI::App* align_cmd = app.add_subcommand("align", "Rotation alignment recovery");
  align_cmd->add_option("--checkpoint", align.checkpoint_path, "Checkpoint")->required();
  align_cmd->add_option("--manifest", align.manifest_path, "Dataset manifest")->required();
  align_cmd->add_option("--out", align.out_dir, "Output directory")->required();
  align_cmd->add_option("--split", align.split, "train|val|test");
  align_cmd->add_option("--grid-deg", align.grid_deg, "Candidate grid step (deg)");

  sal::cli::UpmixOptions upmix;
  CLI::App* upmix_cmd = app.add_subcommand("upmix", "Mono-to-stereo upmixing");
  upmix_cmd->add_option("--manifest", upmix.manifest_path, "Dataset manifest")->required();
  upmix_cmd->add_option("--out", upmix.out_dir, "Output directory")->required();
  upmix_cmd->add_option("--scene-config", upmix.scene_config_path, "SceneParams JSON");
  upmix_cmd->add_flag("--write-audio", upmix.write_audio, "Write upmixed WAVs");

  sal::cli::SeparateOptions separate;
  CLI::App* separate_cmd = app.add_subcommand("separate", "Spatial source separation");
  separate_cmd->add_option("--manifest", separate.manifest_path, "Dataset manifest")->required();
  separate_cmd->add_option("--out", separate.out_dir, "Output directory")->required();
  separate_cmd->add_option("--scene-config", separate.scene_config_path, "SceneParams JSON");
  separate_cmd->add_option("--pairs", separate.max_pairs, "Max pairs (0 = all)");
  separate_cmd->add_flag("--write-audio", separate.write_audio, "Write separated WAVs");

  sal::cli::ReportOptions report;
  CLI::App* report_cmd = app.add_subcommand("report", "Aggregate run outputs");
  report_cmd->add_option("--run-dir", report.run_dir, "Directory to scan")->required();
  report_cmd->add_option("--out", report.out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) sal::cli::run_gen(gen);
    if (train_cmd->parsed()) sal::cli::run_train(train);
    if (eval_cmd->parsed()) sal::cli::run_eval(eval);
    if (analyze_cmd->parsed()) sal::cli::run_analyze(analyze);
    if (doa_cmd->parsed()) sal::cli::run_doa(doa);
    if (align_cmd->parsed()) sal::cli::run_align(align);
    if (upmix_cmd->parsed()) sal::cli::run_upmix(upmix);
    if (separate_cmd->parsed()) sal::cli::run_separate(separate);
    if (report_cmd->parsed()) sal::cli::run_report(report);
  } catch (const std::invalid_argument& e) {
    std::cout << nlohmann::json{{"error", e.what()}}.dump() << std::endl;
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cout << nlohmann::json{{"error", e.what()}}.dump() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cout << nlohmann::json{{"error", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
