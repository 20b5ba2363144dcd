// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oneshot/commands.hpp"
#include "oneshot/log.hpp"

int main(int argc, char** argv) {
  using namespace oneshot;
  CLI::App app{"oneshot: train a generator from a single image or a single short video"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  ExtractFramesOptions extract;
  auto* ex = app.add_subcommand("extract-frames", "Decode a video into frame_%05d.png files (needs ffmpeg)");
  ex->add_option("video", extract.video, "Input video file")->required();
  ex->add_option("-o,--out", extract.out_dir, "Output directory for the frames")->required();
  ex->add_option("--fps", extract.fps, "Frames per second to extract")->capture_default_str();
  ex->add_option("--decoder", extract.decoder, "Decoder executable (ffmpeg-compatible)")->capture_default_str();
  ex->add_flag("--force", extract.force, "Replace an existing output directory");

  TrainOptions train;
  std::string train_out, train_resume;
  auto* tr = app.add_subcommand("train", "Train from a run config; writes config.resolved, losses.csv, "
                                         "checkpoints/ and samples/ under the run directory");
  tr->add_option("-c,--config", train.config, "Run config file (key = value lines)")->required();
  tr->add_option("-o,--out", train_out, "Run directory (overrides out_dir in the config)");
  tr->add_option("--resume", train_resume, "Checkpoint to continue from (same config)");
  tr->add_flag("--force", train.force, "Replace an existing run directory");

  SampleOptions sample;
  auto* sa = app.add_subcommand("sample", "Write n samples and a grid from a checkpoint");
  sa->add_option("--checkpoint", sample.checkpoint, "Checkpoint file")->required();
  sa->add_option("-n", sample.n, "Number of samples")->capture_default_str();
  sa->add_option("--seed", sample.seed, "Latent seed")->capture_default_str();
  sa->add_option("-o,--out", sample.out_dir, "Output directory")->required();
  sa->add_flag("--force", sample.force, "Replace an existing output directory");

  EvaluateOptions eval;
  std::string eval_mode, eval_config, eval_report;
  std::int64_t eval_n = 0;
  auto* ev = app.add_subcommand("evaluate", "Compute SIFID, diversity and distance-to-train; prints JSON");
  ev->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  ev->add_option("--input", eval.input, "Training image file or frame directory")->required();
  ev->add_option("--mode", eval_mode, "single_image or single_video (default: by input type)");
  ev->add_option("-c,--config", eval_config, "Run config supplying eval_* settings");
  auto* n_opt = ev->add_option("--n-generated", eval_n, "Number of generated samples");
  ev->add_option("--report", eval_report, "Report path (default: <checkpoint>.eval.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  log::set_level(quiet ? log::Level::kWarn : log::Level::kInfo);

  if (*ex) return cmd_extract_frames(extract, std::cerr);
  if (*tr) {
    if (!train_out.empty()) train.out_dir = train_out;
    if (!train_resume.empty()) train.resume = train_resume;
    return cmd_train(train, std::cerr);
  }
  if (*sa) return cmd_sample(sample, std::cerr);
  if (*ev) {
    if (!eval_mode.empty()) {
      try {
        eval.mode = parse_source_mode(eval_mode);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
      }
    }
    if (!eval_config.empty()) eval.config = eval_config;
    if (!eval_report.empty()) eval.report = eval_report;
    if (n_opt->count() > 0) eval.n_generated = eval_n;
    return cmd_evaluate(eval, std::cout, std::cerr);
  }
  return kExitUsage;
}
