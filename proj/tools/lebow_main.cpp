// lebow: command-line driver for the log-Euclidean bag-of-words pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lebow/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lebow;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  PipelineConfig load(PipelineConfig base = {}) const {
    PipelineConfig cfg = config.empty() ? base : load_config(config, base);
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value configuration file");
  cmd->add_option("--seed", c.seed, "master random seed (overrides the config)");
  cmd->add_flag("-q,--quiet", c.quiet, "suppress progress messages");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-Euclidean bag-of-words pipeline for sets of SPD covariance descriptors"};
  app.require_subcommand(1);

  Common common;
  std::string manifest, out, descriptors, codebook, histograms, model, codes;

  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic trajectory-feature dataset");
  add_common(gen, common);
  gen->add_option("--out", out, "output directory")->required();

  auto* ext = app.add_subcommand("extract", "compute block covariance descriptors per video");
  add_common(ext, common);
  ext->add_option("--manifest", manifest, "dataset manifest CSV")->required();
  ext->add_option("--out", out, "descriptor output directory")->required();

  auto* tcb = app.add_subcommand("train-codebook", "learn the visual dictionary");
  add_common(tcb, common);
  tcb->add_option("--manifest", manifest, "dataset manifest CSV")->required();
  tcb->add_option("--descriptors", descriptors, "descriptor directory")->required();
  tcb->add_option("--out", out, "codebook file")->required();

  auto* enc = app.add_subcommand("encode", "encode every video into histograms");
  add_common(enc, common);
  enc->add_option("--manifest", manifest, "dataset manifest CSV")->required();
  enc->add_option("--descriptors", descriptors, "descriptor directory")->required();
  enc->add_option("--codebook", codebook, "codebook file")->required();
  enc->add_option("--out", out, "histogram CSV")->required();
  enc->add_option("--codes-out", codes, "dump per-descriptor sparse codes (sc encoder)");

  auto* trn = app.add_subcommand("train", "train the one-vs-all kernel SVM");
  add_common(trn, common);
  trn->add_option("--manifest", manifest, "dataset manifest CSV")->required();
  trn->add_option("--histograms", histograms, "histogram CSV")->required();
  trn->add_option("--out", out, "model file")->required();

  auto* evl = app.add_subcommand("evaluate", "classify the test split and write reports");
  add_common(evl, common);
  evl->add_option("--manifest", manifest, "dataset manifest CSV")->required();
  evl->add_option("--histograms", histograms, "histogram CSV")->required();
  evl->add_option("--model", model, "model file")->required();
  evl->add_option("--out", out, "report path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig cfg =
        common.load(gen->parsed() ? PipelineConfig::synthetic_defaults() : PipelineConfig{});
    if (common.quiet) pipeline::set_log_stream(nullptr);
    if (gen->parsed()) {
      pipeline::gen_synthetic(cfg, out);
    } else if (ext->parsed()) {
      pipeline::extract(io::read_manifest(manifest), cfg, out);
    } else if (tcb->parsed()) {
      pipeline::train_codebook(io::read_manifest(manifest), descriptors, cfg, out);
    } else if (enc->parsed()) {
      pipeline::encode(io::read_manifest(manifest), descriptors, codebook, cfg, out, codes);
    } else if (trn->parsed()) {
      const auto s = pipeline::train(io::read_manifest(manifest), histograms, cfg, out);
      std::cout << "training accuracy: " << 100 * s.training_accuracy << "%\n";
    } else if (evl->parsed()) {
      const auto r = pipeline::evaluate(io::read_manifest(manifest), histograms, model, out);
      std::cout << "CCR: " << 100 * r.ccr << "%\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
