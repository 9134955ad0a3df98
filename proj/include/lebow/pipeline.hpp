#pragma once

// File-level pipeline stages behind the CLI subcommands. Each stage reads
// its inputs from disk, writes its outputs to disk and returns a summary.
// Outputs are sorted by video_id (manifest order) and contain no
// timestamps, so reruns with the same seed are byte-identical.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lebow/config.hpp"
#include "lebow/io.hpp"

namespace lebow::pipeline {

namespace fs = std::filesystem;

/// Records which videos each stage reads, so tests can audit split hygiene.
struct AccessLog {
  struct Entry {
    std::string stage;
    std::string video_id;
  };
  std::vector<Entry> reads;
};

/// Progress messages go here; nullptr silences them. Defaults to std::cerr.
void set_log_stream(std::ostream* os);

struct GenerateSummary {
  fs::path manifest;
  fs::path config;
  std::size_t videos = 0;
};

/// Writes <out>/videos/*.lbtf (+ .json sidecars), <out>/manifest.csv and
/// <out>/synthetic.cfg. Each class is split train/test by cfg.train_ratio.
GenerateSummary gen_synthetic(const PipelineConfig& cfg, const fs::path& out_dir);

struct ExtractSummary {
  struct Video {
    std::string video_id;
    std::size_t placements = 0, emitted = 0, rejected_sparse = 0, rejected_singular = 0;
  };
  std::vector<Video> videos;
};

/// Writes <out>/<video_id>.lbbd for every manifest entry and
/// <out>/extract_report.csv with per-video counts.
ExtractSummary extract(const io::Manifest& manifest, const PipelineConfig& cfg,
                       const fs::path& out_dir);

struct CodebookSummary {
  std::size_t pool = 0;  // training descriptors available
  std::size_t used = 0;  // after the subsample cap
  KmeansTrace trace;
};

/// Pools train-split descriptors, subsamples to cfg.descriptor_cap, runs
/// k-means and writes the codebook plus "<out>.log.csv" with the
/// per-iteration dispersion.
CodebookSummary train_codebook(const io::Manifest& manifest, const fs::path& descriptor_dir,
                               const PipelineConfig& cfg, const fs::path& out,
                               AccessLog* audit = nullptr);

struct EncodeSummary {
  std::vector<std::string> encoded;
  std::vector<std::string> skipped;  // videos with no descriptors
};

/// One histogram record per video into `out` (CSV). Writes
/// "<out>.report.csv" with the per-video status. With `codes_out`, the SC
/// encoder also dumps every per-descriptor sparse code there.
EncodeSummary encode(const io::Manifest& manifest, const fs::path& descriptor_dir,
                     const fs::path& codebook_path, const PipelineConfig& cfg, const fs::path& out,
                     const fs::path& codes_out = {});

struct TrainSummary {
  std::size_t train_videos = 0;
  double training_accuracy = 0;
  // Pairs of identical training histograms carrying different labels.
  std::size_t conflicting_pairs = 0;
  bool converged = true;
};

TrainSummary train(const io::Manifest& manifest, const fs::path& histograms,
                   const PipelineConfig& cfg, const fs::path& model_out,
                   AccessLog* audit = nullptr);

struct EvaluationReport {
  std::vector<std::string> labels;
  std::vector<std::string> video_ids;
  std::vector<int> truth, predicted;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  std::vector<double> precision, recall;
  double ccr = 0;
};

/// Pure report arithmetic over (truth, prediction) pairs.
EvaluationReport summarize(std::vector<std::string> labels, std::vector<int> truth,
                           std::vector<int> predicted);

/// Classifies the test split and writes <prefix>.csv (per-video predictions),
/// <prefix>_metrics.csv, <prefix>_confusion.csv and <prefix>_summary.txt.
EvaluationReport evaluate(const io::Manifest& manifest, const fs::path& histograms,
                          const fs::path& model_path, const fs::path& report_prefix,
                          AccessLog* audit = nullptr);

}  // namespace lebow::pipeline
