#pragma once

// On-disk formats. All binary formats are little-endian; see docs/formats.md
// for the byte layouts.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lebow/codebook.hpp"
#include "lebow/descriptors.hpp"
#include "lebow/encoders.hpp"
#include "lebow/kernel_svm.hpp"

namespace lebow::io {

namespace fs = std::filesystem;

// ---- trajectory features ("LBTF") ----

void write_features(const fs::path& path, const std::vector<TrajectoryFeature>& features, int d);
/// Reads the binary form, or the CSV form when the file ends in ".csv".
/// Returns the features; `d` receives the declared feature dimension.
std::vector<TrajectoryFeature> read_features(const fs::path& path, int* d = nullptr);
void write_features_csv(const fs::path& path, const std::vector<TrajectoryFeature>& features,
                        int d);
std::vector<TrajectoryFeature> read_features_csv(const fs::path& path, int* d = nullptr);

/// Sidecar "<feature file>.json" with {"width", "height", "duration"}.
fs::path metadata_path(const fs::path& feature_file);
void write_video_metadata(const fs::path& feature_file, const VideoGeometry& g);
std::optional<VideoGeometry> read_video_metadata(const fs::path& feature_file);

// ---- block descriptors ("LBBD") ----

struct DescriptorFile {
  int d = 0;
  std::size_t placements = 0;
  std::size_t rejected_sparse = 0;
  std::size_t rejected_singular = 0;
  std::vector<BlockDescriptor> blocks;
};

void write_descriptors(const fs::path& path, const DescriptorFile& file);
DescriptorFile read_descriptors(const fs::path& path);

// ---- codebook ("LBCB") ----

void write_codebook(const fs::path& path, const Codebook& codebook);
Codebook read_codebook(const fs::path& path);

// ---- SVM model ("LBSV") ----

void write_model(const fs::path& path, const SvmModel& model);
SvmModel read_model(const fs::path& path);

// ---- histograms (CSV) ----

struct HistogramRecord {
  std::string video_id;
  MultiChannelHistogram histogram;
};

/// One row per (video, channel): video_id,channel,v0,v1,... with 9
/// significant digits.
void write_histograms(const fs::path& path, const std::vector<HistogramRecord>& records);
std::vector<HistogramRecord> read_histograms(const fs::path& path);

// ---- dataset manifest (CSV: video_id,path,label,split) ----

enum class Split { Train, Test };

struct ManifestEntry {
  std::string video_id;
  fs::path path;  // resolved against the manifest's directory
  std::string label;
  Split split = Split::Train;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> labels;  // sorted vocabulary

  int label_index(const std::string& label) const;
};

Manifest read_manifest(const fs::path& path);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const fs::path& path, const Manifest& manifest);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace lebow::io
