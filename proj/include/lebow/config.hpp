#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lebow/codebook.hpp"
#include "lebow/descriptors.hpp"
#include "lebow/kernel_svm.hpp"

namespace lebow {

enum class EncoderKind { HA, STP, SC };

std::string to_string(EncoderKind e);

/// Every tunable of the pipeline. Loaded from a plain "key = value" text
/// file; '#' starts a comment. See README.md for the key list.
struct PipelineConfig {
  int d = 72;
  // Used for feature files without a metadata sidecar.
  VideoGeometry geometry;
  // Zero means "derive from the video geometry" (half-extent blocks,
  // half-block strides, min_samples = d + 1).
  int block_w = 0, block_h = 0, block_t = 0;
  int stride_x = 0, stride_y = 0, stride_t = 0;
  int min_samples = 0;
  double regularizer = 1e-6;

  KmeansConfig kmeans;  // kmeans.seed is derived from `seed`
  std::size_t descriptor_cap = 30000;

  EncoderKind encoder = EncoderKind::HA;
  double lambda = 0.15;
  ChannelMetric sc_metric = ChannelMetric::Euclidean;

  double svm_c = 100;
  std::uint64_t seed = 0;

  // gen-synthetic
  int classes = 3;
  int videos_per_class = 20;
  std::size_t trajectories = 1500;
  double train_ratio = 0.7;
  double video_jitter = 0.15;

  /// Desk-scale starting point for gen-synthetic: d = 12, k = 64.
  static PipelineConfig synthetic_defaults();

  BlockSpec block_spec_for(const VideoGeometry& g) const;

  /// Applies one key/value pair; throws UsageError for unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
};

/// Keys in the file override `base`.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

}  // namespace lebow
