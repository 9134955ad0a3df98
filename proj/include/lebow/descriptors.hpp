#pragma once

// Block covariance descriptors from trajectory features: direct covariance,
// the integral-video summed-area tables used for fast box queries, block
// extraction over an overlapping spatio-temporal lattice, and the synthetic
// trajectory generator standing in for a real video front end.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lebow/manifold.hpp"

namespace lebow {

struct TrajectoryFeature {
  float x = 0;
  float y = 0;
  std::uint32_t t = 0;
  Eigen::VectorXd feature;
};

/// Spatial extent in pixels, temporal extent in frames.
struct VideoGeometry {
  int width = 360;
  int height = 240;
  int duration = 60;
};

struct BlockSpec {
  int block_w = 0, block_h = 0, block_t = 0;
  int stride_x = 0, stride_y = 0, stride_t = 0;
  int min_samples = 0;

  /// Half-extent blocks with half-block strides (a 3x3x3 lattice) and
  /// min_samples = d + 1.
  static BlockSpec defaults_for(const VideoGeometry& g, int d);
  void validate(int d) const;
};

struct BlockDescriptor {
  SpdMatrixd cov;
  double cx = 0, cy = 0, ct = 0;  // normalised block centre, each in [0,1]
  std::uint32_t count = 0;
};

/// Unbiased sample covariance (1/(n-1) normalisation). Requires n >= 2.
SymMatrixd covariance(std::span<const Eigen::VectorXd> observations);

/// Covariance from accumulated sums: (S2 - S1 S1^T / n) / (n - 1).
SymMatrixd covariance_from_sums(double n, const Eigen::VectorXd& s1, const Eigen::MatrixXd& s2);

struct GridResolution {
  int cells_x = 0, cells_y = 0, cells_t = 0;
  double cell_w = 1, cell_h = 1, cell_t = 1;  // cell size in pixels / frames
};

/// Cell grid aligned with the block lattice: cell size is gcd(extent, stride)
/// on each axis, so every block is an exact union of cells.
GridResolution grid_for(const VideoGeometry& g, const BlockSpec& layout);

/// Summed-volume tables of (n, sum o, sum o o^T) over a 3-D cell grid.
/// The second-moment table is stored as a packed upper triangle.
class IntegralStats {
 public:
  struct BoxSums {
    double n = 0;
    Eigen::VectorXd sum;
    Eigen::MatrixXd outer;  // full symmetric d x d
  };

  /// One pass over the features plus one pass over the cells.
  static IntegralStats build(std::span<const TrajectoryFeature> features, const GridResolution& grid,
                             int d);

  /// Sums over the half-open cell box [x0,x1) x [y0,y1) x [t0,t1).
  BoxSums query(int x0, int x1, int y0, int y1, int t0, int t1) const;

  const GridResolution& grid() const { return grid_; }
  int dim() const { return d_; }

  /// Cell index of a feature; throws DataError outside the grid.
  std::array<int, 3> cell_of(const TrajectoryFeature& f) const;

 private:
  std::size_t offset(int x, int y, int t) const {
    return ((std::size_t(t) * (grid_.cells_y + 1) + std::size_t(y)) * (grid_.cells_x + 1) +
            std::size_t(x)) *
           stride_;
  }

  GridResolution grid_;
  int d_ = 0;
  std::size_t stride_ = 0;  // 1 + d + d(d+1)/2 doubles per corner
  std::vector<double> table_;
};

struct ExtractionResult {
  std::vector<BlockDescriptor> blocks;
  std::size_t placements = 0;
  std::size_t rejected_sparse = 0;    // fewer than min_samples trajectories
  std::size_t rejected_singular = 0;  // regularised covariance still not SPD
  std::size_t rejected() const { return rejected_sparse + rejected_singular; }
};

/// One descriptor per lattice placement with at least min_samples
/// trajectories. Covariances come from IntegralStats box queries and are
/// regularised by + regularizer * tr(C)/d * I before SPD validation.
/// Placements are visited in (t, y, x) order.
ExtractionResult extract_blocks(std::span<const TrajectoryFeature> features,
                                const VideoGeometry& geometry, const BlockSpec& layout,
                                double regularizer = 1e-6);

struct SyntheticOptions {
  VideoGeometry geometry;
  // Per-video multiplicative jitter on the class mixing matrix.
  double video_jitter = 0.15;
};

/// Deterministic trajectory features for one video of class `class_id`.
/// Every class has its own feature mixing matrix, mean and vertical motion
/// band; `seed` drives the per-video variation and the sampling.
std::vector<TrajectoryFeature> generate_synthetic(int class_id, std::size_t num_trajectories, int d,
                                                  std::uint64_t seed,
                                                  const SyntheticOptions& opts = {});

}  // namespace lebow
