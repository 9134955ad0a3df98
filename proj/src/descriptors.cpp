#include "lebow/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lebow/random.hpp"

namespace lebow {

namespace {

std::size_t packed_size(int d) { return std::size_t(d) * std::size_t(d + 1) / 2; }

}  // namespace

BlockSpec BlockSpec::defaults_for(const VideoGeometry& g, int d) {
  BlockSpec s;
  s.block_w = std::max(1, g.width / 2);
  s.block_h = std::max(1, g.height / 2);
  s.block_t = std::max(1, g.duration / 2);
  s.stride_x = std::max(1, s.block_w / 2);
  s.stride_y = std::max(1, s.block_h / 2);
  s.stride_t = std::max(1, s.block_t / 2);
  s.min_samples = d + 1;
  return s;
}

void BlockSpec::validate(int d) const {
  if (block_w <= 0 || block_h <= 0 || block_t <= 0) {
    throw DataError("BlockSpec: block extents must be positive");
  }
  if (stride_x <= 0 || stride_y <= 0 || stride_t <= 0) {
    throw DataError("BlockSpec: strides must be positive");
  }
  if (stride_x > block_w || stride_y > block_h || stride_t > block_t) {
    throw DataError("BlockSpec: stride larger than block extent leaves gaps");
  }
  if (min_samples < d + 1) {
    throw DataError("BlockSpec: min_samples=" + std::to_string(min_samples) +
                    " cannot give a full-rank covariance for d=" + std::to_string(d) +
                    " (need >= d+1)");
  }
}

SymMatrixd covariance(std::span<const Eigen::VectorXd> observations) {
  if (observations.size() < 2) {
    throw DataError("covariance: need at least 2 observations, got " +
                    std::to_string(observations.size()));
  }
  const Index d = observations.front().size();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& o : observations) {
    if (o.size() != d) throw DataError("covariance: observations have unequal length");
    mu += o;
  }
  mu /= double(observations.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const auto& o : observations) {
    const Eigen::VectorXd z = o - mu;
    c.selfadjointView<Eigen::Upper>().rankUpdate(z);
  }
  c = c.selfadjointView<Eigen::Upper>();
  return SymMatrixd(c / double(observations.size() - 1));
}

SymMatrixd covariance_from_sums(double n, const Eigen::VectorXd& s1, const Eigen::MatrixXd& s2) {
  if (n < 2) throw DataError("covariance_from_sums: need n >= 2");
  return SymMatrixd((s2 - s1 * s1.transpose() / n) / (n - 1));
}

GridResolution grid_for(const VideoGeometry& g, const BlockSpec& layout) {
  if (g.width <= 0 || g.height <= 0 || g.duration <= 0) {
    throw DataError("grid_for: video geometry must be positive");
  }
  GridResolution r;
  r.cell_w = std::gcd(layout.block_w, layout.stride_x);
  r.cell_h = std::gcd(layout.block_h, layout.stride_y);
  r.cell_t = std::gcd(layout.block_t, layout.stride_t);
  r.cells_x = int(std::ceil(g.width / r.cell_w));
  r.cells_y = int(std::ceil(g.height / r.cell_h));
  r.cells_t = int(std::ceil(g.duration / r.cell_t));
  return r;
}

std::array<int, 3> IntegralStats::cell_of(const TrajectoryFeature& f) const {
  const int cx = int(std::floor(double(f.x) / grid_.cell_w));
  const int cy = int(std::floor(double(f.y) / grid_.cell_h));
  const int ct = int(std::floor(double(f.t) / grid_.cell_t));
  if (cx < 0 || cy < 0 || ct < 0 || cx >= grid_.cells_x || cy >= grid_.cells_y ||
      ct >= grid_.cells_t) {
    throw DataError("IntegralStats: trajectory at (" + std::to_string(f.x) + ", " +
                    std::to_string(f.y) + ", " + std::to_string(f.t) + ") is outside the video");
  }
  return {cx, cy, ct};
}

IntegralStats IntegralStats::build(std::span<const TrajectoryFeature> features,
                                   const GridResolution& grid, int d) {
  if (grid.cells_x <= 0 || grid.cells_y <= 0 || grid.cells_t <= 0) {
    throw DataError("IntegralStats: grid resolution must be positive on every axis");
  }
  if (d < 1) throw DataError("IntegralStats: feature dimension must be >= 1");
  IntegralStats s;
  s.grid_ = grid;
  s.d_ = d;
  s.stride_ = 1 + std::size_t(d) + packed_size(d);
  s.table_.assign(std::size_t(grid.cells_x + 1) * (grid.cells_y + 1) * (grid.cells_t + 1) *
                      s.stride_,
                  0.0);

  // Per-cell sums land at corner (x+1, y+1, t+1); row/plane 0 stays zero.
  for (const auto& f : features) {
    if (f.feature.size() != d) {
      throw DataError("IntegralStats: feature length " + std::to_string(f.feature.size()) +
                      " does not match d=" + std::to_string(d));
    }
    const auto [cx, cy, ct] = s.cell_of(f);
    double* cell = &s.table_[s.offset(cx + 1, cy + 1, ct + 1)];
    cell[0] += 1.0;
    for (int i = 0; i < d; ++i) cell[1 + i] += f.feature(i);
    double* outer = cell + 1 + d;
    for (int i = 0, k = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++k) outer[k] += f.feature(i) * f.feature(j);
  }

  // Separable cumulative sums along x, then y, then t.
  const std::size_t w = s.stride_;
  for (int t = 1; t <= grid.cells_t; ++t)
    for (int y = 1; y <= grid.cells_y; ++y)
      for (int x = 2; x <= grid.cells_x; ++x) {
        double* cur = &s.table_[s.offset(x, y, t)];
        const double* prev = &s.table_[s.offset(x - 1, y, t)];
        for (std::size_t k = 0; k < w; ++k) cur[k] += prev[k];
      }
  for (int t = 1; t <= grid.cells_t; ++t)
    for (int y = 2; y <= grid.cells_y; ++y)
      for (int x = 1; x <= grid.cells_x; ++x) {
        double* cur = &s.table_[s.offset(x, y, t)];
        const double* prev = &s.table_[s.offset(x, y - 1, t)];
        for (std::size_t k = 0; k < w; ++k) cur[k] += prev[k];
      }
  for (int t = 2; t <= grid.cells_t; ++t)
    for (int y = 1; y <= grid.cells_y; ++y)
      for (int x = 1; x <= grid.cells_x; ++x) {
        double* cur = &s.table_[s.offset(x, y, t)];
        const double* prev = &s.table_[s.offset(x, y, t - 1)];
        for (std::size_t k = 0; k < w; ++k) cur[k] += prev[k];
      }
  return s;
}

IntegralStats::BoxSums IntegralStats::query(int x0, int x1, int y0, int y1, int t0,
                                            int t1) const {
  if (x0 < 0 || y0 < 0 || t0 < 0 || x1 > grid_.cells_x || y1 > grid_.cells_y ||
      t1 > grid_.cells_t || x0 > x1 || y0 > y1 || t0 > t1) {
    throw DataError("IntegralStats::query: box outside the grid");
  }
  std::vector<double> acc(stride_, 0.0);
  auto add = [&](int x, int y, int t, double sign) {
    const double* c = &table_[offset(x, y, t)];
    for (std::size_t k = 0; k < stride_; ++k) acc[k] += sign * c[k];
  };
  add(x1, y1, t1, +1);
  add(x0, y1, t1, -1);
  add(x1, y0, t1, -1);
  add(x1, y1, t0, -1);
  add(x0, y0, t1, +1);
  add(x0, y1, t0, +1);
  add(x1, y0, t0, +1);
  add(x0, y0, t0, -1);

  BoxSums out;
  out.n = acc[0];
  out.sum = Eigen::Map<const Eigen::VectorXd>(acc.data() + 1, d_);
  out.outer.resize(d_, d_);
  for (int i = 0, k = 0; i < d_; ++i)
    for (int j = i; j < d_; ++j, ++k) out.outer(i, j) = out.outer(j, i) = acc[1 + d_ + k];
  return out;
}

ExtractionResult extract_blocks(std::span<const TrajectoryFeature> features,
                                const VideoGeometry& geometry, const BlockSpec& layout,
                                double regularizer) {
  if (features.empty()) throw DataError("extract_blocks: no trajectory features");
  if (regularizer < 0) throw DataError("extract_blocks: regularizer must be >= 0");
  const int d = int(features.front().feature.size());
  layout.validate(d);
  const GridResolution grid = grid_for(geometry, layout);
  const IntegralStats stats = IntegralStats::build(features, grid, d);

  const int bw = int(layout.block_w / grid.cell_w);
  const int bh = int(layout.block_h / grid.cell_h);
  const int bt = int(layout.block_t / grid.cell_t);

  ExtractionResult out;
  for (int t0 = 0; t0 + layout.block_t <= geometry.duration; t0 += layout.stride_t) {
    for (int y0 = 0; y0 + layout.block_h <= geometry.height; y0 += layout.stride_y) {
      for (int x0 = 0; x0 + layout.block_w <= geometry.width; x0 += layout.stride_x) {
        ++out.placements;
        const int cx0 = int(x0 / grid.cell_w), cy0 = int(y0 / grid.cell_h),
                  ct0 = int(t0 / grid.cell_t);
        const auto sums = stats.query(cx0, cx0 + bw, cy0, cy0 + bh, ct0, ct0 + bt);
        if (sums.n < layout.min_samples) {
          ++out.rejected_sparse;
          continue;
        }
        Eigen::MatrixXd c = covariance_from_sums(sums.n, sums.sum, sums.outer).matrix();
        c.diagonal().array() += regularizer * c.trace() / d;
        try {
          BlockDescriptor b{SpdMatrixd(c), (x0 + 0.5 * layout.block_w) / geometry.width,
                            (y0 + 0.5 * layout.block_h) / geometry.height,
                            (t0 + 0.5 * layout.block_t) / geometry.duration,
                            std::uint32_t(std::llround(sums.n))};
          out.blocks.push_back(std::move(b));
        } catch (const DataError&) {
          ++out.rejected_singular;
        }
      }
    }
  }
  return out;
}

namespace {

struct ClassModel {
  // feature = mean + M(y) z, with M blended linearly from top to bottom of
  // the frame: the motion statistics of a class depend on where it happens.
  Eigen::MatrixXd mixing_top, mixing_bottom;
  Eigen::VectorXd mean;
  double band_y = 0.5;     // vertical centre of motion, fraction of height
  double velocity_x = 0;   // pixels per frame
};

ClassModel class_model(int class_id, int d) {
  Rng rng(stream_seed(0x1eb0f5eedull, "synthetic-class", std::uint64_t(class_id) * 4096 + d));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  const auto draw_mixing = [&] {
    Eigen::MatrixXd g(d, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::VectorXd scales(d);
    for (Index i = 0; i < d; ++i) scales(i) = std::exp(unif(rng));
    return Eigen::MatrixXd(q * scales.asDiagonal());
  };
  ClassModel m;
  m.mixing_top = draw_mixing();
  m.mixing_bottom = draw_mixing();
  m.mean.resize(d);
  for (Index i = 0; i < d; ++i) m.mean(i) = 0.5 * normal(rng);
  m.band_y = 0.25 + 0.5 * std::fmod(0.618034 * class_id + 0.2, 1.0);
  m.velocity_x = (class_id % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.5 * (class_id % 3));
  return m;
}

}  // namespace

std::vector<TrajectoryFeature> generate_synthetic(int class_id, std::size_t num_trajectories, int d,
                                                  std::uint64_t seed,
                                                  const SyntheticOptions& opts) {
  if (d < 2) throw DataError("generate_synthetic: feature dimension must be >= 2");
  if (class_id < 0) throw DataError("generate_synthetic: class id must be >= 0");
  const VideoGeometry& g = opts.geometry;
  if (g.width <= 0 || g.height <= 0 || g.duration <= 0) {
    throw DataError("generate_synthetic: video geometry must be positive");
  }
  const ClassModel cls = class_model(class_id, d);

  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> frame(0, std::uint32_t(g.duration - 1));

  Eigen::MatrixXd jitter(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) jitter(i, j) = normal(rng);
  const double gain = std::exp(0.1 * normal(rng));
  const Eigen::MatrixXd perturb =
      gain * (Eigen::MatrixXd::Identity(d, d) + opts.video_jitter / std::sqrt(double(d)) * jitter);
  const Eigen::MatrixXd top = cls.mixing_top * perturb, bottom = cls.mixing_bottom * perturb;

  std::vector<TrajectoryFeature> out;
  out.reserve(num_trajectories);
  Eigen::VectorXd z(d);
  const auto clamp_to = [](double v, int extent) {
    return float(std::clamp(v, 0.0, std::nextafter(double(extent), 0.0)));
  };
  for (std::size_t n = 0; n < num_trajectories; ++n) {
    TrajectoryFeature f;
    f.t = frame(rng);
    const double x0 = unif01(rng) * g.width;
    double x = std::fmod(x0 + cls.velocity_x * f.t, double(g.width));
    if (x < 0) x += g.width;
    f.x = clamp_to(x, g.width);
    f.y = clamp_to((cls.band_y + 0.3 * normal(rng)) * g.height, g.height);
    // float rounding can land exactly on the upper edge
    if (f.x >= float(g.width)) f.x = std::nextafter(float(g.width), 0.0f);
    if (f.y >= float(g.height)) f.y = std::nextafter(float(g.height), 0.0f);
    for (Index i = 0; i < d; ++i) z(i) = normal(rng);
    // Stored as float on disk; round here so in-memory and on-disk agree.
    const double w = double(f.y) / g.height;
    f.feature = (cls.mean + (1 - w) * (top * z) + w * (bottom * z)).cast<float>().cast<double>();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace lebow
