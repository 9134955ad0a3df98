#include "lebow/codebook.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "lebow/random.hpp"

namespace lebow {

Codebook::Codebook(Eigen::MatrixXd atoms, CodebookMeta meta)
    : atoms_(std::move(atoms)), meta_(meta) {
  if (atoms_.cols() < 1) throw DataError("Codebook: needs at least one atom");
  const auto d = LeVectord::source_dim_for(atoms_.rows());
  if (!d) throw DataError("Codebook: atom length is not d(d+1)/2");
  if (meta_.source_d == 0) meta_.source_d = int(*d);
  if (meta_.source_d != *d) throw DataError("Codebook: source_d does not match atom length");
}

namespace {

// Nearest column by squared distance; strict '<' keeps the lowest index on ties.
Assignment nearest_squared(const Eigen::Ref<const Eigen::VectorXd>& q, const Eigen::MatrixXd& atoms) {
  Assignment best{0, std::numeric_limits<double>::infinity()};
  for (Index j = 0; j < atoms.cols(); ++j) {
    const double d2 = (atoms.col(j) - q).squaredNorm();
    if (d2 < best.distance) best = {int(j), d2};
  }
  return best;
}

}  // namespace

Assignment assign(const Eigen::Ref<const Eigen::VectorXd>& q, const Codebook& codebook) {
  if (q.size() != codebook.m()) {
    throw DataError("assign: query length " + std::to_string(q.size()) +
                    " does not match codebook dimension " + std::to_string(codebook.m()));
  }
  Assignment best = nearest_squared(q, codebook.atoms());
  best.distance = std::sqrt(best.distance);
  return best;
}

Eigen::MatrixXd embed_all(std::span<const SpdMatrixd> samples) {
  if (samples.empty()) return {};
  const Index d = samples.front().dim();
  Eigen::MatrixXd out(d * (d + 1) / 2, Index(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].dim() != d) throw DataError("embed_all: samples have unequal dimension");
    out.col(Index(i)) = log_euclidean_embed(samples[i]).values();
  }
  return out;
}

namespace {

bool same_column(const Eigen::MatrixXd& a, Index i, const Eigen::MatrixXd& b, Index j) {
  for (Index r = 0; r < a.rows(); ++r)
    if (a(r, i) != b(r, j)) return false;
  return true;
}

Eigen::MatrixXd seed_uniform(const Eigen::MatrixXd& x, int k, Rng& rng) {
  std::vector<Index> order(std::size_t(x.cols()));
  std::iota(order.begin(), order.end(), Index(0));
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd atoms(x.rows(), k);
  int chosen = 0;
  for (Index idx : order) {
    bool dup = false;
    for (int c = 0; c < chosen && !dup; ++c) dup = same_column(x, idx, atoms, c);
    if (dup) continue;
    atoms.col(chosen++) = x.col(idx);
    if (chosen == k) return atoms;
  }
  throw DataError("train_codebook: only " + std::to_string(chosen) +
                  " distinct samples, cannot seed k=" + std::to_string(k) + " distinct atoms");
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Index n = x.cols();
  Eigen::MatrixXd atoms(x.rows(), k);
  std::uniform_int_distribution<Index> first(0, n - 1);
  atoms.col(0) = x.col(first(rng));
  Eigen::VectorXd d2 = (x.colwise() - atoms.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (!(total > 0)) {
      throw DataError("train_codebook: only " + std::to_string(c) +
                      " distinct samples, cannot seed k=" + std::to_string(k) + " distinct atoms");
    }
    std::uniform_real_distribution<double> u(0.0, total);
    const double target = u(rng);
    double acc = 0;
    Index pick = -1;
    for (Index i = 0; i < n; ++i) {
      if (d2(i) <= 0) continue;
      acc += d2(i);
      pick = i;
      if (acc >= target) break;
    }
    atoms.col(c) = x.col(pick);
    d2 = d2.cwiseMin((x.colwise() - atoms.col(c)).colwise().squaredNorm().transpose());
  }
  return atoms;
}

}  // namespace

Codebook train_codebook(const Eigen::MatrixXd& x, int source_d, const KmeansConfig& cfg,
                        KmeansTrace* trace) {
  const Index n = x.cols();
  const int k = cfg.k;
  if (k < 1) throw DataError("train_codebook: k must be >= 1");
  if (cfg.n_iter < 1) throw DataError("train_codebook: n_iter must be >= 1");
  if (n < k) {
    throw DataError("train_codebook: " + std::to_string(n) + " training samples but k=" +
                    std::to_string(k));
  }
  if (x.rows() != Index(source_d) * (source_d + 1) / 2) {
    throw DataError("train_codebook: sample length does not match source_d");
  }

  Rng rng(cfg.seed);
  Eigen::MatrixXd atoms =
      cfg.seeding == SeedingMethod::Uniform ? seed_uniform(x, k, rng) : seed_plus_plus(x, k, rng);

  std::vector<int> labels(std::size_t(n), -1), previous;
  std::vector<double> dist(std::size_t(n), 0.0);
  double threshold = 0;
  double eps = 0;
  int iterations = 0;
  bool reseeded = false;
  KmeansTrace local;
  KmeansTrace& tr = trace ? *trace : local;
  tr = {};

  for (int it = 1; it <= cfg.n_iter; ++it) {
    iterations = it;
    double total = 0, total_unsquared = 0;
    for (Index i = 0; i < n; ++i) {
      const Assignment a = nearest_squared(x.col(i), atoms);
      labels[std::size_t(i)] = a.index;
      dist[std::size_t(i)] = a.distance;
      total += a.distance;
      total_unsquared += std::sqrt(a.distance);
    }
    eps = total / double(n);
    tr.dispersion.push_back(eps);
    tr.mean_distance.push_back(total_unsquared / double(n));
    if (it == 1) threshold = cfg.epsilon_tol * eps;
    if (eps < threshold || eps == 0) {
      tr.reached_tolerance = true;
      break;
    }
    // Same labels as last round and no reseeding: the update is a no-op.
    if (!reseeded && labels == previous) break;
    previous = labels;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(x.rows(), k);
    std::vector<Index> counts(std::size_t(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.col(labels[std::size_t(i)]) += x.col(i);
      ++counts[std::size_t(labels[std::size_t(i)])];
    }
    reseeded = false;
    for (int j = 0; j < k; ++j) {
      if (counts[std::size_t(j)] > 0) {
        atoms.col(j) = sums.col(j) / double(counts[std::size_t(j)]);
      } else if (cfg.empty_cluster_policy == EmptyClusterPolicy::Reseed) {
        const auto far = std::max_element(dist.begin(), dist.end());
        if (*far > 0) {
          atoms.col(j) = x.col(Index(far - dist.begin()));
          *far = 0;  // never hand the same point to two empty clusters
          reseeded = true;
        }
      }
    }
  }

  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (same_column(atoms, a, atoms, b)) {
        throw DataError("train_codebook: atoms " + std::to_string(a) + " and " +
                        std::to_string(b) + " collapsed to the same point");
      }
  return Codebook(std::move(atoms), {source_d, std::uint64_t(n), iterations, eps});
}

Codebook train_codebook(std::span<const SpdMatrixd> samples, const KmeansConfig& cfg,
                        KmeansTrace* trace) {
  if (samples.empty()) throw DataError("train_codebook: no training samples");
  return train_codebook(embed_all(samples), int(samples.front().dim()), cfg, trace);
}

}  // namespace lebow
