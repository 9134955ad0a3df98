#pragma once

// Visual dictionary learning with k-means in the log-Euclidean space
// (the tangent space at the identity), and nearest-atom assignment.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "lebow/manifold.hpp"

namespace lebow {

enum class EmptyClusterPolicy {
  Reseed,  // move the empty atom to the point farthest from its own centre
  Keep,    // leave the atom where it was
};

enum class SeedingMethod {
  Uniform,      // k distinct samples drawn uniformly at random
  KMeansPlusPlus,
};

struct KmeansConfig {
  int k = 2000;
  int n_iter = 100;
  // Stop once the average dispersion drops below epsilon_tol times the
  // dispersion of the initial assignment.
  double epsilon_tol = 1e-4;
  std::uint64_t seed = 0;
  EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::Reseed;
  SeedingMethod seeding = SeedingMethod::Uniform;
};

struct CodebookMeta {
  int source_d = 0;
  std::uint64_t training_count = 0;
  int iterations = 0;
  double final_dispersion = 0;
};

class Codebook {
 public:
  Codebook() = default;
  /// `atoms` is m x k, one atom per column.
  Codebook(Eigen::MatrixXd atoms, CodebookMeta meta);

  int k() const { return int(atoms_.cols()); }
  int m() const { return int(atoms_.rows()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  LeVectord atom(int j) const { return LeVectord(atoms_.col(j)); }
  const CodebookMeta& meta() const { return meta_; }

 private:
  Eigen::MatrixXd atoms_;
  CodebookMeta meta_;
};

struct Assignment {
  int index = -1;
  double distance = 0;
};

/// Nearest atom by Euclidean distance; ties go to the lowest index.
Assignment assign(const Eigen::Ref<const Eigen::VectorXd>& q, const Codebook& codebook);
inline Assignment assign(const LeVectord& q, const Codebook& codebook) {
  return assign(q.values(), codebook);
}

struct KmeansTrace {
  // Average squared distance to the assigned atom, one entry per assignment
  // step. This is the quantity the mean update never increases.
  std::vector<double> dispersion;
  // Average unsquared distance, for reporting only.
  std::vector<double> mean_distance;
  bool reached_tolerance = false;
};

/// k-means over pre-embedded samples (m x N, one sample per column).
Codebook train_codebook(const Eigen::MatrixXd& samples, int source_d, const KmeansConfig& cfg,
                        KmeansTrace* trace = nullptr);

/// Embeds every matrix with Vec(log X) and runs k-means on the result.
Codebook train_codebook(std::span<const SpdMatrixd> samples, const KmeansConfig& cfg,
                        KmeansTrace* trace = nullptr);

/// Column-stacked log-Euclidean embeddings.
Eigen::MatrixXd embed_all(std::span<const SpdMatrixd> samples);

}  // namespace lebow
