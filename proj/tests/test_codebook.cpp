#include <cmath>

#include "doctest.h"
#include "lebow/codebook.hpp"
#include "test_support.hpp"

using namespace lebow;

namespace {

// m = 3 (source d = 2) samples drawn around the given centres.
Eigen::MatrixXd blobs(lebow::testing::Rng& rng, const std::vector<Eigen::Vector3d>& centres,
                      int per_blob, double sigma) {
  std::normal_distribution<double> n(0, sigma);
  Eigen::MatrixXd x(3, Index(centres.size()) * per_blob);
  Index col = 0;
  for (const auto& c : centres)
    for (int i = 0; i < per_blob; ++i, ++col) x.col(col) = c + Eigen::Vector3d(n(rng), n(rng), n(rng));
  return x;
}

KmeansConfig config(int k, std::uint64_t seed = 1) {
  KmeansConfig c;
  c.k = k;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("assign examples") {
  Eigen::MatrixXd atoms(3, 5);
  atoms << 0, 1, 2, 3, 1,  //
      0, 0, 0, 0, 2,       //
      0, 0, 0, 0, 0;
  const Codebook cb(atoms, {});
  CHECK(cb.meta().source_d == 2);

  const auto exact = assign(Eigen::Vector3d(atoms.col(3)), cb);
  CHECK(exact.index == 3);
  CHECK(exact.distance == 0);

  // (1, 1, 0) is distance 1 from atoms 1 and 4.
  const auto tie = assign(Eigen::Vector3d(1, 1, 0), cb);
  CHECK(tie.index == 1);
  CHECK(tie.distance == doctest::Approx(1));

  lebow::testing::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector3d q = lebow::testing::random_gaussian(rng, 3, 1) * 2;
    Index best;
    (atoms.colwise() - q).colwise().squaredNorm().minCoeff(&best);
    CHECK(assign(q, cb).index == best);
  }
  CHECK_THROWS_AS(assign(Eigen::Vector2d(0, 0), cb), DataError);
}

TEST_CASE("Codebook rejects atoms that are not an embedding length") {
  CHECK_THROWS_AS(Codebook(Eigen::MatrixXd::Zero(4, 2), {}), DataError);
  CHECK_THROWS_AS(Codebook(Eigen::MatrixXd::Zero(3, 0), {}), DataError);
}

TEST_CASE("train_codebook degenerate cases") {
  lebow::testing::Rng rng(5);
  const Eigen::MatrixXd x = lebow::testing::random_gaussian(rng, 3, 30);

  SUBCASE("k = 1 returns the mean") {
    KmeansTrace tr;
    const Codebook cb = train_codebook(x, 2, config(1), &tr);
    CHECK((cb.atoms().col(0) - x.rowwise().mean()).norm() < 1e-14);
    CHECK(tr.dispersion.size() == 2);
    CHECK(cb.meta().iterations == 2);
    CHECK(cb.meta().training_count == 30);
  }
  SUBCASE("k = N returns the samples") {
    KmeansTrace tr;
    const Codebook cb = train_codebook(x, 2, config(30), &tr);
    CHECK(cb.meta().final_dispersion == 0);
    CHECK(tr.reached_tolerance);
    for (Index i = 0; i < x.cols(); ++i) CHECK(assign(x.col(i), cb).distance == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train_codebook(x, 2, config(31)), DataError);
    const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(3, 10);
    CHECK_THROWS_AS(train_codebook(same, 2, config(2)), DataError);
    KmeansConfig pp = config(2);
    pp.seeding = SeedingMethod::KMeansPlusPlus;
    CHECK_THROWS_AS(train_codebook(same, 2, pp), DataError);
    CHECK_THROWS_AS(train_codebook(x, 3, config(2)), DataError);
  }
}

TEST_CASE("train_codebook recovers two separated blobs") {
  lebow::testing::Rng rng(7);
  const double sigma = 0.5;
  const Eigen::Vector3d a(0, 0, 0), b(10, 0, 0);
  const Eigen::MatrixXd x = blobs(rng, {a, b}, 200, sigma);
  const Eigen::Vector3d ma = x.leftCols(200).rowwise().mean(), mb = x.rightCols(200).rowwise().mean();
  const Codebook cb = train_codebook(x, 2, config(2, 11));
  const Eigen::Vector3d c0 = cb.atoms().col(0), c1 = cb.atoms().col(1);
  const double err = std::min(std::max((c0 - ma).norm(), (c1 - mb).norm()),
                              std::max((c1 - ma).norm(), (c0 - mb).norm()));
  CHECK(err < 0.1 * sigma);
}

TEST_CASE("train_codebook dispersion is non-increasing") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    lebow::testing::Rng rng(seed);
    const Eigen::MatrixXd x = lebow::testing::random_gaussian(rng, 6, 300);
    KmeansTrace tr;
    train_codebook(x, 3, config(8, seed), &tr);
    for (std::size_t i = 1; i < tr.dispersion.size(); ++i)
      CHECK(tr.dispersion[i] <= tr.dispersion[i - 1] + 1e-10);
  }
}

TEST_CASE("train_codebook is deterministic and matches the embedded input") {
  lebow::testing::Rng rng(13);
  std::vector<SpdMatrixd> spd;
  for (int i = 0; i < 60; ++i) spd.emplace_back(lebow::testing::random_spd(rng, 3, 100));
  const Codebook a = train_codebook(std::span<const SpdMatrixd>(spd), config(4, 9));
  const Codebook b = train_codebook(std::span<const SpdMatrixd>(spd), config(4, 9));
  const Codebook c = train_codebook(embed_all(spd), 3, config(4, 9));
  CHECK(a.atoms() == b.atoms());
  CHECK(a.atoms() == c.atoms());
  CHECK(a.meta().final_dispersion == c.meta().final_dispersion);
  CHECK(a.meta().source_d == 3);
}

TEST_CASE("assignment is idempotent after convergence") {
  lebow::testing::Rng rng(17);
  const Eigen::MatrixXd x = blobs(rng, {{0, 0, 0}, {5, 5, 0}, {0, 5, 5}}, 50, 0.7);
  KmeansConfig cfg = config(3, 2);
  cfg.epsilon_tol = 0;
  const Codebook cb = train_codebook(x, 2, cfg);
  // One more Lloyd step leaves every atom where it is.
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(3, 3);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  for (Index i = 0; i < x.cols(); ++i) {
    const int j = assign(x.col(i), cb).index;
    sums.col(j) += x.col(i);
    counts(j) += 1;
  }
  for (int j = 0; j < 3; ++j) CHECK((sums.col(j) / counts(j) - cb.atoms().col(j)).norm() < 1e-12);
}

TEST_CASE("empty clusters are reseeded by default") {
  // Two tight groups and k = 3: every seed still ends with three distinct atoms.
  Eigen::MatrixXd x(3, 6);
  x << 0, 0.1, 0.2, 100, 100.1, 100.2,  //
      0, 0, 0, 0, 0, 0,                 //
      0, 0, 0, 0, 0, 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Codebook cb = train_codebook(x, 2, config(3, seed));
    CHECK(cb.k() == 3);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) CHECK(cb.atoms().col(a) != cb.atoms().col(b));
  }
}
