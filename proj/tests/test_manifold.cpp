#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lebow/manifold.hpp"
#include "test_support.hpp"

using namespace lebow;
using lebow::testing::rel_frobenius;
using Mat = Eigen::MatrixXd;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

Mat diag(std::initializer_list<double> v) {
  Eigen::VectorXd x(Index(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return x.asDiagonal();
}

const double kLn3 = std::log(3.0);
const double kE = std::exp(1.0);

}  // namespace

TEST_CASE("SymMatrix symmetrises and rejects non-square input") {
  const SymMatrixd s(mat2(1, 2, 4, 3));
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 3.0);
  CHECK_THROWS_AS(SymMatrixd(Mat(2, 3)), DataError);
}

TEST_CASE("SpdMatrix rejects indefinite and near-singular matrices") {
  CHECK_THROWS_AS(SpdMatrixd(mat2(1, 2, 2, 1)), DataError);
  CHECK_THROWS_AS(SpdMatrixd(diag({1.0, 1e-11})), DataError);
  CHECK_NOTHROW(SpdMatrixd(diag({1.0, 1e-9})));
  CHECK_THROWS_AS(SpdMatrixd(Mat::Zero(3, 3)), DataError);
}

TEST_CASE("sym_eig examples") {
  SUBCASE("identity") {
    const auto e = sym_eig(SymMatrixd::identity(2));
    CHECK(e.values(0) == doctest::Approx(1));
    CHECK(e.values(1) == doctest::Approx(1));
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("[[2,1],[1,2]]") {
    const auto e = sym_eig(SymMatrixd(mat2(2, 1, 1, 2)));
    CHECK(e.values(0) == doctest::Approx(3).epsilon(1e-14));
    CHECK(e.values(1) == doctest::Approx(1).epsilon(1e-14));
    const double r = 1 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(e.vectors(0, 0)) - r) < 1e-12);
    CHECK(std::abs(e.vectors(0, 0) - e.vectors(1, 0)) < 1e-12);  // (1,1)/sqrt2 up to sign
    CHECK(std::abs(e.vectors(0, 1) + e.vectors(1, 1)) < 1e-12);  // (1,-1)/sqrt2 up to sign
  }
  SUBCASE("diagonal is sorted descending with unit vectors") {
    const auto e = sym_eig(SymMatrixd(diag({5, 2, 1})));
    CHECK(e.values(0) == 5);
    CHECK(e.values(1) == 2);
    CHECK(e.values(2) == 1);
    CHECK((e.vectors.cwiseAbs() - Mat::Identity(3, 3)).norm() < 1e-14);
  }
  SUBCASE("reconstruction and orthogonality") {
    lebow::testing::Rng rng(3);
    const SymMatrixd a(lebow::testing::random_symmetric(rng, 9, 5.0));
    const auto e = sym_eig(a);
    CHECK(rel_frobenius(e.vectors * e.values.asDiagonal() * e.vectors.transpose(), a.matrix()) <
          1e-8);
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(9, 9)).norm() < 1e-10);
    for (Index i = 1; i < 9; ++i) CHECK(e.values(i - 1) >= e.values(i));
  }
}

TEST_CASE("matrix_log examples") {
  CHECK(matrix_log(SpdMatrixd::identity(3)).matrix().norm() < 1e-15);
  CHECK((matrix_log(SpdMatrixd(diag({kE, kE * kE}))).matrix() - diag({1, 2})).norm() < 1e-14);
  const Mat expected = (kLn3 / 2) * mat2(1, 1, 1, 1);
  CHECK((matrix_log(SpdMatrixd(mat2(2, 1, 1, 2))).matrix() - expected).norm() < 1e-14);
  CHECK(expected(0, 0) == doctest::Approx(0.5493).epsilon(1e-4));
}

TEST_CASE("matrix_exp examples") {
  CHECK((matrix_exp(SymMatrixd::zero(3)).matrix() - Mat::Identity(3, 3)).norm() < 1e-15);
  CHECK((matrix_exp(SymMatrixd(diag({1, 2}))).matrix() - diag({kE, kE * kE})).norm() < 1e-13);
  CHECK((matrix_exp(SymMatrixd((kLn3 / 2) * mat2(1, 1, 1, 1))).matrix() - mat2(2, 1, 1, 2)).norm() <
        1e-13);
  CHECK_THROWS_AS(matrix_exp(SymMatrixd(diag({800, 0}))), NumericError);
}

TEST_CASE("matrix_log and matrix_exp invert each other on extreme spectra") {
  lebow::testing::Rng rng(11);
  const Mat v = lebow::testing::random_symmetric(rng, 6, 20.0);
  const SymMatrixd back = matrix_log(matrix_exp(SymMatrixd(v)));
  CHECK((back.matrix() - v).norm() < 1e-8 * std::max(1.0, v.norm()));
}

TEST_CASE("airm_inner examples") {
  const SymMatrixd i2 = SymMatrixd::identity(2);
  CHECK(airm_inner(SpdMatrixd::identity(2), i2, i2) == doctest::Approx(2));
  CHECK(airm_inner(SpdMatrixd::identity(2), SymMatrixd(diag({1, 0})), SymMatrixd(diag({0, 1}))) ==
        0.0);
  CHECK(airm_inner(SpdMatrixd(diag({2, 2})), i2, i2) == doctest::Approx(0.5));
}

TEST_CASE("airm_distance examples") {
  const SpdMatrixd x(mat2(2, 1, 1, 2));
  CHECK(airm_distance(x, x) < 1e-14);
  CHECK(airm_distance(SpdMatrixd::identity(2), SpdMatrixd(diag({kE * kE, kE * kE}))) ==
        doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-13));
  const double d = airm_distance(SpdMatrixd(diag({1, 4})), SpdMatrixd(diag({4, 1})));
  CHECK(d == doctest::Approx(std::sqrt(2.0) * std::log(4.0)).epsilon(1e-13));
  CHECK(d == doctest::Approx(1.9605).epsilon(1e-4));
}

TEST_CASE("log_map / exp_map examples") {
  lebow::testing::Rng rng(5);
  const SpdMatrixd p(lebow::testing::random_spd(rng, 4, 100));
  CHECK(log_map(p, p).matrix().norm() < 1e-12);

  const SpdMatrixd x(lebow::testing::random_spd(rng, 4, 100));
  CHECK((log_map(SpdMatrixd::identity(4), x).matrix() - matrix_log(x).matrix()).norm() < 1e-12);

  const SpdMatrixd p4(diag({4, 4}));
  const double e2 = kE * kE;
  CHECK((log_map(p4, SpdMatrixd(diag({4 * e2, 4 * e2}))).matrix() - diag({8, 8})).norm() < 1e-12);

  CHECK((exp_map(p, SymMatrixd::zero(4)).matrix() - p.matrix()).norm() < 1e-12 * p.matrix().norm());
  const SymMatrixd v(lebow::testing::random_symmetric(rng, 4, 1.0));
  CHECK((exp_map(SpdMatrixd::identity(4), v).matrix() - matrix_exp(v).matrix()).norm() < 1e-12);
  CHECK((exp_map(p4, SymMatrixd(diag({8, 8}))).matrix() - diag({4 * e2, 4 * e2})).norm() < 1e-11);
}

TEST_CASE("vec / unvec examples") {
  CHECK(vec(SymMatrixd::zero(2)).values().norm() == 0);
  const LeVectord v = vec(SymMatrixd(mat2(1, 2, 2, 3)));
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 1);
  CHECK(v[1] == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(v[2] == 3);
  Eigen::VectorXd id3(6);
  id3 << 1, 0, 0, 1, 0, 1;
  CHECK(vec(SymMatrixd::identity(3)).values() == id3);

  CHECK((unvec(v).matrix() - mat2(1, 2, 2, 3)).norm() < 1e-15);
  CHECK(unvec(LeVectord(Eigen::VectorXd::Zero(3))).matrix().norm() == 0);
  CHECK_THROWS_AS(LeVectord(Eigen::VectorXd::Zero(4)), DataError);

  lebow::testing::Rng rng(9);
  const SymMatrixd b(lebow::testing::random_gaussian(rng, 7, 7));
  CHECK((unvec(vec(b)).matrix() - b.matrix()).norm() < 1e-14);
  CHECK(std::abs(vec(b).values().norm() - b.norm()) < 1e-12 * b.norm());
}

TEST_CASE("log_euclidean_embed examples") {
  CHECK(log_euclidean_embed(SpdMatrixd::identity(2)).values().norm() < 1e-15);
  const auto a = log_euclidean_embed(SpdMatrixd(diag({kE, kE * kE})));
  CHECK(a[0] == doctest::Approx(1));
  CHECK(std::abs(a[1]) < 1e-15);
  CHECK(a[2] == doctest::Approx(2));
  const auto b = log_euclidean_embed(SpdMatrixd(mat2(2, 1, 1, 2)));
  CHECK(b[0] == doctest::Approx(kLn3 / 2).epsilon(1e-13));
  CHECK(b[1] == doctest::Approx(std::sqrt(2.0) * kLn3 / 2).epsilon(1e-13));
  CHECK(b[2] == doctest::Approx(kLn3 / 2).epsilon(1e-13));
  CHECK(b[1] == doctest::Approx(0.7768).epsilon(1e-4));
}

TEST_CASE("karcher_mean examples") {
  lebow::testing::Rng rng(21);
  const SpdMatrixd x(lebow::testing::random_spd(rng, 3, 50));

  SUBCASE("single sample") {
    const std::vector<SpdMatrixd> s{x};
    const auto r = karcher_mean<double>(s);
    CHECK(r.converged);
    CHECK(rel_frobenius(r.mean.matrix(), x.matrix()) < 1e-9);
  }
  SUBCASE("repeated sample") {
    const std::vector<SpdMatrixd> s{x, x, x};
    CHECK(rel_frobenius(karcher_mean<double>(s).mean.matrix(), x.matrix()) < 1e-9);
  }
  SUBCASE("commuting pair gives the geometric mean") {
    const std::vector<SpdMatrixd> s{SpdMatrixd::identity(2), SpdMatrixd(diag({kE * kE, kE * kE}))};
    const auto r = karcher_mean<double>(s);
    CHECK(r.converged);
    CHECK((r.mean.matrix() - diag({kE, kE})).norm() < 1e-12);
  }
  SUBCASE("empty input") {
    const std::vector<SpdMatrixd> s;
    CHECK_THROWS_AS(karcher_mean<double>(s), DataError);
  }
  SUBCASE("iteration cap is reported, not hidden") {
    std::vector<SpdMatrixd> s;
    for (int i = 0; i < 4; ++i) s.emplace_back(lebow::testing::random_spd(rng, 3, 1e3));
    const auto r = karcher_mean<double>(s, {0, 1e-9});
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 0);
  }
}

TEST_CASE("karcher_mean dispersion never increases") {
  lebow::testing::Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpdMatrixd> s;
    for (int i = 0; i < 5; ++i) s.emplace_back(lebow::testing::random_spd_log_radius(rng, 4, 1.5));
    const auto r = karcher_mean<double>(s);
    CHECK(r.converged);
    CHECK(r.tangent_norm < 1e-9);
    for (std::size_t i = 1; i < r.dispersion.size(); ++i)
      CHECK(r.dispersion[i] <= r.dispersion[i - 1] + 1e-10);
  }
}

TEST_CASE("karcher_mean stays monotone on widely spread samples") {
  // A full fixed-point step overshoots here; halving keeps the descent.
  lebow::testing::Rng rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SpdMatrixd> s;
    for (int i = 0; i < 5; ++i) s.emplace_back(lebow::testing::random_spd_log_radius(rng, 6, 6.0));
    const auto r = karcher_mean<double>(s);
    for (std::size_t i = 1; i < r.dispersion.size(); ++i)
      CHECK(r.dispersion[i] <= r.dispersion[i - 1] + 1e-10);
    CHECK(r.dispersion.back() < r.dispersion.front());
  }
}

TEST_CASE("matrix_log does not depend on the eigenbasis of a repeated eigenvalue") {
  lebow::testing::Rng rng(31);
  Eigen::VectorXd lam(5);
  lam << 4, 2, 2, 2, 0.5;
  const Mat q = lebow::testing::random_orthogonal(rng, 5);
  const Mat x = q * lam.asDiagonal() * q.transpose();
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  const Mat px = perm * x * perm.transpose();
  const Mat l1 = matrix_log(SpdMatrixd(x)).matrix();
  const Mat l2 = perm.transpose() * matrix_log(SpdMatrixd(px)).matrix() * perm;
  CHECK((l1 - l2).norm() < 1e-8);
}

TEST_CASE("matrix text format round trip") {
  lebow::testing::Rng rng(2);
  const SymMatrixd a(lebow::testing::random_symmetric(rng, 4, 3));
  std::stringstream ss;
  write_matrix_text(ss, a);
  const SymMatrixd b = read_matrix_text<double>(ss);
  CHECK((a.matrix() - b.matrix()).norm() <= 1e-15 * a.norm());
}
