#include <cmath>

#include "doctest.h"
#include "lebow/kernel_svm.hpp"
#include "test_support.hpp"

using namespace lebow;

namespace {

MultiChannelHistogram one(Eigen::VectorXd v, std::string name = "ha") {
  return MultiChannelHistogram::single(std::move(name), std::move(v));
}

MultiChannelHistogram random_hist(lebow::testing::Rng& rng, int k, int channels = 1) {
  std::uniform_real_distribution<double> u(0, 1);
  MultiChannelHistogram h;
  for (int c = 0; c < channels; ++c) {
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v(j) = u(rng) < 0.3 ? 0.0 : u(rng);
    h.channels.push_back({"c" + std::to_string(c), l2_normalized(v)});
  }
  return h;
}

// Gram for points on a line: two tight groups far apart.
Eigen::MatrixXd separable_gram(const std::vector<double>& pos) {
  const Index n = Index(pos.size());
  Eigen::MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = std::exp(-std::pow(pos[std::size_t(i)] - pos[std::size_t(j)], 2));
  return g;
}

}  // namespace

TEST_CASE("chi2_distance examples") {
  const Eigen::VectorXd h = Eigen::Vector3d(0.2, 0.5, 0.3);
  CHECK(chi2_distance(h, h) == 0);
  CHECK(chi2_distance(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 2);
  CHECK(chi2_distance(Eigen::Vector3d(0.5, 0.5, 0), Eigen::Vector3d(0.5, 0.5, 0)) == 0);
  CHECK(chi2_distance(Eigen::Vector3d(0.7, 0.3, 0), Eigen::Vector3d(0.5, 0.5, 0)) ==
        chi2_distance(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.5, 0.5)));
  CHECK_THROWS_AS(chi2_distance(Eigen::Vector2d(-0.1, 1), Eigen::Vector2d(0, 1)), DataError);
  CHECK_THROWS_AS(chi2_distance(Eigen::Vector2d(0, 1), Eigen::Vector3d(0, 1, 0)), DataError);
}

TEST_CASE("kernel_value examples") {
  const auto a = one(Eigen::Vector2d(1, 0)), b = one(Eigen::Vector2d(0, 1));
  KernelParams p{{"ha"}, {ChannelMetric::Chi2}, {2.0}, {false}};
  CHECK(kernel_value(a, a, p) == 1.0);
  CHECK(kernel_value(a, b, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_value(a, b, p) == doctest::Approx(0.3679).epsilon(1e-4));

  MultiChannelHistogram a2{{{"x", a.channels[0].values}, {"y", a.channels[0].values}}};
  MultiChannelHistogram b2{{{"x", b.channels[0].values}, {"y", b.channels[0].values}}};
  KernelParams p2{{"x", "y"}, {ChannelMetric::Chi2, ChannelMetric::Chi2}, {2.0, 2.0}, {false, false}};
  CHECK(kernel_value(a2, b2, p2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(kernel_value(a2, b2, p2) == doctest::Approx(0.1353).epsilon(1e-4));

  CHECK_THROWS_AS(kernel_value(a, b2, p2), DataError);
  CHECK_THROWS_AS(kernel_value(one(Eigen::Vector2d(1, 0), "sc"), a, p), DataError);
}

TEST_CASE("compute_channel_scales") {
  SUBCASE("one pair") {
    const std::vector<MultiChannelHistogram> s{one(Eigen::Vector2d(1, 0)), one(Eigen::Vector2d(0, 1))};
    const auto p = compute_channel_scales(s);
    CHECK(p.scales[0] == 2);
    CHECK_FALSE(p.degenerate[0]);
  }
  SUBCASE("identical samples") {
    const std::vector<MultiChannelHistogram> s(4, one(Eigen::Vector2d(0.6, 0.8)));
    const auto p = compute_channel_scales(s);
    CHECK(p.scales[0] == 1);
    CHECK(p.degenerate[0]);
  }
  SUBCASE("brute-force mean over pairs") {
    lebow::testing::Rng rng(3);
    std::vector<MultiChannelHistogram> s;
    for (int i = 0; i < 5; ++i) s.push_back(random_hist(rng, 8, 2));
    const auto p = compute_channel_scales(s, {ChannelMetric::Chi2, ChannelMetric::Euclidean});
    for (int c = 0; c < 2; ++c) {
      double sum = 0;
      int pairs = 0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          if (i < j) {
            const auto& hi = s[std::size_t(i)].channels[std::size_t(c)].values;
            const auto& hj = s[std::size_t(j)].channels[std::size_t(c)].values;
            double dist = 0;
            for (Index b = 0; b < hi.size(); ++b) {
              const double num = (hi(b) - hj(b)) * (hi(b) - hj(b));
              dist += c == 1 ? num : (hi(b) + hj(b) > 0 ? num / (hi(b) + hj(b)) : 0);
            }
            sum += dist;
            ++pairs;
          }
      CHECK(pairs == 10);
      CHECK(p.scales[std::size_t(c)] == doctest::Approx(sum / pairs).epsilon(1e-13));
    }
  }
  SUBCASE("errors") {
    const std::vector<MultiChannelHistogram> s{one(Eigen::Vector2d(1, 0))};
    CHECK_THROWS_AS(compute_channel_scales(s), DataError);
  }
}

TEST_CASE("kernel is symmetric, bounded and PSD on random histograms") {
  lebow::testing::Rng rng(5);
  std::vector<MultiChannelHistogram> s;
  for (int i = 0; i < 20; ++i) s.push_back(random_hist(rng, 10, 3));
  const auto p = compute_channel_scales(s);
  const Eigen::MatrixXd g = gram_matrix(s, p);
  for (Index i = 0; i < 20; ++i) {
    CHECK(g(i, i) == 1.0);
    for (Index j = 0; j < 20; ++j) {
      CHECK(g(i, j) > 0);
      CHECK(g(i, j) <= 1);
      CHECK(kernel_value(s[std::size_t(i)], s[std::size_t(j)], p) ==
            kernel_value(s[std::size_t(j)], s[std::size_t(i)], p));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  CHECK((kernel_row(s[3], s, p) - g.row(3).transpose()).norm() == 0);
}

TEST_CASE("train_binary_svm satisfies the dual constraints") {
  lebow::testing::Rng rng(7);
  std::normal_distribution<double> n;
  std::vector<double> pos;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    const bool pos_class = i % 2 == 0;
    pos.push_back((pos_class ? 1.0 : -1.0) * 0.6 + 0.8 * n(rng));
    y.push_back(pos_class ? 1 : -1);
  }
  const Eigen::MatrixXd g = separable_gram(pos);
  for (double c : {1e-6, 0.5, 100.0}) {
    const auto m = train_binary_svm(g, y, c);
    CHECK(m.converged);
    double s = 0;
    for (Index i = 0; i < 30; ++i) {
      CHECK(m.alpha(i) >= 0);
      CHECK(m.alpha(i) <= c);
      s += m.alpha(i) * y[std::size_t(i)];
    }
    CHECK(std::abs(s) <= 1e-6);
  }
  CHECK_THROWS_AS(train_binary_svm(g, y, 0.0), DataError);
}

TEST_CASE("train_svm and predict") {
  std::vector<double> pos;
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 6; ++i) {
      pos.push_back(10.0 * c + 0.1 * i);
      labels.push_back(c);
    }
  const Eigen::MatrixXd g = separable_gram(pos);
  const SvmModel m = train_svm(g, labels, 3, 100);
  CHECK(m.classes.size() == 3);
  CHECK(m.n_train == 18);
  for (const auto& cm : m.classes) CHECK(cm.converged);
  for (Index i = 0; i < 18; ++i) CHECK(predict(m, g.col(i)).label == labels[std::size_t(i)]);

  SUBCASE("scaling the kernel width keeps the toy decisions") {
    for (double s : {0.5, 2.0}) {
      Eigen::MatrixXd gs = g.array().pow(1.0 / s);
      const SvmModel ms = train_svm(gs, labels, 3, 100);
      for (Index i = 0; i < 18; ++i) CHECK(predict(ms, gs.col(i)).label == labels[std::size_t(i)]);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(predict(m, Eigen::VectorXd::Zero(17)), DataError);
    const std::vector<int> single(18, 1);
    CHECK_THROWS_AS(train_svm(g, single, 3, 100), DataError);
    Eigen::MatrixXd asym = g;
    asym(0, 1) += 1e-3;
    CHECK_THROWS_AS(train_svm(asym, labels, 3, 100), DataError);
  }
  SUBCASE("an absent class still gets a finite score") {
    std::vector<int> shifted = labels;
    for (int& l : shifted) l = l == 2 ? 3 : l;
    const SvmModel m4 = train_svm(g, shifted, 4, 100);
    for (double s : predict(m4, g.col(0)).scores) CHECK(std::isfinite(s));
  }
}

TEST_CASE("argmax_lowest breaks ties towards the lowest index") {
  const std::vector<double> s{0.4, 0.4, 0.1};
  CHECK(argmax_lowest(s) == 0);
  const std::vector<double> t{0.1, 0.4, 0.4};
  CHECK(argmax_lowest(t) == 1);
}
