#pragma once

// Random generators and independent reference computations shared by the
// unit and acceptance suites. Nothing here calls into the code paths it is
// used to check.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "lebow/descriptors.hpp"
#include "lebow/manifold.hpp"

namespace lebow::testing {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd random_gaussian(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, Index d) {
  return Eigen::HouseholderQR<Eigen::MatrixXd>(random_gaussian(rng, d, d)).householderQ();
}

/// Q diag(lambda) Q^T with log10(lambda) uniform in [0, log10(max_cond)].
inline Eigen::MatrixXd random_spd(Rng& rng, Index d, double max_cond = 1e6, double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.0, std::log10(max_cond));
  Eigen::VectorXd lam(d);
  for (Index i = 0; i < d; ++i) lam(i) = scale * std::pow(10.0, u(rng));
  const Eigen::MatrixXd q = random_orthogonal(rng, d);
  return q * lam.asDiagonal() * q.transpose();
}

/// exp of a random symmetric matrix with spectral radius `radius`.
inline Eigen::MatrixXd random_spd_log_radius(Rng& rng, Index d, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Eigen::VectorXd lam(d);
  for (Index i = 0; i < d; ++i) lam(i) = std::exp(u(rng));
  const Eigen::MatrixXd q = random_orthogonal(rng, d);
  return q * lam.asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_symmetric(Rng& rng, Index d, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Eigen::VectorXd lam(d);
  for (Index i = 0; i < d; ++i) lam(i) = u(rng);
  const Eigen::MatrixXd q = random_orthogonal(rng, d);
  return q * lam.asDiagonal() * q.transpose();
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Sample covariance sums computed the textbook way over the observations whose cell lies
/// in the half-open cell box.
struct DirectBox {
  double n = 0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;
  std::vector<Eigen::VectorXd> members;
};

inline DirectBox direct_box(const std::vector<TrajectoryFeature>& f, const GridResolution& g, int d,
                            int x0, int x1, int y0, int y1, int t0, int t1) {
  DirectBox b;
  b.sum = Eigen::VectorXd::Zero(d);
  b.outer = Eigen::MatrixXd::Zero(d, d);
  for (const auto& o : f) {
    const int cx = int(std::floor(o.x / g.cell_w));
    const int cy = int(std::floor(o.y / g.cell_h));
    const int ct = int(std::floor(o.t / g.cell_t));
    if (cx < x0 || cx >= x1 || cy < y0 || cy >= y1 || ct < t0 || ct >= t1) continue;
    b.n += 1;
    b.sum += o.feature;
    b.outer += o.feature * o.feature.transpose();
    b.members.push_back(o.feature);
  }
  return b;
}

inline Eigen::MatrixXd two_pass_covariance(const std::vector<Eigen::VectorXd>& obs) {
  const Index d = obs.front().size();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& o : obs) mu += o;
  mu /= double(obs.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const auto& o : obs) c += (o - mu) * (o - mu).transpose();
  return c / double(obs.size() - 1);
}

inline std::vector<TrajectoryFeature> random_features(Rng& rng, std::size_t n, int d,
                                                      const VideoGeometry& g) {
  std::uniform_real_distribution<double> ux(0, g.width), uy(0, g.height);
  std::uniform_int_distribution<std::uint32_t> ut(0, std::uint32_t(g.duration - 1));
  std::normal_distribution<double> nrm;
  std::vector<TrajectoryFeature> out(n);
  for (auto& f : out) {
    f.x = std::min(float(ux(rng)), std::nextafter(float(g.width), 0.0f));
    f.y = std::min(float(uy(rng)), std::nextafter(float(g.height), 0.0f));
    f.t = ut(rng);
    f.feature.resize(d);
    for (int i = 0; i < d; ++i) f.feature(i) = 1.0 + nrm(rng) * (1.0 + 0.1 * i);
  }
  return out;
}

/// FISTA (accelerated proximal gradient) on the Lasso objective, run to a
/// fixed large iteration count. Independent of the coordinate-descent solver.
inline Eigen::VectorXd fista_lasso(const Eigen::MatrixXd& dict, const Eigen::VectorXd& q,
                                   double lambda, int iterations = 20000) {
  const Eigen::MatrixXd gram = dict.transpose() * dict;
  const Eigen::VectorXd dq = dict.transpose() * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dict.cols()), y = x, prev = x;
  double t = 1;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd g = gram * y - dq;
    Eigen::VectorXd z = y - g / lip;
    for (Index j = 0; j < z.size(); ++j) {
      const double a = std::abs(z(j)) - lambda / lip;
      z(j) = a > 0 ? std::copysign(a, z(j)) : 0.0;
    }
    prev = x;
    x = z;
    const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
    y = x + ((t - 1) / tn) * (x - prev);
    t = tn;
  }
  return x;
}

}  // namespace lebow::testing
