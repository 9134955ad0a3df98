#pragma once

// Encoders that turn a video's block descriptors into classifier inputs:
// hard assignment (HA), spatio-temporal pyramids (STP) and sparse coding (SC)
// with average pooling.

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lebow/codebook.hpp"
#include "lebow/descriptors.hpp"
#include "lebow/manifold.hpp"

namespace lebow {

struct Histogram {
  Eigen::VectorXd values;
};

struct Channel {
  std::string name;
  Eigen::VectorXd values;
};

/// Ordered list of named channels. HA and SC produce a single channel; STP
/// produces the six pyramid channels in `stp_channel_names` order.
struct MultiChannelHistogram {
  std::vector<Channel> channels;

  static MultiChannelHistogram single(std::string name, Eigen::VectorXd values) {
    return {{Channel{std::move(name), std::move(values)}}};
  }
};

inline constexpr std::string_view ha_channel_name = "ha";
inline constexpr std::string_view sc_channel_name = "sc";

// spatial grid x temporal grid
inline constexpr std::array<std::string_view, 6> stp_channel_names = {
    "s1xt1", "s1xt2", "h3xt1", "h3xt2", "g2x2xt1", "g2x2xt2"};
inline constexpr std::array<int, 6> stp_channel_cells = {1, 2, 3, 6, 4, 8};

/// Cell of a normalised block centre within STP channel `channel`.
/// Cells are ordered row-major over (temporal block, grid row, grid column).
/// Intervals are half-open except the last one, which is closed at 1.
int stp_cell(int channel, double cx, double cy, double ct);

/// Raw occupancy counts: one nearest-atom vote per embedded descriptor.
Eigen::VectorXd ha_counts(const Eigen::MatrixXd& embedded, const Codebook& codebook);

/// l2-normalised copy; an all-zero vector stays all zero.
Eigen::VectorXd l2_normalized(const Eigen::VectorXd& v);

Histogram encode_ha(std::span<const BlockDescriptor> descriptors, const Codebook& codebook);

MultiChannelHistogram encode_stp(std::span<const BlockDescriptor> descriptors,
                                 const Codebook& codebook);

template <typename Scalar>
struct SparseCode {
  VectorX<Scalar> alpha;
  Scalar objective = 0;
  int nnz = 0;
  int sweeps = 0;
  bool converged = false;
};

struct LassoOptions {
  double tol = 1e-7;  // stop when the largest coordinate update is below this
  int max_sweeps = 10000;
  int polish_every = 100;  // 0 disables the exact support solve
};

template <typename Scalar>
Scalar lasso_objective(const MatrixX<Scalar>& dict, const VectorX<Scalar>& q,
                       const VectorX<Scalar>& alpha, Scalar lambda) {
  return Scalar(0.5) * (dict * alpha - q).squaredNorm() + lambda * alpha.template lpNorm<1>();
}

/// Largest violation of the Lasso optimality conditions:
/// |d_j^T r - lambda sign(a_j)| on the support, max(0, |d_j^T r| - lambda) off it,
/// with r = q - D a.
template <typename Scalar>
Scalar lasso_kkt_violation(const MatrixX<Scalar>& dict, const VectorX<Scalar>& q,
                           const VectorX<Scalar>& alpha, Scalar lambda) {
  const VectorX<Scalar> corr = dict.transpose() * (q - dict * alpha);
  Scalar worst = 0;
  for (Index j = 0; j < alpha.size(); ++j) {
    Scalar v;
    if (alpha(j) != Scalar(0)) {
      v = std::abs(corr(j) - lambda * (alpha(j) > 0 ? Scalar(1) : Scalar(-1)));
    } else {
      v = std::max(Scalar(0), std::abs(corr(j)) - lambda);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

namespace detail {

/// Finishes a Lasso solve on the support of `alpha`. While the support
/// columns are linearly dependent, weights move along a null direction of
/// D_S that lowers the l1 term (the fit is unchanged) until one reaches
/// zero. On an independent support the stationarity equations are solved
/// directly. `alpha` is replaced only by iterates that do not raise the
/// objective; returns true when the final point meets `tol`.
template <typename Scalar>
bool polish_on_support(const MatrixX<Scalar>& dict, const VectorX<Scalar>& q, Scalar lambda,
                       Scalar tol, VectorX<Scalar>& alpha) {
  for (Index guard = 0; guard <= alpha.size(); ++guard) {
    std::vector<Index> support;
    for (Index j = 0; j < alpha.size(); ++j)
      if (alpha(j) != Scalar(0)) support.push_back(j);
    if (support.empty()) return lasso_kkt_violation(dict, q, alpha, lambda) <= tol;
    const Index s = Index(support.size());
    MatrixX<Scalar> ds(dict.rows(), s);
    VectorX<Scalar> a(s), sign(s);
    for (Index i = 0; i < s; ++i) {
      ds.col(i) = dict.col(support[std::size_t(i)]);
      a(i) = alpha(support[std::size_t(i)]);
      sign(i) = a(i) > 0 ? Scalar(1) : Scalar(-1);
    }
    Eigen::FullPivLU<MatrixX<Scalar>> lu(ds);
    if (lu.rank() < s) {
      VectorX<Scalar> v = lu.kernel().col(0);
      if (sign.dot(v) > Scalar(0)) v = -v;
      Index hit = -1;
      Scalar t = std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < s; ++i) {
        if (a(i) * v(i) < Scalar(0) && -a(i) / v(i) < t) t = -a(i) / v(i), hit = i;
      }
      if (hit < 0) return false;
      a += t * v;
      a(hit) = Scalar(0);
      for (Index i = 0; i < s; ++i) {
        // a weight may only reach zero, never cross it
        if (a(i) * sign(i) < Scalar(0)) a(i) = Scalar(0);
        alpha(support[std::size_t(i)]) = a(i);
      }
      continue;
    }
    const VectorX<Scalar> exact = (ds.transpose() * ds).ldlt().solve(ds.transpose() * q - lambda * sign);
    for (Index i = 0; i < s; ++i)
      if (!(exact(i) * sign(i) > Scalar(0))) return false;
    VectorX<Scalar> candidate = alpha;
    for (Index i = 0; i < s; ++i) candidate(support[std::size_t(i)]) = exact(i);
    if (lasso_kkt_violation(dict, q, candidate, lambda) > tol) return false;
    if (lasso_objective(dict, q, candidate, lambda) > lasso_objective(dict, q, alpha, lambda)) {
      return false;
    }
    alpha = candidate;
    return true;
  }
  return false;
}

}  // namespace detail

/// min_a 1/2 ||D a - q||^2 + lambda ||a||_1 by cyclic coordinate descent.
/// Columns of `dict` may have any norm; all-zero columns keep a zero weight.
/// Every `polish_every` sweeps, and once at the end, the current support is
/// solved exactly; this rescues the slow crawl of coordinate descent across
/// linearly dependent supports.
template <typename Scalar>
SparseCode<Scalar> lasso(const MatrixX<Scalar>& dict, const VectorX<Scalar>& q, Scalar lambda,
                         const LassoOptions& opts = {}) {
  if (!(lambda >= Scalar(0))) throw DataError("lasso: lambda must be >= 0");
  if (dict.rows() != q.size()) {
    throw DataError("lasso: dictionary has " + std::to_string(dict.rows()) +
                    " rows but query has length " + std::to_string(q.size()));
  }
  const Index k = dict.cols();
  const VectorX<Scalar> col_sq = dict.colwise().squaredNorm().transpose();
  const Scalar kkt_tol = Scalar(opts.tol);
  SparseCode<Scalar> out;
  out.alpha = VectorX<Scalar>::Zero(k);
  VectorX<Scalar> residual = q;
  bool polished = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    out.sweeps = sweep;
    Scalar max_step = 0;
    for (Index j = 0; j < k; ++j) {
      if (col_sq(j) == Scalar(0)) continue;
      const Scalar old = out.alpha(j);
      const Scalar rho = dict.col(j).dot(residual) + col_sq(j) * old;
      const Scalar shrunk = std::max(std::abs(rho) - lambda, Scalar(0));
      const Scalar updated = (rho < 0 ? -shrunk : shrunk) / col_sq(j);
      const Scalar step = updated - old;
      if (step != Scalar(0)) {
        residual.noalias() -= step * dict.col(j);
        out.alpha(j) = updated;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    if (max_step < Scalar(opts.tol)) {
      out.converged = true;
      break;
    }
    if (opts.polish_every > 0 && sweep % opts.polish_every == 0) {
      polished = detail::polish_on_support(dict, q, lambda, kkt_tol, out.alpha);
      residual = q - dict * out.alpha;
      if (polished) {
        out.converged = true;
        break;
      }
    }
  }
  if (!polished && opts.polish_every > 0) {
    VectorX<Scalar> trial = out.alpha;
    if (detail::polish_on_support(dict, q, lambda, kkt_tol, trial)) {
      out.alpha = trial;
      out.converged = true;
    }
  }
  out.objective = lasso_objective(dict, q, out.alpha, lambda);
  out.nnz = int((out.alpha.array() != Scalar(0)).count());
  return out;
}

/// Codebook atoms scaled to unit l2 norm (zero atoms stay zero), m x k.
Eigen::MatrixXd normalized_dictionary(const Codebook& codebook);

/// Per-descriptor sparse codes (k x p) against the normalised dictionary.
Eigen::MatrixXd sparse_codes(std::span<const BlockDescriptor> descriptors,
                             const Codebook& codebook, double lambda,
                             const LassoOptions& opts = {});

/// Mean of the per-descriptor sparse codes; no further normalisation.
Histogram encode_sc(std::span<const BlockDescriptor> descriptors, const Codebook& codebook,
                    double lambda, const LassoOptions& opts = {});

/// Negative entries set to zero, then l2-normalised. Makes pooled sparse
/// codes usable with the chi-squared kernel.
Eigen::VectorXd clamp_and_renormalize(const Eigen::VectorXd& v);

}  // namespace lebow
