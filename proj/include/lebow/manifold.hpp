#pragma once

// Geometry of the manifold of symmetric positive definite matrices:
// spectral matrix functions, the affine invariant Riemannian metric (AIRM),
// its log/exp maps, the Karcher mean and the log-Euclidean vector embedding.
//
// Every type here is a thin value wrapper around Eigen dense storage and is
// templated on the scalar type. The aliases at the bottom fix Scalar = double,
// which is what the rest of the pipeline uses.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lebow/error.hpp"

namespace lebow {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Relative eigenvalue floor used to decide positive definiteness:
// lambda_min > spd_eps * lambda_max.
template <typename Scalar>
inline constexpr Scalar default_spd_eps = Scalar(1e-10);

/// Symmetric d x d matrix. Symmetry is enforced at construction by averaging
/// the input with its transpose, so (i,j) and (j,i) are bitwise equal.
template <typename Scalar>
class SymMatrix {
 public:
  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) {
      throw DataError("SymMatrix: matrix is not square (" + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + ")");
    }
    if (a.rows() < 1) throw DataError("SymMatrix: dimension must be >= 1");
    const MatrixX<Scalar> m = a.template cast<Scalar>();
    data_ = (m + m.transpose()) / Scalar(2);
  }

  static SymMatrix zero(Index d) { return SymMatrix(MatrixX<Scalar>::Zero(d, d)); }
  static SymMatrix identity(Index d) { return SymMatrix(MatrixX<Scalar>::Identity(d, d)); }

  Index dim() const { return data_.rows(); }
  const MatrixX<Scalar>& matrix() const { return data_; }
  Scalar operator()(Index i, Index j) const { return data_(i, j); }
  Scalar norm() const { return data_.norm(); }

 private:
  MatrixX<Scalar> data_;
};

/// Spectral decomposition of a symmetric matrix. Eigenvalues are sorted in
/// descending order and column i of `vectors` belongs to `values[i]`.
template <typename Scalar>
struct EigPair {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
};

template <typename Scalar>
EigPair<Scalar> sym_eig(const SymMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericError("sym_eig: eigensolver did not converge for a " + std::to_string(a.dim()) +
                       "x" + std::to_string(a.dim()) + " matrix");
  }
  // Eigen returns ascending order.
  EigPair<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// U diag(f(lambda)) U^T.
template <typename Scalar, typename F>
MatrixX<Scalar> spectral_function(const EigPair<Scalar>& e, F&& f) {
  const VectorX<Scalar> mapped = e.values.unaryExpr(f);
  return e.vectors * mapped.asDiagonal() * e.vectors.transpose();
}

/// Symmetric positive definite matrix. Carries its own eigendecomposition,
/// computed once at validation time and reused by every spectral function.
template <typename Scalar>
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(SymMatrix<Scalar> s, Scalar spd_eps = default_spd_eps<Scalar>)
      : sym_(std::move(s)), eig_(sym_eig(sym_)) {
    const Scalar lmax = eig_.values(0);
    const Scalar lmin = eig_.values(eig_.values.size() - 1);
    if (!(lmax > Scalar(0)) || !(lmin > spd_eps * lmax) || !std::isfinite(lmax)) {
      std::ostringstream os;
      os << "SpdMatrix: matrix is not positive definite (lambda_min=" << lmin
         << ", lambda_max=" << lmax << ", relative floor=" << spd_eps << ")";
      throw DataError(os.str());
    }
  }

  template <typename Derived>
  explicit SpdMatrix(const Eigen::MatrixBase<Derived>& a,
                     Scalar spd_eps = default_spd_eps<Scalar>)
      : SpdMatrix(SymMatrix<Scalar>(a), spd_eps) {}

  /// Builds an SPD matrix from a known spectrum. Only strict positivity is
  /// checked: the spectrum is exact, so no relative floor is needed.
  static SpdMatrix from_eig(EigPair<Scalar> e) {
    if (e.values.size() == 0 || !(e.values.minCoeff() > Scalar(0)) ||
        !std::isfinite(e.values.maxCoeff())) {
      throw DataError("SpdMatrix::from_eig: spectrum is not strictly positive and finite");
    }
    SpdMatrix out;
    out.sym_ = SymMatrix<Scalar>(spectral_function(e, [](Scalar x) { return x; }));
    out.eig_ = std::move(e);
    return out;
  }

  static SpdMatrix identity(Index d) {
    return from_eig({VectorX<Scalar>::Ones(d), MatrixX<Scalar>::Identity(d, d)});
  }

  Index dim() const { return sym_.dim(); }
  const SymMatrix<Scalar>& sym() const { return sym_; }
  const MatrixX<Scalar>& matrix() const { return sym_.matrix(); }
  const EigPair<Scalar>& eig() const { return eig_; }

  template <typename F>
  MatrixX<Scalar> apply(F&& f) const {
    return spectral_function(eig_, std::forward<F>(f));
  }
  MatrixX<Scalar> sqrt() const { return apply([](Scalar x) { return std::sqrt(x); }); }
  MatrixX<Scalar> inv_sqrt() const { return apply([](Scalar x) { return Scalar(1) / std::sqrt(x); }); }
  MatrixX<Scalar> inverse() const { return apply([](Scalar x) { return Scalar(1) / x; }); }

 private:
  SymMatrix<Scalar> sym_;
  EigPair<Scalar> eig_;
};

/// Half-vectorisation with sqrt(2) weights on the off-diagonal, so that
/// ||values||_2 == ||B||_F.
template <typename Scalar>
class LeVector {
 public:
  LeVector() = default;

  template <typename Derived>
  explicit LeVector(const Eigen::MatrixBase<Derived>& v) : values_(v.template cast<Scalar>()) {
    const auto d = source_dim_for(values_.size());
    if (!d) {
      throw DataError("LeVector: length " + std::to_string(values_.size()) +
                      " is not a triangular number d(d+1)/2");
    }
    source_dim_ = *d;
  }

  /// d such that d(d+1)/2 == m, if one exists.
  static std::optional<Index> source_dim_for(Index m) {
    if (m < 1) return std::nullopt;
    auto d = static_cast<Index>(std::llround((std::sqrt(8.0 * double(m) + 1.0) - 1.0) / 2.0));
    if (d * (d + 1) / 2 != m) return std::nullopt;
    return d;
  }

  Index size() const { return values_.size(); }
  Index source_dim() const { return source_dim_; }
  const VectorX<Scalar>& values() const { return values_; }
  Scalar operator[](Index i) const { return values_(i); }

 private:
  VectorX<Scalar> values_;
  Index source_dim_ = 0;
};

template <typename Scalar>
LeVector<Scalar> vec(const SymMatrix<Scalar>& b) {
  const Index d = b.dim();
  const Scalar root2 = std::sqrt(Scalar(2));
  VectorX<Scalar> out(d * (d + 1) / 2);
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    out(k++) = b(i, i);
    for (Index j = i + 1; j < d; ++j) out(k++) = root2 * b(i, j);
  }
  return LeVector<Scalar>(out);
}

template <typename Scalar>
SymMatrix<Scalar> unvec(const LeVector<Scalar>& a) {
  const Index d = a.source_dim();
  const Scalar root2 = std::sqrt(Scalar(2));
  MatrixX<Scalar> m(d, d);
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    m(i, i) = a[k++];
    for (Index j = i + 1; j < d; ++j) {
      m(i, j) = m(j, i) = a[k++] / root2;
    }
  }
  return SymMatrix<Scalar>(m);
}

template <typename Scalar>
SymMatrix<Scalar> matrix_log(const SpdMatrix<Scalar>& x) {
  return SymMatrix<Scalar>(x.apply([](Scalar v) { return std::log(v); }));
}

/// The result keeps the exact spectrum exp(lambda_i), so that
/// matrix_log(matrix_exp(V)) recovers V even when exp(lambda) spans more
/// orders of magnitude than a dense matrix can resolve.
template <typename Scalar>
SpdMatrix<Scalar> matrix_exp(const SymMatrix<Scalar>& v) {
  EigPair<Scalar> e = sym_eig(v);
  const Scalar max_exponent = std::log(std::numeric_limits<Scalar>::max());
  if (e.values(0) >= max_exponent) {
    std::ostringstream os;
    os << "matrix_exp: largest eigenvalue " << e.values(0) << " overflows exp (limit "
       << max_exponent << ")";
    throw NumericError(os.str());
  }
  e.values = e.values.array().exp();
  return SpdMatrix<Scalar>::from_eig(std::move(e));
}

/// tr(P^-1 v P^-1 w)
template <typename Scalar>
Scalar airm_inner(const SpdMatrix<Scalar>& p, const SymMatrix<Scalar>& v,
                  const SymMatrix<Scalar>& w) {
  if (v.dim() != p.dim() || w.dim() != p.dim()) throw DataError("airm_inner: dimension mismatch");
  const MatrixX<Scalar> pinv = p.inverse();
  const MatrixX<Scalar> a = pinv * v.matrix();
  const MatrixX<Scalar> b = pinv * w.matrix();
  // tr(A B) = sum_ij A_ij B_ji
  return a.cwiseProduct(b.transpose()).sum();
}

namespace detail {

// P^-1/2 X P^-1/2, re-symmetrised.
template <typename Scalar>
SymMatrix<Scalar> whiten(const MatrixX<Scalar>& p_inv_sqrt, const SpdMatrix<Scalar>& x) {
  return SymMatrix<Scalar>(p_inv_sqrt * x.matrix() * p_inv_sqrt);
}

template <typename Scalar>
void check_same_dim(const char* op, Index a, Index b) {
  if (a != b) {
    throw DataError(std::string(op) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                    std::to_string(b) + ")");
  }
}

}  // namespace detail

/// ||log(X^-1/2 Y X^-1/2)||_F
template <typename Scalar>
Scalar airm_distance(const SpdMatrix<Scalar>& x, const SpdMatrix<Scalar>& y) {
  detail::check_same_dim<Scalar>("airm_distance", x.dim(), y.dim());
  const SymMatrix<Scalar> m = detail::whiten(x.inv_sqrt(), y);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("airm_distance: eigensolver failed");
  const VectorX<Scalar>& mu = solver.eigenvalues();
  if (!(mu.minCoeff() > Scalar(0))) {
    throw NumericError("airm_distance: whitened matrix lost positive definiteness");
  }
  return std::sqrt(mu.array().log().square().sum());
}

/// P^1/2 log(P^-1/2 X P^-1/2) P^1/2
template <typename Scalar>
SymMatrix<Scalar> log_map(const SpdMatrix<Scalar>& p, const SpdMatrix<Scalar>& x) {
  detail::check_same_dim<Scalar>("log_map", p.dim(), x.dim());
  const MatrixX<Scalar> ps = p.sqrt();
  const SpdMatrix<Scalar> inner(detail::whiten(p.inv_sqrt(), x), Scalar(0));
  return SymMatrix<Scalar>(ps * matrix_log(inner).matrix() * ps);
}

/// P^1/2 exp(P^-1/2 V P^-1/2) P^1/2
template <typename Scalar>
SpdMatrix<Scalar> exp_map(const SpdMatrix<Scalar>& p, const SymMatrix<Scalar>& v) {
  detail::check_same_dim<Scalar>("exp_map", p.dim(), v.dim());
  const MatrixX<Scalar> pis = p.inv_sqrt();
  const MatrixX<Scalar> ps = p.sqrt();
  const SpdMatrix<Scalar> e = matrix_exp(SymMatrix<Scalar>(pis * v.matrix() * pis));
  return SpdMatrix<Scalar>(ps * e.matrix() * ps, Scalar(0));
}

/// Vec(log X): the point's coordinates in the tangent space at the identity.
template <typename Scalar>
LeVector<Scalar> log_euclidean_embed(const SpdMatrix<Scalar>& x) {
  return vec(matrix_log(x));
}

struct KarcherOptions {
  int max_iter = 50;
  double tol = 1e-9;
};

template <typename Scalar>
struct KarcherResult {
  SpdMatrix<Scalar> mean;
  int iterations = 0;
  bool converged = false;
  Scalar tangent_norm = 0;
  // sum_i delta_R^2(X_i, estimate) for the initial estimate and every update.
  std::vector<Scalar> dispersion;
};

/// Fixed-point iteration for the Karcher (Frechet) mean under the AIRM:
/// pull every sample into the tangent space at the current estimate, average,
/// push the average back with exp_map. Starts from the arithmetic mean.
/// A step that would raise the dispersion is halved until it does not, so the
/// recorded dispersion never increases. Widely spread samples need this.
/// Reductions run in sample order, so results are deterministic.
template <typename Scalar>
KarcherResult<Scalar> karcher_mean(std::span<const SpdMatrix<Scalar>> samples,
                                   const KarcherOptions& opts = {}) {
  if (samples.empty()) throw DataError("karcher_mean: empty sample list");
  if (opts.max_iter < 0) throw DataError("karcher_mean: max_iter must be >= 0");
  const Index d = samples.front().dim();
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(d, d);
  for (const auto& s : samples) {
    detail::check_same_dim<Scalar>("karcher_mean", d, s.dim());
    sum += s.matrix();
  }
  const Scalar n = Scalar(samples.size());

  // Dispersion and whitened tangent mean at an estimate. The Frobenius norm
  // of the tangent is its AIRM norm at that estimate.
  struct Eval {
    Scalar disp = 0;
    MatrixX<Scalar> tangent;
  };
  auto evaluate = [&](const SpdMatrix<Scalar>& p) {
    const MatrixX<Scalar> pis = p.inv_sqrt();
    Eval e{Scalar(0), MatrixX<Scalar>::Zero(d, d)};
    for (const auto& s : samples) {
      const MatrixX<Scalar> w =
          matrix_log(SpdMatrix<Scalar>(detail::whiten(pis, s), Scalar(0))).matrix();
      e.disp += w.squaredNorm();
      e.tangent += w;
    }
    e.tangent /= n;
    return e;
  };

  KarcherResult<Scalar> out;
  out.mean = SpdMatrix<Scalar>(sum / n, Scalar(0));
  Eval cur = evaluate(out.mean);
  for (int iter = 0;; ++iter) {
    out.dispersion.push_back(cur.disp);
    out.tangent_norm = cur.tangent.norm();
    out.iterations = iter;
    if (out.tangent_norm < Scalar(opts.tol)) {
      out.converged = true;
      break;
    }
    if (iter == opts.max_iter) break;
    const MatrixX<Scalar> ps = out.mean.sqrt();
    // Once the expected decrease n |T|^2 is lost in rounding, the full step
    // is taken unless it raises the dispersion by more than a few ulps.
    const Scalar ulp = std::numeric_limits<Scalar>::epsilon() * cur.disp;
    const bool in_noise = n * out.tangent_norm * out.tangent_norm <= Scalar(1024) * ulp;
    bool moved = false;
    for (Scalar t = 1; t > Scalar(1e-6); t /= 2) {
      const SpdMatrix<Scalar> step = matrix_exp(SymMatrix<Scalar>(MatrixX<Scalar>(t * cur.tangent)));
      SpdMatrix<Scalar> cand(ps * step.matrix() * ps, Scalar(0));
      Eval next = evaluate(cand);
      if (next.disp <= cur.disp + (in_noise ? Scalar(8) * ulp : Scalar(0))) {
        out.mean = std::move(cand);
        cur = std::move(next);
        moved = true;
        break;
      }
    }
    // No admissible step: the estimate is as good as rounding allows.
    if (!moved) break;
  }
  return out;
}

/// Debug text format: d, then d rows of d values with 17 significant digits.
template <typename Scalar>
std::ostream& write_matrix_text(std::ostream& os, const SymMatrix<Scalar>& m) {
  const auto old_prec = os.precision(17);
  os << m.dim() << '\n';
  for (Index i = 0; i < m.dim(); ++i) {
    for (Index j = 0; j < m.dim(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
  os.precision(old_prec);
  return os;
}

template <typename Scalar>
SymMatrix<Scalar> read_matrix_text(std::istream& is) {
  Index d = 0;
  if (!(is >> d) || d < 1) throw DataError("read_matrix_text: missing or invalid dimension");
  MatrixX<Scalar> m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (!(is >> m(i, j))) throw DataError("read_matrix_text: truncated matrix body");
  return SymMatrix<Scalar>(m);
}

using SymMatrixd = SymMatrix<double>;
using SpdMatrixd = SpdMatrix<double>;
using LeVectord = LeVector<double>;
using EigPaird = EigPair<double>;

}  // namespace lebow
