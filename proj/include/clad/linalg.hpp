#ifndef CLAD_LINALG_HPP
#define CLAD_LINALG_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "clad/error.hpp"

namespace clad {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Default diagonal regularizer added to sample covariances.
inline constexpr double kDefaultRidge = 1e-6;

/// Packs the lower triangle of a square matrix row by row:
/// (0,0), (1,0), (1,1), (2,0), ...
template <typename Derived>
Vector<typename Derived::Scalar> lower_triangle(const Eigen::MatrixBase<Derived>& m) {
  const Eigen::Index d = m.rows();
  Vector<typename Derived::Scalar> out(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out[k++] = m(i, j);
  return out;
}

/// Inverse of lower_triangle; the result is symmetric by construction.
template <typename Derived>
Matrix<typename Derived::Scalar> from_lower_triangle(const Eigen::MatrixBase<Derived>& packed,
                                                     Eigen::Index order) {
  if (packed.size() != order * (order + 1) / 2)
    throw Error(Errc::DimensionMismatch, "packed triangle has " + std::to_string(packed.size()) +
                                             " entries, expected " +
                                             std::to_string(order * (order + 1) / 2));
  Matrix<typename Derived::Scalar> m(order, order);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < order; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = packed[k++];
  return m;
}

/// Lower Cholesky factor L with L Lᵀ = m. Only the lower triangle of m is read.
/// Throws NotPositiveDefinite when a pivot is not strictly positive.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(Errc::DimensionMismatch, "cholesky needs a nonempty square matrix");
  Eigen::LLT<Matrix<Scalar>> llt(m.derived());
  if (llt.info() != Eigen::Success)
    throw Error(Errc::NotPositiveDefinite, "nonpositive pivot; raise the ridge");
  Matrix<Scalar> l = llt.matrixL();
  if ((l.diagonal().array() <= Scalar(0)).any() || !l.allFinite())
    throw Error(Errc::NotPositiveDefinite, "nonpositive pivot; raise the ridge");
  return l;
}

/// In-place rank-one update: on return l lᵀ equals the old l lᵀ + v vᵀ.
template <typename Scalar>
void cholesky_rank1_update(Matrix<Scalar>& l, Vector<Scalar> v) {
  const Eigen::Index d = l.rows();
  for (Eigen::Index k = 0; k < d; ++k) {
    const Scalar r = std::hypot(l(k, k), v[k]);
    const Scalar c = r / l(k, k);
    const Scalar s = v[k] / l(k, k);
    l(k, k) = r;
    if (k + 1 < d) {
      const Eigen::Index tail = d - k - 1;
      l.col(k).tail(tail) = (l.col(k).tail(tail) + s * v.tail(tail)) / c;
      v.tail(tail) = c * v.tail(tail) - s * l.col(k).tail(tail);
    }
  }
}

/// Target-class Gaussian statistics. `chol` always factors cov + ridge·I.
template <typename Scalar = double>
struct GaussianModel {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
  Matrix<Scalar> chol;
  Eigen::Index n = 0;
  Scalar ridge = Scalar(kDefaultRidge);

  Eigen::Index dim() const { return mean.size(); }

  /// cov + ridge·I
  Matrix<Scalar> regularized_cov() const {
    Matrix<Scalar> c = cov;
    c.diagonal().array() += ridge;
    return c;
  }
};

using GaussianModeld = GaussianModel<double>;

/// Builds a model from explicit statistics, factoring cov + ridge·I.
template <typename Scalar>
GaussianModel<Scalar> make_gaussian(Vector<Scalar> mean, Matrix<Scalar> cov, Eigen::Index n,
                                    Scalar ridge) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw Error(Errc::DimensionMismatch, "covariance order does not match mean length");
  if (n < 2) throw Error(Errc::TooFewSamples, "a Gaussian model needs n >= 2");
  if (!(ridge >= Scalar(0))) throw Error(Errc::InvalidConfig, "ridge must be nonnegative");
  GaussianModel<Scalar> model{std::move(mean), std::move(cov), {}, n, ridge};
  try {
    model.chol = cholesky(model.regularized_cov());
  } catch (const Error&) {
    throw Error(Errc::NotPositiveDefinite,
                "covariance + ridge is not positive definite (ridge " + std::to_string(ridge) +
                    " too small)");
  }
  return model;
}

/// Mean and unbiased (n-1) sample covariance of the rows of `points`.
template <typename Derived>
GaussianModel<typename Derived::Scalar> fit_gaussian(const Eigen::MatrixBase<Derived>& points,
                                                     typename Derived::Scalar ridge = kDefaultRidge) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  if (n < 2) throw Error(Errc::TooFewSamples, "fit_gaussian needs at least 2 points, got " +
                                                  std::to_string(n));
  Vector<Scalar> mean = points.colwise().mean().transpose();
  const Matrix<Scalar> centered = points.rowwise() - mean.transpose();
  Matrix<Scalar> cov = (centered.adjoint() * centered) / Scalar(n - 1);
  // symmetrize against rounding in the product
  cov = (cov + cov.transpose()).eval() * Scalar(0.5);
  return make_gaussian<Scalar>(std::move(mean), std::move(cov), n, ridge);
}

/// Solves (cov + ridge·I) w = v with two triangular solves against the cached factor.
template <typename Scalar, typename Derived>
Vector<Scalar> spd_solve(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != model.dim())
    throw Error(Errc::DimensionMismatch, "spd_solve: vector length " + std::to_string(v.size()) +
                                             " vs model dimension " + std::to_string(model.dim()));
  Vector<Scalar> w = model.chol.template triangularView<Eigen::Lower>().solve(v);
  model.chol.template triangularView<Eigen::Lower>().adjoint().solveInPlace(w);
  return w;
}

/// Statistics of the model's n points plus x, in O(d²).
///
/// Mean and covariance follow the exact rank-one recurrences. The factor is
/// rescaled and rank-one updated rather than recomputed, so the ridge carried
/// by the result is ridge·(n-1)/n; chol·cholᵀ = cov + ridge·I still holds.
template <typename Scalar, typename Derived>
GaussianModel<Scalar> append_point(const GaussianModel<Scalar>& model,
                                   const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw Error(Errc::DimensionMismatch, "append_point: vector length " + std::to_string(x.size()) +
                                             " vs model dimension " + std::to_string(model.dim()));
  const Scalar n = Scalar(model.n);
  const Scalar total = n + Scalar(1);
  const Scalar shrink = (n - Scalar(1)) / n;
  const Vector<Scalar> delta = x - model.mean;

  GaussianModel<Scalar> out;
  out.n = model.n + 1;
  out.mean = model.mean + delta / total;
  out.cov = shrink * model.cov;
  out.cov.noalias() += (delta * delta.transpose()) / total;
  out.ridge = model.ridge * shrink;
  out.chol = std::sqrt(shrink) * model.chol;
  cholesky_rank1_update<Scalar>(out.chol, delta / std::sqrt(total));
  return out;
}

}  // namespace clad

#endif  // CLAD_LINALG_HPP
