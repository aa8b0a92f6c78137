#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "faust/types.hpp"

namespace faust {

template <typename Scalar>
struct SpectralNormResult {
  Scalar value = 0;
  int iterations = 0;
  bool converged = true;
};

namespace detail {

template <typename Scalar>
DenseVector<Scalar> seededUniformVector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseVector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v[i] = Scalar(dist(rng));
  return v;
}

// Power iteration on A^T A expressed through the two matvec callables.
// Stops when the relative change of the sigma estimate drops below tol.
template <typename Scalar, typename Apply, typename ApplyT>
SpectralNormResult<Scalar> powerIteration(Index rows, Index cols, Apply&& apply,
                                          ApplyT&& applyT, Scalar tol, int maxIter,
                                          std::uint64_t seed) {
  SpectralNormResult<Scalar> res;
  DenseVector<Scalar> v = seededUniformVector<Scalar>(cols, seed);
  Scalar prev = -1;
  for (int it = 0; it < maxIter; ++it) {
    Scalar vn = v.norm();
    if (vn == Scalar(0)) {
      // A^T A annihilated the iterate: operator is (numerically) zero.
      res.value = 0;
      res.iterations = it;
      return res;
    }
    v /= vn;
    DenseVector<Scalar> w = apply(v);
    Scalar est = w.norm();
    res.iterations = it + 1;
    if (est == Scalar(0)) {
      res.value = 0;
      return res;
    }
    if (prev >= Scalar(0) && std::abs(est - prev) <= tol * est) {
      res.value = est;
      return res;
    }
    prev = est;
    v = applyT(w);
  }
  res.value = prev < Scalar(0) ? Scalar(0) : prev;
  res.converged = false;
  (void)rows;
  return res;
}

}  // namespace detail

/// Largest singular value by power iteration on M^T M, started from a seeded
/// uniform random vector. A zero matrix yields 0 rather than an error so that
/// residual norms of exact factorizations are well defined.
template <typename Derived>
SpectralNormResult<typename Derived::Scalar> spectralNormInfo(
    const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol = 1e-9,
    int maxIter = 0, std::uint64_t seed = 0) {
  using Scalar = typename Derived::Scalar;
  if (maxIter <= 0) maxIter = static_cast<int>(10 * std::max(m.rows(), m.cols()));
  const auto& mat = m.derived();
  return detail::powerIteration<Scalar>(
      m.rows(), m.cols(), [&](const DenseVector<Scalar>& v) { return (mat * v).eval(); },
      [&](const DenseVector<Scalar>& v) { return (mat.transpose() * v).eval(); }, tol,
      maxIter, seed);
}

template <typename Derived>
typename Derived::Scalar spectralNorm(const Eigen::MatrixBase<Derived>& m,
                                      typename Derived::Scalar tol = 1e-9,
                                      int maxIter = 0, std::uint64_t seed = 0) {
  return spectralNormInfo(m, tol, maxIter, seed).value;
}

template <typename Scalar>
struct TruncatedSvd {
  DenseMatrix<Scalar> u;       // m x r, orthonormal columns
  DenseVector<Scalar> sigma;   // r, nonincreasing
  DenseMatrix<Scalar> v;       // n x r, orthonormal columns

  DenseMatrix<Scalar> reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

namespace detail {

// Orthonormal completion of the columns of q that came out degenerate
// (zero singular values leave the corresponding u columns undefined).
template <typename Scalar>
void completeOrthonormal(DenseMatrix<Scalar>& q, Index firstBad, std::uint64_t seed) {
  const Index n = q.rows(), r = q.cols();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  for (Index j = firstBad; j < r; ++j) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      DenseVector<Scalar> c(n);
      for (Index i = 0; i < n; ++i) c[i] = Scalar(dist(rng));
      for (Index k = 0; k < j; ++k) c -= q.col(k).dot(c) * q.col(k);
      Scalar nrm = c.norm();
      if (nrm > Scalar(1e-8)) {
        q.col(j) = c / nrm;
        break;
      }
    }
  }
}

}  // namespace detail

/// Best rank-r approximation by orthogonal (subspace) iteration on the Gram
/// matrix of the smaller side, with a Rayleigh-Ritz rotation at the end.
template <typename Scalar>
TruncatedSvd<Scalar> truncatedSvd(const DenseMatrix<Scalar>& a, Index r,
                                  Scalar tol = 1e-10, int maxIter = 300,
                                  std::uint64_t seed = 0) {
  const Index m = a.rows(), n = a.cols();
  detail::require(r >= 1 && r <= std::min(m, n), "truncatedSvd: rank out of range");

  const bool tall = m >= n;  // iterate on the smaller Gram side
  const Index d = tall ? n : m;

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> dist;
  DenseMatrix<Scalar> q(d, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < d; ++i) q(i, j) = Scalar(dist(rng));
  q = Eigen::HouseholderQR<DenseMatrix<Scalar>>(q).householderQ() *
      DenseMatrix<Scalar>::Identity(d, r);

  auto gram = [&](const DenseMatrix<Scalar>& x) {
    return tall ? (a.transpose() * (a * x).eval()).eval()
                : (a * (a.transpose() * x).eval()).eval();
  };

  DenseVector<Scalar> prev = DenseVector<Scalar>::Constant(r, Scalar(-1));
  for (int it = 0; it < maxIter; ++it) {
    DenseMatrix<Scalar> z = gram(q);
    Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(z);
    q = qr.householderQ() * DenseMatrix<Scalar>::Identity(d, r);
    DenseVector<Scalar> ritz = (q.transpose() * gram(q)).diagonal();
    Scalar top = ritz.cwiseAbs().maxCoeff();
    if (prev[0] >= Scalar(0) &&
        (ritz - prev).cwiseAbs().maxCoeff() <= tol * std::max(top, Scalar(1e-30)))
      break;
    prev = ritz;
  }

  // Ritz rotation: diagonalize the projected Gram matrix, sort descending.
  DenseMatrix<Scalar> t = q.transpose() * gram(q);
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(Scalar(0.5) * (t + t.transpose()));
  DenseVector<Scalar> evals = es.eigenvalues();
  DenseMatrix<Scalar> rot = es.eigenvectors();
  TruncatedSvd<Scalar> out;
  out.sigma.resize(r);
  DenseMatrix<Scalar> basis(d, r);
  for (Index j = 0; j < r; ++j) {
    const Index src = r - 1 - j;  // SelfAdjointEigenSolver sorts ascending
    out.sigma[j] = std::sqrt(std::max(evals[src], Scalar(0)));
    basis.col(j) = q * rot.col(src);
  }

  DenseMatrix<Scalar>& small = tall ? out.v : out.u;
  DenseMatrix<Scalar>& large = tall ? out.u : out.v;
  small = basis;
  large.resize(tall ? m : n, r);
  Index firstBad = r;
  for (Index j = 0; j < r; ++j) {
    DenseVector<Scalar> w = tall ? (a * small.col(j)).eval() : (a.transpose() * small.col(j)).eval();
    if (out.sigma[j] > Scalar(0) && out.sigma[j] * Scalar(1e12) > out.sigma[0]) {
      large.col(j) = w / out.sigma[j];
    } else if (firstBad == r) {
      firstBad = j;
    }
  }
  if (firstBad < r) detail::completeOrthonormal(large, firstBad, seed ^ 0xabcdu);
  return out;
}

using TruncatedSvdd = TruncatedSvd<double>;

}  // namespace faust
