#pragma once

#include <cmath>
#include <vector>

#include "faust/norms.hpp"
#include "faust/sparse_matrix.hpp"
#include "faust/types.hpp"

namespace faust {

/// A multi-layer sparse operator: scale * F_0 * F_1 * ... * F_{J-1}, stored
/// leftmost factor first. Adjacent factor dimensions chain, so the operator
/// maps R^cols() to R^rows(). Immutable after construction.
template <typename Scalar>
class FaustOperator {
 public:
  FaustOperator(Scalar scale, std::vector<SparseMatrix<Scalar>> factors)
      : scale_(scale), factors_(std::move(factors)) {
    detail::require(!factors_.empty(), "FaustOperator: at least one factor required");
    detail::require(std::isfinite(static_cast<double>(scale_)),
                    "FaustOperator: scale must be finite");
    for (std::size_t j = 0; j + 1 < factors_.size(); ++j)
      detail::require(factors_[j].cols() == factors_[j + 1].rows(),
                      "FaustOperator: factor dimensions do not chain");
  }

  Scalar scale() const { return scale_; }
  Index numFactors() const { return static_cast<Index>(factors_.size()); }
  const SparseMatrix<Scalar>& factor(Index j) const { return factors_[j]; }
  const std::vector<SparseMatrix<Scalar>>& factors() const { return factors_; }

  Index rows() const { return factors_.front().rows(); }
  Index cols() const { return factors_.back().cols(); }

  /// Total number of stored nonzeros across all factors.
  Index totalNonZeros() const {
    Index s = 0;
    for (const auto& f : factors_) s += f.nnz();
    return s;
  }

  /// y = scale * F_0 (F_1 (... (F_{J-1} x))). Costs at most one multiply-add
  /// per stored entry per factor, plus rows() multiplies for the scale.
  DenseVector<Scalar> apply(const DenseVector<Scalar>& x, FlopCounter* flops = nullptr) const {
    detail::require(x.size() == cols(), "FaustOperator::apply: dimension mismatch");
    DenseVector<Scalar> y = x;
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) y = it->apply(y, flops);
    y *= scale_;
    if (flops) flops->add(static_cast<std::uint64_t>(rows()));
    return y;
  }

  /// y = scale * F_{J-1}^T (... (F_0^T x)).
  DenseVector<Scalar> applyTranspose(const DenseVector<Scalar>& x,
                                     FlopCounter* flops = nullptr) const {
    detail::require(x.size() == rows(), "FaustOperator::applyTranspose: dimension mismatch");
    DenseVector<Scalar> y = x;
    for (const auto& f : factors_) y = f.applyTranspose(y, flops);
    y *= scale_;
    if (flops) flops->add(static_cast<std::uint64_t>(cols()));
    return y;
  }

  /// Dense expansion scale * prod F_j, multiplying right to left.
  DenseMatrix<Scalar> toDense() const {
    DenseMatrix<Scalar> m = factors_.back().toDense();
    for (auto it = std::next(factors_.rbegin()); it != factors_.rend(); ++it)
      m = it->toDense() * m;
    return scale_ * m;
  }

  FaustOperator transposed() const {
    std::vector<SparseMatrix<Scalar>> factors;
    factors.reserve(factors_.size());
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it)
      factors.push_back(it->transposed());
    return FaustOperator(scale_, std::move(factors));
  }

 private:
  Scalar scale_;
  std::vector<SparseMatrix<Scalar>> factors_;
};

/// RC = total nonzeros of the factorization over nonzeros of the dense target.
template <typename Scalar>
Scalar relativeComplexity(const FaustOperator<Scalar>& f, const DenseMatrix<Scalar>& a) {
  Index nnzA = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != Scalar(0)) ++nnzA;
  detail::require(nnzA > 0, "relativeComplexity: target matrix is all-zero");
  return Scalar(f.totalNonZeros()) / Scalar(nnzA);
}

template <typename Scalar>
Scalar relativeComplexityGain(const FaustOperator<Scalar>& f, const DenseMatrix<Scalar>& a) {
  return Scalar(1) / relativeComplexity(f, a);
}

/// Spectral-norm approximation error ||A - expansion(F)||_2 / ||A||_2.
template <typename Scalar>
Scalar relativeError(const DenseMatrix<Scalar>& a, const FaustOperator<Scalar>& f,
                     Scalar tol = 1e-9, std::uint64_t seed = 0) {
  detail::require(a.rows() == f.rows() && a.cols() == f.cols(),
                  "relativeError: shape mismatch");
  Scalar denom = spectralNorm(a, tol, 0, seed);
  detail::require(denom > Scalar(0), "relativeError: input matrix is zero");
  DenseMatrix<Scalar> diff = a - f.toDense();
  return spectralNorm(diff, tol, 0, seed) / denom;
}

using FaustOperatord = FaustOperator<double>;

}  // namespace faust
