#pragma once

#include <variant>

#include "faust/faust_operator.hpp"
#include "faust/norms.hpp"
#include "faust/types.hpp"

namespace faust {

/// Measurement operator abstraction: a dense matrix or a FAuST behind one
/// interface, so recovery solvers run identically on either.
template <typename Scalar>
class LinearOp {
 public:
  explicit LinearOp(DenseMatrix<Scalar> m) : op_(std::move(m)) {}
  explicit LinearOp(FaustOperator<Scalar> f) : op_(std::move(f)) {}

  Index rows() const {
    return std::holds_alternative<DenseMatrix<Scalar>>(op_)
               ? std::get<DenseMatrix<Scalar>>(op_).rows()
               : std::get<FaustOperator<Scalar>>(op_).rows();
  }
  Index cols() const {
    return std::holds_alternative<DenseMatrix<Scalar>>(op_)
               ? std::get<DenseMatrix<Scalar>>(op_).cols()
               : std::get<FaustOperator<Scalar>>(op_).cols();
  }

  DenseVector<Scalar> apply(const DenseVector<Scalar>& x, FlopCounter* flops = nullptr) const {
    if (auto* m = std::get_if<DenseMatrix<Scalar>>(&op_)) {
      detail::require(x.size() == m->cols(), "LinearOp::apply: dimension mismatch");
      if (flops) flops->add(static_cast<std::uint64_t>(m->size()));
      return *m * x;
    }
    return std::get<FaustOperator<Scalar>>(op_).apply(x, flops);
  }

  DenseVector<Scalar> applyTranspose(const DenseVector<Scalar>& x,
                                     FlopCounter* flops = nullptr) const {
    if (auto* m = std::get_if<DenseMatrix<Scalar>>(&op_)) {
      detail::require(x.size() == m->rows(),
                      "LinearOp::applyTranspose: dimension mismatch");
      if (flops) flops->add(static_cast<std::uint64_t>(m->size()));
      return m->transpose() * x;
    }
    return std::get<FaustOperator<Scalar>>(op_).applyTranspose(x, flops);
  }

  DenseVector<Scalar> column(Index j) const {
    detail::require(j >= 0 && j < cols(), "LinearOp::column: index out of range");
    if (auto* m = std::get_if<DenseMatrix<Scalar>>(&op_)) return m->col(j);
    DenseVector<Scalar> e = DenseVector<Scalar>::Zero(cols());
    e[j] = Scalar(1);
    return std::get<FaustOperator<Scalar>>(op_).apply(e);
  }

  DenseVector<Scalar> columnNorms() const {
    DenseVector<Scalar> norms(cols());
    for (Index j = 0; j < cols(); ++j) norms[j] = column(j).norm();
    return norms;
  }

  /// Operator norm estimate by power iteration through apply/applyTranspose.
  Scalar operatorNorm(Scalar tol = 1e-9, std::uint64_t seed = 0) const {
    const int maxIter = static_cast<int>(10 * std::max(rows(), cols()));
    return detail::powerIteration<Scalar>(
               rows(), cols(), [&](const DenseVector<Scalar>& v) { return apply(v); },
               [&](const DenseVector<Scalar>& v) { return applyTranspose(v); }, tol,
               maxIter, seed)
        .value;
  }

  bool isDense() const { return std::holds_alternative<DenseMatrix<Scalar>>(op_); }

 private:
  std::variant<DenseMatrix<Scalar>, FaustOperator<Scalar>> op_;
};

using LinearOpd = LinearOp<double>;

}  // namespace faust
