#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "faust/types.hpp"

namespace faust {

/// Coordinate-list sparse matrix, immutable after construction.
///
/// The triplet list, sorted by (row, col), is the authoritative storage and
/// what gets serialized. A CSR layout is built once at construction and backs
/// apply()/applyTranspose(). Explicit zeros are dropped so that nnz() is the
/// exact l0 count; duplicate coordinates and non-finite values are rejected.
template <typename Scalar>
class SparseMatrix {
 public:
  struct Entry {
    Index row;
    Index col;
    Scalar value;
  };

  SparseMatrix(Index rows, Index cols, std::vector<Entry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    detail::require(rows > 0 && cols > 0, "SparseMatrix: dimensions must be positive");
    for (const Entry& e : entries_) {
      detail::require(e.row >= 0 && e.row < rows_ && e.col >= 0 && e.col < cols_,
                      "SparseMatrix: entry out of bounds");
      detail::require(std::isfinite(static_cast<double>(e.value)),
                      "SparseMatrix: entries must be finite");
    }
    std::erase_if(entries_, [](const Entry& e) { return e.value == Scalar(0); });
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      detail::require(entries_[i - 1].row != entries_[i].row ||
                          entries_[i - 1].col != entries_[i].col,
                      "SparseMatrix: duplicate coordinate");
    }
    buildCsr();
  }

  static SparseMatrix fromDense(const DenseMatrix<Scalar>& m) {
    std::vector<Entry> entries;
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i)
        if (m(i, j) != Scalar(0)) entries.push_back({i, j, m(i, j)});
    return SparseMatrix(m.rows(), m.cols(), std::move(entries));
  }

  /// Rectangular identity: ones on the main diagonal, zeros elsewhere.
  static SparseMatrix identity(Index rows, Index cols) {
    std::vector<Entry> entries;
    for (Index i = 0; i < std::min(rows, cols); ++i) entries.push_back({i, i, Scalar(1)});
    return SparseMatrix(rows, cols, std::move(entries));
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  Scalar frobeniusNorm() const {
    Scalar s = 0;
    for (const Entry& e : entries_) s += e.value * e.value;
    return std::sqrt(s);
  }

  DenseMatrix<Scalar> toDense() const {
    DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Zero(rows_, cols_);
    for (const Entry& e : entries_) m(e.row, e.col) = e.value;
    return m;
  }

  /// y = S * x. Each stored entry costs one multiply-add.
  DenseVector<Scalar> apply(const DenseVector<Scalar>& x, FlopCounter* flops = nullptr) const {
    detail::require(x.size() == cols_, "SparseMatrix::apply: dimension mismatch");
    DenseVector<Scalar> y = DenseVector<Scalar>::Zero(rows_);
    for (Index i = 0; i < rows_; ++i) {
      Scalar acc = 0;
      for (Index p = rowPtr_[i]; p < rowPtr_[i + 1]; ++p) acc += csrVal_[p] * x[csrCol_[p]];
      y[i] = acc;
    }
    if (flops) flops->add(2 * static_cast<std::uint64_t>(nnz()));
    return y;
  }

  /// y = S^T * x, scattering along the same CSR layout.
  DenseVector<Scalar> applyTranspose(const DenseVector<Scalar>& x,
                                     FlopCounter* flops = nullptr) const {
    detail::require(x.size() == rows_, "SparseMatrix::applyTranspose: dimension mismatch");
    DenseVector<Scalar> y = DenseVector<Scalar>::Zero(cols_);
    for (Index i = 0; i < rows_; ++i)
      for (Index p = rowPtr_[i]; p < rowPtr_[i + 1]; ++p) y[csrCol_[p]] += csrVal_[p] * x[i];
    if (flops) flops->add(2 * static_cast<std::uint64_t>(nnz()));
    return y;
  }

  SparseMatrix transposed() const {
    std::vector<Entry> entries;
    entries.reserve(entries_.size());
    for (const Entry& e : entries_) entries.push_back({e.col, e.row, e.value});
    return SparseMatrix(cols_, rows_, std::move(entries));
  }

 private:
  void buildCsr() {
    rowPtr_.assign(rows_ + 1, 0);
    csrCol_.resize(entries_.size());
    csrVal_.resize(entries_.size());
    for (const Entry& e : entries_) ++rowPtr_[e.row + 1];
    for (Index i = 0; i < rows_; ++i) rowPtr_[i + 1] += rowPtr_[i];
    // entries_ are sorted by (row, col), so a single pass fills CSR in order.
    Index p = 0;
    for (const Entry& e : entries_) {
      csrCol_[p] = e.col;
      csrVal_[p] = e.value;
      ++p;
    }
  }

  Index rows_;
  Index cols_;
  std::vector<Entry> entries_;
  std::vector<Index> rowPtr_;
  std::vector<Index> csrCol_;
  std::vector<Scalar> csrVal_;
};

using SparseMatrixd = SparseMatrix<double>;

}  // namespace faust
