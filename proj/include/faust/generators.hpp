#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "faust/faust_operator.hpp"
#include "faust/sparse_matrix.hpp"
#include "faust/types.hpp"

namespace faust {

namespace detail {

inline bool isPowerOfTwo(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2Exact(Index n) {
  int p = 0;
  while ((Index(1) << p) < n) ++p;
  return p;
}

}  // namespace detail

/// Unnormalized Walsh-Hadamard matrix with +/-1 entries, H_{2n} = [H H; H -H].
template <typename Scalar = double>
DenseMatrix<Scalar> hadamardMatrix(Index n) {
  detail::require(detail::isPowerOfTwo(n), "hadamardMatrix: size must be a power of two");
  DenseMatrix<Scalar> h(1, 1);
  h(0, 0) = Scalar(1);
  for (Index k = 1; k < n; k *= 2) {
    DenseMatrix<Scalar> next(2 * k, 2 * k);
    next.topLeftCorner(k, k) = h;
    next.topRightCorner(k, k) = h;
    next.bottomLeftCorner(k, k) = h;
    next.bottomRightCorner(k, k) = -h;
    h = next;
  }
  return h;
}

/// Butterfly factorization H_n = prod_k (I_{2^{k-1}} kron H_2 kron I_{n/2^k}),
/// log2(n) square factors with exactly 2n nonzeros each. Used as a reference
/// fast transform in tests and demos.
template <typename Scalar = double>
std::vector<SparseMatrix<Scalar>> hadamardFactors(Index n) {
  detail::require(detail::isPowerOfTwo(n) && n >= 2,
                  "hadamardFactors: size must be a power of two >= 2");
  const int levels = detail::log2Exact(n);
  std::vector<SparseMatrix<Scalar>> factors;
  for (int k = 1; k <= levels; ++k) {
    const Index outer = Index(1) << (k - 1);  // identity blocks on the left
    const Index inner = n / (outer * 2);      // identity blocks on the right
    std::vector<typename SparseMatrix<Scalar>::Entry> entries;
    entries.reserve(2 * n);
    for (Index b = 0; b < outer; ++b) {
      const Index base = b * 2 * inner;
      for (Index i = 0; i < inner; ++i) {
        entries.push_back({base + i, base + i, Scalar(1)});
        entries.push_back({base + i, base + inner + i, Scalar(1)});
        entries.push_back({base + inner + i, base + i, Scalar(1)});
        entries.push_back({base + inner + i, base + inner + i, Scalar(-1)});
      }
    }
    factors.emplace_back(n, n, std::move(entries));
  }
  return factors;
}

/// Overcomplete DCT dictionary of n atoms for p*p patches, built as the
/// Kronecker square of a 1D overcomplete DCT and truncated to n columns.
template <typename Scalar = double>
DenseMatrix<Scalar> overcompleteDct(Index patch, Index n) {
  detail::require(patch >= 1 && n >= 1, "overcompleteDct: bad sizes");
  Index t = 1;
  while (t * t < n) ++t;
  DenseMatrix<Scalar> d1(patch, t);
  for (Index k = 0; k < t; ++k) {
    for (Index i = 0; i < patch; ++i)
      d1(i, k) = std::cos(M_PI * double(k) * double(i) / double(t));
    if (k > 0) d1.col(k).array() -= d1.col(k).mean();
    d1.col(k).normalize();
  }
  DenseMatrix<Scalar> d(patch * patch, t * t);
  for (Index a = 0; a < t; ++a)
    for (Index b = 0; b < t; ++b) {
      Index col = a * t + b;
      for (Index i = 0; i < patch; ++i)
        for (Index j = 0; j < patch; ++j) d(i * patch + j, col) = d1(i, a) * d1(j, b);
    }
  return d.leftCols(n);
}

/// A FAuST with the requested dimension chain and per-factor nonzero budgets,
/// supports drawn uniformly and values standard normal, each factor scaled to
/// unit Frobenius norm. dims has J+1 entries ordered left to right, so factor
/// j is dims[j] x dims[j+1].
template <typename Scalar = double>
FaustOperator<Scalar> randomSparseFaust(const std::vector<Index>& dims,
                                        const std::vector<Index>& budgets,
                                        std::uint64_t seed, Scalar scale = Scalar(1)) {
  detail::require(dims.size() >= 2 && budgets.size() + 1 == dims.size(),
                  "randomSparseFaust: need J+1 dims for J budgets");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<SparseMatrix<Scalar>> factors;
  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    const Index rows = dims[j], cols = dims[j + 1];
    const Index cells = rows * cols;
    Index budget = std::min(budgets[j], cells);
    detail::require(budget >= 1, "randomSparseFaust: budget must be positive");
    std::vector<Index> cellIdx(cells);
    for (Index i = 0; i < cells; ++i) cellIdx[i] = i;
    std::shuffle(cellIdx.begin(), cellIdx.end(), rng);
    std::vector<typename SparseMatrix<Scalar>::Entry> entries;
    Scalar sq = 0;
    for (Index p = 0; p < budget; ++p) {
      Scalar v = Scalar(gauss(rng));
      if (v == Scalar(0)) v = Scalar(1);
      entries.push_back({cellIdx[p] % rows, cellIdx[p] / rows, v});
      sq += v * v;
    }
    const Scalar nrm = std::sqrt(sq);
    for (auto& e : entries) e.value /= nrm;
    factors.emplace_back(rows, cols, std::move(entries));
  }
  return FaustOperator<Scalar>(scale, std::move(factors));
}

/// Synthetic measurement operator for recovery experiments: a chain of square
/// random sparse factors and a rightmost factor with exactly `perColumn`
/// entries per column, rescaled so every column of the expanded operator has
/// unit norm. The returned FAuST expands to the measurement matrix exactly.
template <typename Scalar = double>
FaustOperator<Scalar> plantedMeasurementOperator(Index rows, Index cols, Index numSquare,
                                                 Index squareNnz, Index perColumn,
                                                 std::uint64_t seed) {
  detail::require(rows >= 2 && cols >= rows, "plantedMeasurementOperator: bad sizes");
  detail::require(perColumn >= 1 && perColumn <= rows,
                  "plantedMeasurementOperator: bad per-column budget");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto draw = [&]() {
    Scalar v = Scalar(gauss(rng));
    return v == Scalar(0) ? Scalar(1) : v;
  };

  std::vector<SparseMatrix<Scalar>> factors;
  DenseMatrix<Scalar> left = DenseMatrix<Scalar>::Identity(rows, rows);
  for (Index f = 0; f < numSquare; ++f) {
    std::vector<Index> cells(rows * rows);
    std::iota(cells.begin(), cells.end(), Index(0));
    std::shuffle(cells.begin(), cells.end(), rng);
    const Index nnz = std::min(squareNnz, rows * rows);
    std::vector<typename SparseMatrix<Scalar>::Entry> entries;
    Scalar sq = 0;
    for (Index p = 0; p < nnz; ++p) {
      const Scalar v = draw();
      entries.push_back({cells[p] % rows, cells[p] / rows, v});
      sq += v * v;
    }
    for (auto& e : entries) e.value /= std::sqrt(sq);
    factors.emplace_back(rows, rows, std::move(entries));
    left = left * factors.back().toDense();
  }

  std::vector<Index> rowIdx(rows);
  std::iota(rowIdx.begin(), rowIdx.end(), Index(0));
  std::vector<typename SparseMatrix<Scalar>::Entry> entries;
  for (Index c = 0; c < cols; ++c) {
    std::shuffle(rowIdx.begin(), rowIdx.end(), rng);
    DenseVector<Scalar> col = DenseVector<Scalar>::Zero(rows);
    std::vector<typename SparseMatrix<Scalar>::Entry> colEntries;
    for (Index p = 0; p < perColumn; ++p) {
      const Scalar v = draw();
      colEntries.push_back({rowIdx[p], c, v});
      col[rowIdx[p]] = v;
    }
    // Unit-norm expanded column keeps greedy correlations comparable.
    const Scalar nrm = (left * col).norm();
    for (auto& e : colEntries) entries.push_back({e.row, e.col, e.value / nrm});
  }
  factors.emplace_back(rows, cols, std::move(entries));
  return FaustOperator<Scalar>(Scalar(1), std::move(factors));
}

template <typename Scalar = double>
DenseMatrix<Scalar> randomGaussianMatrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  DenseMatrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Scalar(gauss(rng));
  return m;
}

}  // namespace faust
