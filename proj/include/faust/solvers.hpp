#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "faust/constraints.hpp"
#include "faust/linear_op.hpp"
#include "faust/types.hpp"

namespace faust {

template <typename Scalar>
DenseVector<Scalar> toDenseVector(const Eigen::SparseVector<Scalar>& v) {
  DenseVector<Scalar> out = DenseVector<Scalar>::Zero(v.size());
  for (typename Eigen::SparseVector<Scalar>::InnerIterator it(v); it; ++it)
    out[it.index()] = it.value();
  return out;
}

namespace detail {

// Least squares on the selected columns, normal equations first and a
// complete-orthogonal fallback when the Gram matrix is rank deficient.
template <typename Scalar>
DenseVector<Scalar> solveOnSupport(const DenseMatrix<Scalar>& cols,
                                   const DenseVector<Scalar>& y) {
  DenseMatrix<Scalar> gram = cols.transpose() * cols;
  Eigen::LLT<DenseMatrix<Scalar>> llt(gram);
  if (llt.info() == Eigen::Success) {
    DenseVector<Scalar> sol = llt.solve(cols.transpose() * y);
    if (sol.allFinite()) return sol;
  }
  return cols.completeOrthogonalDecomposition().solve(y);
}

}  // namespace detail

/// Orthogonal matching pursuit with up to t atoms. Columns are used as they
/// come (no renormalization), so unequal column norms weight the greedy
/// selection; ties and the selection itself go by largest |correlation| with
/// the residual, lowest column index winning ties. Selection stops early if
/// the residual is exactly orthogonal to every remaining column.
template <typename Scalar>
Eigen::SparseVector<Scalar> omp(const LinearOp<Scalar>& op, const DenseVector<Scalar>& y,
                                Index t) {
  detail::require(t >= 1 && t <= op.cols(), "omp: atom budget out of range");
  detail::require(y.size() == op.rows(), "omp: measurement length mismatch");

  std::vector<Index> support;
  DenseMatrix<Scalar> selected(op.rows(), 0);
  DenseVector<Scalar> coeffs;
  DenseVector<Scalar> residual = y;

  for (Index step = 0; step < t; ++step) {
    if (residual.norm() == Scalar(0)) break;
    DenseVector<Scalar> corr = op.applyTranspose(residual);
    Index best = -1;
    Scalar bestAbs = Scalar(0);
    for (Index j = 0; j < corr.size(); ++j) {
      if (std::find(support.begin(), support.end(), j) != support.end()) continue;
      const Scalar a = std::abs(corr[j]);
      if (a > bestAbs) {
        bestAbs = a;
        best = j;
      }
    }
    if (best < 0) break;  // residual orthogonal to all remaining columns

    support.push_back(best);
    selected.conservativeResize(Eigen::NoChange, selected.cols() + 1);
    selected.col(selected.cols() - 1) = op.column(best);
    coeffs = detail::solveOnSupport(selected, y);
    residual = y - selected * coeffs;
  }

  Eigen::SparseVector<Scalar> gamma(op.cols());
  for (std::size_t i = 0; i < support.size(); ++i)
    if (coeffs[static_cast<Index>(i)] != Scalar(0))
      gamma.insert(support[i]) = coeffs[static_cast<Index>(i)];
  return gamma;
}

/// Iterative hard thresholding: gamma <- H_t(gamma + mu * op^T (y - op gamma)).
/// mu <= 0 selects the default step 1 / ||op||_2^2. Aborts when the iterate
/// norm exceeds 1e12.
template <typename Scalar>
Eigen::SparseVector<Scalar> iht(const LinearOp<Scalar>& op, const DenseVector<Scalar>& y,
                                Index t, int steps, Scalar mu = Scalar(0)) {
  detail::require(t >= 1 && t <= op.cols(), "iht: sparsity out of range");
  detail::require(y.size() == op.rows(), "iht: measurement length mismatch");
  detail::require(steps >= 1, "iht: need at least one step");
  if (mu <= Scalar(0)) {
    const Scalar nrm = op.operatorNorm();
    detail::require(nrm > Scalar(0), "iht: zero operator needs an explicit step size");
    mu = Scalar(1) / (nrm * nrm);
  }

  DenseVector<Scalar> gamma = DenseVector<Scalar>::Zero(op.cols());
  for (int it = 0; it < steps; ++it) {
    DenseVector<Scalar> grad = op.applyTranspose(y - op.apply(gamma));
    DenseVector<Scalar> cand = gamma + mu * grad;
    std::vector<Index> keep = topKIndices(cand, t);
    gamma.setZero();
    for (Index idx : keep) gamma[idx] = cand[idx];
    if (gamma.norm() > Scalar(1e12))
      throw NumericalError("iht: iterate diverged at step " + std::to_string(it));
  }

  Eigen::SparseVector<Scalar> out(op.cols());
  for (Index j = 0; j < gamma.size(); ++j)
    if (gamma[j] != Scalar(0)) out.insert(j) = gamma[j];
  return out;
}

struct LocalizationRow {
  int trial = 0;
  std::string label;
  std::vector<Index> trueSupport;
  std::vector<Index> recovered;
  int overlap = 0;
  double distance = std::numeric_limits<double>::quiet_NaN();
};

struct LocalizationSummary {
  std::string label;
  double meanOverlap = 0;   // in [0, 1]
  double exactRate = 0;     // fraction of trials with the full support recovered
  double meanDistance = std::numeric_limits<double>::quiet_NaN();
};

struct LocalizationReport {
  std::vector<LocalizationRow> rows;
  std::vector<LocalizationSummary> summaries;

  void writeCsv(std::ostream& os) const {
    os << "trial,operator,true_support,recovered_support,overlap,distance\n";
    for (const auto& r : rows) {
      os << r.trial << ',' << r.label << ',';
      for (std::size_t i = 0; i < r.trueSupport.size(); ++i)
        os << (i ? ";" : "") << r.trueSupport[i];
      os << ',';
      for (std::size_t i = 0; i < r.recovered.size(); ++i)
        os << (i ? ";" : "") << r.recovered[i];
      os << ',' << r.overlap << ',';
      if (r.distance == r.distance) os << r.distance;
      os << '\n';
    }
  }
};

/// Synthetic source-recovery protocol: every trial plants a 2-sparse vector
/// with Gaussian amplitudes on a uniformly random support, measures it through
/// the exact matrix, then lets OMP recover it with the exact matrix and with
/// each approximate operator. Per-trial seeds derive deterministically from
/// the master seed. When a coordinate table is given (one row per column of m,
/// any dimension), the report also carries the mean distance from each true
/// source to the closest recovered one.
template <typename Scalar>
LocalizationReport localizationExperiment(
    const DenseMatrix<Scalar>& m, const std::vector<FaustOperator<Scalar>>& approximations,
    int trials, std::uint64_t seed,
    const std::optional<DenseMatrix<Scalar>>& coordinates = std::nullopt,
    Index sparsity = 2) {
  detail::require(trials >= 1, "localizationExperiment: need at least one trial");
  detail::require(m.cols() >= sparsity, "localizationExperiment: too few columns");
  if (coordinates)
    detail::require(coordinates->rows() == m.cols(),
                    "localizationExperiment: coordinate table must have one row per column");

  std::vector<LinearOp<Scalar>> ops;
  std::vector<std::string> labels;
  ops.emplace_back(DenseMatrix<Scalar>(m));
  labels.push_back("dense");
  for (std::size_t i = 0; i < approximations.size(); ++i) {
    ops.emplace_back(approximations[i]);
    labels.push_back("faust-" + std::to_string(i));
  }

  LocalizationReport report;
  std::vector<double> overlapSum(ops.size(), 0), exactCount(ops.size(), 0),
      distSum(ops.size(), 0);

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (trial + 1));
    std::uniform_int_distribution<Index> pick(0, m.cols() - 1);
    std::normal_distribution<double> gauss;

    std::vector<Index> trueSupport;
    while (static_cast<Index>(trueSupport.size()) < sparsity) {
      Index idx = pick(rng);
      if (std::find(trueSupport.begin(), trueSupport.end(), idx) == trueSupport.end())
        trueSupport.push_back(idx);
    }
    std::sort(trueSupport.begin(), trueSupport.end());
    DenseVector<Scalar> gamma = DenseVector<Scalar>::Zero(m.cols());
    for (Index idx : trueSupport) {
      double v = gauss(rng);
      gamma[idx] = Scalar(v == 0 ? 1 : v);
    }
    DenseVector<Scalar> y = m * gamma;

    for (std::size_t o = 0; o < ops.size(); ++o) {
      Eigen::SparseVector<Scalar> rec = omp(ops[o], y, sparsity);
      std::vector<Index> recovered;
      for (typename Eigen::SparseVector<Scalar>::InnerIterator it(rec); it; ++it)
        recovered.push_back(it.index());
      std::sort(recovered.begin(), recovered.end());

      LocalizationRow row;
      row.trial = trial;
      row.label = labels[o];
      row.trueSupport = trueSupport;
      row.recovered = recovered;
      for (Index idx : trueSupport)
        if (std::find(recovered.begin(), recovered.end(), idx) != recovered.end())
          ++row.overlap;
      overlapSum[o] += double(row.overlap) / double(sparsity);
      if (row.overlap == sparsity) exactCount[o] += 1;

      if (coordinates && !recovered.empty()) {
        double acc = 0;
        for (Index idx : trueSupport) {
          double best = std::numeric_limits<double>::infinity();
          for (Index r : recovered)
            best = std::min(best, double((coordinates->row(idx) - coordinates->row(r)).norm()));
          acc += best;
        }
        row.distance = acc / double(sparsity);
        distSum[o] += row.distance;
      }
      report.rows.push_back(std::move(row));
    }
  }

  for (std::size_t o = 0; o < ops.size(); ++o) {
    LocalizationSummary s;
    s.label = labels[o];
    s.meanOverlap = overlapSum[o] / trials;
    s.exactRate = exactCount[o] / trials;
    if (coordinates) s.meanDistance = distSum[o] / trials;
    report.summaries.push_back(std::move(s));
  }
  return report;
}

}  // namespace faust
