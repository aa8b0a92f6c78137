#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "faust/constraints.hpp"
#include "faust/faust_operator.hpp"
#include "faust/norms.hpp"
#include "faust/trace.hpp"
#include "faust/types.hpp"

namespace faust {

struct PalmConfig {
  int maxIter = 50;
  double stepMargin = 1e-3;   // step size is (1 + stepMargin) times the modulus
  double spectralTol = 1e-9;  // tolerance of the operator-norm power iterations
  /// When set, stop once the objective decrease over a 10-iteration window
  /// falls below this floor.
  std::optional<double> stopThreshold;
};

/// Mutable solver state: the scale and dense working copies of the factors,
/// leftmost first. Factors are re-sparsified by projection at every update,
/// so after any full sweep each working copy is feasible for its constraint.
template <typename Scalar>
struct PalmState {
  Scalar lambda = Scalar(1);
  std::vector<DenseMatrix<Scalar>> factors;
  int iteration = 0;
  std::vector<Scalar> objectiveTrace;
};

template <typename Scalar>
struct PalmResult {
  FaustOperator<Scalar> op;
  RunTrace trace;
  PalmState<Scalar> state;
};

/// Data-fidelity term 0.5 * ||A - lambda * prod(factors)||_F^2. Feasibility of
/// the factors is the solver's invariant, not checked here.
template <typename Scalar>
Scalar objective(const DenseMatrix<Scalar>& a, Scalar lambda,
                 const std::vector<DenseMatrix<Scalar>>& factors) {
  detail::require(!factors.empty(), "objective: empty factor list");
  DenseMatrix<Scalar> prod = factors.front();
  for (std::size_t j = 1; j < factors.size(); ++j) prod = prod * factors[j];
  detail::require(prod.rows() == a.rows() && prod.cols() == a.cols(),
                  "objective: factor chain does not match target shape");
  return Scalar(0.5) * (a - lambda * prod).squaredNorm();
}

/// Gradient of the smooth part with respect to the middle factor:
/// lambda * L^T (lambda * L * S * R - A) * R^T. An empty (0x0) L or R stands
/// for the identity.
template <typename Scalar>
DenseMatrix<Scalar> gradientFactor(const DenseMatrix<Scalar>& left,
                                   const DenseMatrix<Scalar>& s,
                                   const DenseMatrix<Scalar>& right, Scalar lambda,
                                   const DenseMatrix<Scalar>& a) {
  DenseMatrix<Scalar> prod = s;
  if (left.size()) {
    detail::require(left.cols() == s.rows(), "gradientFactor: L*S shape mismatch");
    prod = left * prod;
  }
  if (right.size()) {
    detail::require(s.cols() == right.rows(), "gradientFactor: S*R shape mismatch");
    prod = prod * right;
  }
  detail::require(prod.rows() == a.rows() && prod.cols() == a.cols(),
                  "gradientFactor: chain does not match target shape");
  DenseMatrix<Scalar> grad = lambda * prod - a;
  if (left.size()) grad = left.transpose() * grad;
  if (right.size()) grad = grad * right.transpose();
  return lambda * grad;
}

/// Lipschitz modulus of the factor gradient: lambda^2 ||L||_2^2 ||R||_2^2.
template <typename Scalar>
Scalar lipschitzModulus(const DenseMatrix<Scalar>& left, const DenseMatrix<Scalar>& right,
                        Scalar lambda, Scalar spectralTol = 1e-9) {
  const Scalar nl = left.size() ? spectralNorm(left, spectralTol) : Scalar(1);
  const Scalar nr = right.size() ? spectralNorm(right, spectralTol) : Scalar(1);
  return lambda * lambda * nl * nl * nr * nr;
}

/// Exact minimizer of 0.5 * ||A - lambda * Ahat||_F^2 over lambda:
/// trace(A^T Ahat) / trace(Ahat^T Ahat).
template <typename Scalar>
Scalar updateLambda(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& ahat) {
  detail::require(a.rows() == ahat.rows() && a.cols() == ahat.cols(),
                  "updateLambda: shape mismatch");
  const Scalar denom = ahat.squaredNorm();
  detail::require(denom > Scalar(0), "updateLambda: approximation is all-zero");
  return a.cwiseProduct(ahat).sum() / denom;
}

/// Default initialization: lambda = 1, the rightmost factor zero, every other
/// factor a rectangular identity.
template <typename Scalar>
PalmState<Scalar> defaultPalmInit(const std::vector<ConstraintSet<Scalar>>& constraints) {
  PalmState<Scalar> state;
  state.factors.reserve(constraints.size());
  for (std::size_t j = 0; j < constraints.size(); ++j) {
    const auto& c = constraints[j];
    if (j + 1 == constraints.size())
      state.factors.push_back(DenseMatrix<Scalar>::Zero(c.rows(), c.cols()));
    else
      state.factors.push_back(DenseMatrix<Scalar>::Identity(c.rows(), c.cols()));
  }
  return state;
}

namespace detail {

template <typename Scalar>
void checkChain(const DenseMatrix<Scalar>& a,
                const std::vector<ConstraintSet<Scalar>>& constraints) {
  require(!constraints.empty(), "palm4msa: at least one constraint required");
  require(constraints.front().rows() == a.rows(),
          "palm4msa: leftmost constraint rows must match the target");
  require(constraints.back().cols() == a.cols(),
          "palm4msa: rightmost constraint cols must match the target");
  for (std::size_t j = 0; j + 1 < constraints.size(); ++j)
    require(constraints[j].cols() == constraints[j + 1].rows(),
            "palm4msa: constraint shapes do not chain");
}

template <typename Scalar>
SparseMatrix<Scalar> sparsify(const DenseMatrix<Scalar>& m) {
  return SparseMatrix<Scalar>::fromDense(m);
}

template <typename Scalar>
std::int64_t denseNnz(const DenseMatrix<Scalar>& m) {
  std::int64_t n = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != Scalar(0)) ++n;
  return n;
}

}  // namespace detail

/// Alternating projected-gradient solver for the multi-layer approximation
/// objective. Factors and constraints are ordered leftmost first; one outer
/// iteration sweeps the factors from the rightmost to the leftmost (so the
/// right-hand products use values already updated in this iteration, the
/// left-hand ones the previous iterate), then refreshes the scale in closed
/// form. The step for factor j is 1/c_j with
/// c_j = (1 + stepMargin) * lambda^2 ||L||_2^2 ||R||_2^2.
template <typename Scalar>
PalmResult<Scalar> palm4msa(const DenseMatrix<Scalar>& a,
                            const std::vector<ConstraintSet<Scalar>>& constraints,
                            std::optional<PalmState<Scalar>> init,
                            const PalmConfig& config = {}) {
  detail::checkChain(a, constraints);
  detail::require(config.maxIter >= 1, "palm4msa: need at least one iteration");

  const std::size_t numFactors = constraints.size();
  PalmState<Scalar> state = init ? std::move(*init) : defaultPalmInit(constraints);
  detail::require(state.factors.size() == numFactors,
                  "palm4msa: init state has wrong number of factors");
  for (std::size_t j = 0; j < numFactors; ++j)
    detail::require(state.factors[j].rows() == constraints[j].rows() &&
                        state.factors[j].cols() == constraints[j].cols(),
                    "palm4msa: init factor shape mismatch");

  const Scalar margin = Scalar(1) + Scalar(config.stepMargin);
  const Scalar spectralTol = Scalar(config.spectralTol);
  RunTrace trace;

  for (int iter = 0; iter < config.maxIter; ++iter) {
    // Prefix products of the not-yet-updated factors stay valid for the whole
    // sweep; the suffix product is grown incrementally as the sweep moves left.
    std::vector<DenseMatrix<Scalar>> prefix(numFactors);
    DenseMatrix<Scalar> acc;  // empty = identity
    for (std::size_t j = 0; j < numFactors; ++j) {
      prefix[j] = acc;
      acc = acc.size() ? (acc * state.factors[j]).eval() : state.factors[j];
    }

    DenseMatrix<Scalar> right;  // empty = identity
    for (std::size_t rj = 0; rj < numFactors; ++rj) {
      const std::size_t j = numFactors - 1 - rj;
      const DenseMatrix<Scalar>& left = prefix[j];

      const Scalar nl = left.size() ? spectralNorm(left, spectralTol) : Scalar(1);
      const Scalar nr = right.size() ? spectralNorm(right, spectralTol) : Scalar(1);
      const Scalar c = margin * state.lambda * state.lambda * nl * nl * nr * nr;

      DenseMatrix<Scalar> step = state.factors[j];
      if (c > Scalar(0) && std::isfinite(static_cast<double>(c)))
        step -= gradientFactor(left, state.factors[j], right, state.lambda, a) / c;
      state.factors[j] = project(step, constraints[j]);

      right = right.size() ? (state.factors[j] * right).eval() : state.factors[j];
    }

    // `right` now holds the full product of the updated factors.
    const Scalar denom = right.squaredNorm();
    if (denom > Scalar(0)) state.lambda = a.cwiseProduct(right).sum() / denom;

    const Scalar psi = Scalar(0.5) * (a - state.lambda * right).squaredNorm();
    if (!std::isfinite(static_cast<double>(psi)) ||
        !std::isfinite(static_cast<double>(state.lambda)))
      throw NumericalError("palm4msa: NaN/Inf in iterate at iteration " +
                           std::to_string(iter));
    state.objectiveTrace.push_back(psi);
    state.iteration = iter + 1;

    TraceRow row;
    row.phase = "palm";
    row.iteration = iter;
    row.objective = static_cast<double>(psi);
    row.lambda = static_cast<double>(state.lambda);
    for (const auto& f : state.factors) row.factorNnz.push_back(detail::denseNnz(f));
    trace.add(std::move(row));

    if (config.stopThreshold && state.objectiveTrace.size() > 10) {
      const std::size_t n = state.objectiveTrace.size();
      const Scalar drop = state.objectiveTrace[n - 11] - state.objectiveTrace[n - 1];
      if (drop < Scalar(*config.stopThreshold)) break;
    }
  }

  std::vector<SparseMatrix<Scalar>> sparse;
  sparse.reserve(numFactors);
  for (const auto& f : state.factors) sparse.push_back(detail::sparsify(f));
  return PalmResult<Scalar>{FaustOperator<Scalar>(state.lambda, std::move(sparse)),
                            std::move(trace), std::move(state)};
}

}  // namespace faust
