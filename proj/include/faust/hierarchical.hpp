#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "faust/palm.hpp"

namespace faust {

/// Per-level constraint pairs for the hierarchical strategy. Level l (1-based
/// in the trace) splits the current residual into a residual factor obeying
/// `residual` and a sparse factor obeying `factor`. With fromLeft the same
/// plan is applied to the transposed input and the result transposed back.
template <typename Scalar>
struct FactorizationPlan {
  struct Level {
    ConstraintSet<Scalar> residual;
    ConstraintSet<Scalar> factor;
  };

  std::vector<Level> levels;
  bool fromLeft = false;
  /// Optional alternative stopping rule: stop splitting once the relative
  /// error after a global refinement drops below this threshold.
  std::optional<double> stopRelError;

  Index numFactors() const { return static_cast<Index>(levels.size()) + 1; }
};

template <typename Scalar>
FactorizationPlan<Scalar> transposePlan(const FactorizationPlan<Scalar>& plan) {
  FactorizationPlan<Scalar> out;
  out.fromLeft = !plan.fromLeft;
  out.stopRelError = plan.stopRelError;
  for (const auto& level : plan.levels)
    out.levels.push_back({transposeConstraint(level.residual),
                          transposeConstraint(level.factor)});
  return out;
}

/// Constraint schedule for reverse-engineering an n x n Hadamard-like fast
/// transform: J = log2(n) factors, every factor capped at 2n nonzeros and the
/// level-l residual at n^2 / 2^l.
template <typename Scalar = double>
FactorizationPlan<Scalar> makeHadamardPlan(Index n) {
  detail::require(n >= 4 && (n & (n - 1)) == 0,
                  "makeHadamardPlan: n must be a power of two >= 4");
  FactorizationPlan<Scalar> plan;
  Index residualBudget = n * n;
  const Index factorBudget = 2 * n;
  while (residualBudget / 2 >= factorBudget) {
    residualBudget /= 2;
    plan.levels.push_back({ConstraintSet<Scalar>::globalSparsity(n, n, residualBudget),
                           ConstraintSet<Scalar>::globalSparsity(n, n, factorBudget)});
  }
  return plan;
}

/// Constraint schedule for a generic m x n target: the rightmost factor keeps
/// k nonzeros per column, the other factors are square with global sparsity s,
/// and the residual budgets decrease geometrically as floor(P * rho^(l-1)).
template <typename Scalar = double>
FactorizationPlan<Scalar> makeSchedulePlan(Index m, Index n, Index numFactors, Index k,
                                           Index s, double rho, double p) {
  detail::require(numFactors >= 2, "makeSchedulePlan: need at least two factors");
  detail::require(k >= 1 && s >= 1, "makeSchedulePlan: budgets must be positive");
  detail::require(rho > 0 && p > 0, "makeSchedulePlan: rho and P must be positive");
  FactorizationPlan<Scalar> plan;
  for (Index level = 1; level < numFactors; ++level) {
    const Index residualBudget =
        static_cast<Index>(std::floor(p * std::pow(rho, double(level - 1))));
    detail::require(residualBudget >= 1,
                    "makeSchedulePlan: residual budget vanished after flooring");
    auto residual = ConstraintSet<Scalar>::globalSparsity(m, m, residualBudget);
    auto factor = level == 1 ? ConstraintSet<Scalar>::perColumn(m, n, k)
                             : ConstraintSet<Scalar>::globalSparsity(m, m, s);
    plan.levels.push_back({std::move(residual), std::move(factor)});
  }
  return plan;
}

template <typename Scalar>
struct HierarchicalResult {
  FaustOperator<Scalar> op;
  RunTrace trace;
};

namespace detail {

template <typename Scalar>
void checkPlan(const DenseMatrix<Scalar>& a, const FactorizationPlan<Scalar>& plan) {
  require(!plan.levels.empty(), "hierarchicalFactorize: plan needs at least one level");
  Index rows = a.rows(), cols = a.cols();
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    const auto& level = plan.levels[l];
    require(level.residual.rows() == rows,
            "hierarchicalFactorize: residual rows break the chain");
    require(level.residual.cols() == level.factor.rows(),
            "hierarchicalFactorize: level constraints do not chain");
    require(level.factor.cols() == cols,
            "hierarchicalFactorize: factor cols break the chain");
    rows = level.residual.rows();
    cols = level.residual.cols();
  }
}

}  // namespace detail

/// Fig.-style hierarchical strategy: repeatedly split the residual in two with
/// a freshly initialized 2-factor solve, absorb the split's scale into the new
/// residual, then refine all factors so far against the original target
/// starting from their current values. The trace records the objective stream
/// of every inner solve plus one summary row per level with RE and RC.
template <typename Scalar>
HierarchicalResult<Scalar> hierarchicalFactorize(const DenseMatrix<Scalar>& a,
                                                 const FactorizationPlan<Scalar>& plan,
                                                 const PalmConfig& innerConfig = {},
                                                 const PalmConfig& globalConfig = {}) {
  if (plan.fromLeft) {
    FactorizationPlan<Scalar> mirrored = transposePlan(plan);
    DenseMatrix<Scalar> at = a.transpose();
    HierarchicalResult<Scalar> res = hierarchicalFactorize(at, mirrored, innerConfig,
                                                           globalConfig);
    return {res.op.transposed(), std::move(res.trace)};
  }

  detail::checkPlan(a, plan);
  const auto started = std::chrono::steady_clock::now();
  RunTrace trace;

  DenseMatrix<Scalar> residual = a;
  Scalar lambda = Scalar(1);
  // Working chain, leftmost first: [T_l, S_l, ..., S_1].
  std::vector<DenseMatrix<Scalar>> chain;
  std::vector<ConstraintSet<Scalar>> chainConstraints;

  const std::size_t numLevels = plan.levels.size();
  for (std::size_t l = 0; l < numLevels; ++l) {
    const auto& level = plan.levels[l];

    auto split = palm4msa<Scalar>(residual, {level.residual, level.factor}, std::nullopt,
                                  innerConfig);
    trace.append(split.trace, "split-" + std::to_string(l + 1));

    // T_l absorbs the split's scale; the global scale stays with lambda.
    DenseMatrix<Scalar> newResidual = split.state.lambda * split.state.factors[0];
    DenseMatrix<Scalar> newFactor = split.state.factors[1];

    if (chain.empty()) {
      chain = {std::move(newResidual), std::move(newFactor)};
      chainConstraints = {level.residual, level.factor};
    } else {
      chain[0] = std::move(newResidual);
      chain.insert(chain.begin() + 1, std::move(newFactor));
      chainConstraints[0] = level.residual;
      chainConstraints.insert(chainConstraints.begin() + 1, level.factor);
    }

    PalmState<Scalar> init;
    init.lambda = lambda;
    init.factors = chain;
    auto refined = palm4msa<Scalar>(a, chainConstraints, std::move(init), globalConfig);
    trace.append(refined.trace, "refine-" + std::to_string(l + 1));

    lambda = refined.state.lambda;
    chain = std::move(refined.state.factors);
    residual = chain[0];

    const Scalar re = relativeError(a, refined.op);
    TraceRow row;
    row.phase = "level-" + std::to_string(l + 1);
    row.lambda = static_cast<double>(lambda);
    row.relError = static_cast<double>(re);
    row.relComplexity = static_cast<double>(relativeComplexity(refined.op, a));
    for (const auto& f : chain) row.factorNnz.push_back(detail::denseNnz(f));
    row.elapsedMs = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    trace.add(std::move(row));

    if (plan.stopRelError && static_cast<double>(re) <= *plan.stopRelError) break;
  }

  std::vector<SparseMatrix<Scalar>> factors;
  factors.reserve(chain.size());
  for (const auto& f : chain) factors.push_back(SparseMatrix<Scalar>::fromDense(f));
  return {FaustOperator<Scalar>(lambda, std::move(factors)), std::move(trace)};
}

}  // namespace faust
