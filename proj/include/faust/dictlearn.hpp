#pragma once

#include <chrono>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "faust/generators.hpp"
#include "faust/hierarchical.hpp"
#include "faust/image.hpp"
#include "faust/parallel.hpp"
#include "faust/solvers.hpp"

namespace faust {

template <typename Scalar>
struct Codebook {
  DenseMatrix<Scalar> dictionary;    // m x n, unit-norm columns
  DenseMatrix<Scalar> coefficients;  // n x L, column sparsity <= t
};

namespace detail {

template <typename Scalar>
DenseMatrix<Scalar> codeColumns(const LinearOp<Scalar>& dict, const DenseMatrix<Scalar>& y,
                                Index t, int threads = 1) {
  DenseMatrix<Scalar> gamma = DenseMatrix<Scalar>::Zero(dict.cols(), y.cols());
  parallelFor(y.cols(), threads, [&](Index col) {
    Eigen::SparseVector<Scalar> g = omp(dict, DenseVector<Scalar>(y.col(col)), t);
    for (typename Eigen::SparseVector<Scalar>::InnerIterator it(g); it; ++it)
      gamma(it.index(), col) = it.value();
  });
  return gamma;
}

}  // namespace detail

/// Batch dictionary learning in the K-SVD mold: alternate OMP coding with
/// per-atom rank-1 updates (a few power steps on the restricted residual).
/// Atoms that no training column uses are re-seeded with the currently
/// worst-represented column. Deterministic given the seed.
template <typename Scalar>
Codebook<Scalar> ksvdLikeInit(const DenseMatrix<Scalar>& y, Index numAtoms, Index t,
                              int iters, std::uint64_t seed = 0, int threads = 1) {
  const Index m = y.rows(), numSamples = y.cols();
  detail::require(m >= 1 && numSamples >= 1, "ksvdLikeInit: empty training set");
  detail::require(numAtoms >= 1, "ksvdLikeInit: need at least one atom");
  detail::require(t >= 1 && t <= numAtoms, "ksvdLikeInit: bad column sparsity");
  detail::require(iters >= 1, "ksvdLikeInit: need at least one round");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  // Start from distinct training columns where possible.
  std::vector<Index> perm(numSamples);
  std::iota(perm.begin(), perm.end(), Index(0));
  std::shuffle(perm.begin(), perm.end(), rng);
  DenseMatrix<Scalar> dict(m, numAtoms);
  for (Index j = 0; j < numAtoms; ++j) {
    if (j < numSamples && y.col(perm[j]).norm() > Scalar(0)) {
      dict.col(j) = y.col(perm[j]).normalized();
    } else {
      DenseVector<Scalar> v(m);
      for (Index i = 0; i < m; ++i) v[i] = Scalar(gauss(rng));
      dict.col(j) = v.normalized();
    }
  }

  DenseMatrix<Scalar> gamma;
  for (int round = 0; round < iters; ++round) {
    gamma = detail::codeColumns(LinearOp<Scalar>(dict), y, t, threads);

    DenseMatrix<Scalar> residual = y - dict * gamma;
    for (Index j = 0; j < numAtoms; ++j) {
      std::vector<Index> users;
      for (Index col = 0; col < numSamples; ++col)
        if (gamma(j, col) != Scalar(0)) users.push_back(col);

      if (users.empty()) {
        Index worst = 0;
        Scalar worstNorm = -1;
        for (Index col = 0; col < numSamples; ++col) {
          const Scalar rn = residual.col(col).norm();
          if (rn > worstNorm) {
            worstNorm = rn;
            worst = col;
          }
        }
        if (y.col(worst).norm() > Scalar(0)) dict.col(j) = y.col(worst).normalized();
        continue;
      }

      DenseMatrix<Scalar> e(m, static_cast<Index>(users.size()));
      DenseVector<Scalar> g(static_cast<Index>(users.size()));
      for (std::size_t u = 0; u < users.size(); ++u) {
        e.col(static_cast<Index>(u)) =
            residual.col(users[u]) + dict.col(j) * gamma(j, users[u]);
        g[static_cast<Index>(u)] = gamma(j, users[u]);
      }
      DenseVector<Scalar> atom = dict.col(j);
      for (int power = 0; power < 3; ++power) {
        DenseVector<Scalar> d = e * g;
        const Scalar dn = d.norm();
        if (dn == Scalar(0)) break;
        atom = d / dn;
        g = e.transpose() * atom;
      }
      dict.col(j) = atom;
      for (std::size_t u = 0; u < users.size(); ++u) {
        residual.col(users[u]) += dict.col(j) * gamma(j, users[u]);  // old contribution back
        gamma(j, users[u]) = g[static_cast<Index>(u)];
        residual.col(users[u]) -= dict.col(j) * gamma(j, users[u]);
      }
    }
  }
  return {std::move(dict), std::move(gamma)};
}

template <typename Scalar>
struct DictLearnResult {
  FaustOperator<Scalar> dictionary;
  DenseMatrix<Scalar> coefficients;
  RunTrace trace;
};

/// Hierarchical factorization of an initial dictionary with the coefficient
/// matrix in the loop: each level splits the residual as usual, then refines
/// all dictionary factors against the data matrix with the coefficients held
/// fixed as the rightmost factor, and finally re-codes the coefficients with
/// OMP against the current scaled dictionary. The trace records the data
/// error ||Y - lambda * D * Gamma||_F after every level.
template <typename Scalar>
DictLearnResult<Scalar> hierarchicalDictionaryLearn(
    const DenseMatrix<Scalar>& y, const DenseMatrix<Scalar>& d0,
    const DenseMatrix<Scalar>& gamma0, const FactorizationPlan<Scalar>& plan,
    Index codingAtoms, const PalmConfig& innerConfig = {},
    const PalmConfig& globalConfig = {}, int threads = 1) {
  detail::require(!plan.fromLeft,
                  "hierarchicalDictionaryLearn: from-left plans are not supported here");
  detail::checkPlan(d0, plan);
  detail::require(gamma0.rows() == d0.cols() && gamma0.cols() == y.cols(),
                  "hierarchicalDictionaryLearn: coefficient shape mismatch");
  detail::require(y.rows() == d0.rows(), "hierarchicalDictionaryLearn: data/dictionary mismatch");

  RunTrace trace;
  DenseMatrix<Scalar> residual = d0;
  DenseMatrix<Scalar> gamma = gamma0;
  Scalar lambda = Scalar(1);
  std::vector<DenseMatrix<Scalar>> chain;               // [T_l, S_l, ..., S_1]
  std::vector<ConstraintSet<Scalar>> chainConstraints;  // without the Gamma block

  const std::size_t numLevels = plan.levels.size();
  for (std::size_t l = 0; l < numLevels; ++l) {
    const auto& level = plan.levels[l];

    auto split = palm4msa<Scalar>(residual, {level.residual, level.factor}, std::nullopt,
                                  innerConfig);
    trace.append(split.trace, "dl-split-" + std::to_string(l + 1));

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

    // Dictionary update: refine against the data with Gamma fixed.
    std::vector<DenseMatrix<Scalar>> factorsWithGamma = chain;
    factorsWithGamma.push_back(gamma);
    std::vector<ConstraintSet<Scalar>> constraintsWithGamma = chainConstraints;
    constraintsWithGamma.push_back(ConstraintSet<Scalar>::fixed(gamma));

    PalmState<Scalar> init;
    init.lambda = lambda;
    init.factors = std::move(factorsWithGamma);
    auto refined = palm4msa<Scalar>(y, constraintsWithGamma, std::move(init), globalConfig);
    trace.append(refined.trace, "dl-refine-" + std::to_string(l + 1));

    lambda = refined.state.lambda;
    chain.assign(refined.state.factors.begin(), refined.state.factors.end() - 1);
    residual = chain[0];

    // Coefficients update against the current scaled dictionary.
    std::vector<SparseMatrix<Scalar>> dictFactors;
    for (const auto& f : chain) dictFactors.push_back(SparseMatrix<Scalar>::fromDense(f));
    FaustOperator<Scalar> dict(lambda, std::move(dictFactors));
    gamma = detail::codeColumns(LinearOp<Scalar>(dict), y, codingAtoms, threads);

    TraceRow row;
    row.phase = "dl-level-" + std::to_string(l + 1);
    row.lambda = static_cast<double>(lambda);
    row.objective = static_cast<double>((y - dict.toDense() * gamma).norm());
    row.relComplexity =
        static_cast<double>(Scalar(dict.totalNonZeros()) / Scalar(d0.rows() * d0.cols()));
    for (const auto& f : chain) row.factorNnz.push_back(detail::denseNnz(f));
    trace.add(std::move(row));
  }

  std::vector<SparseMatrix<Scalar>> factors;
  for (const auto& f : chain) factors.push_back(SparseMatrix<Scalar>::fromDense(f));
  return {FaustOperator<Scalar>(lambda, std::move(factors)), std::move(gamma),
          std::move(trace)};
}

struct DenoiseConfig {
  Index patch = 8;
  Index atoms = 128;
  Index codingAtoms = 5;
  Index trainingPatches = 10000;
  Index numFactors = 4;
  Index perColumn = 4;        // k of the constraint schedule
  Index intermediate = 256;   // s of the constraint schedule
  double rho = 0.5;
  double residualBudget = 0;  // P; 0 means patch^4 (the full residual size)
  int ksvdIters = 8;
  bool removeMean = true;
  bool normalizeAtoms = false;
  /// Start from the analytic overcomplete DCT instead of the learned
  /// initialization.
  bool dctInit = false;
  std::uint64_t seed = 0;
  int threads = 1;
  PalmConfig inner;
  PalmConfig global;
};

struct DenoiseReport {
  double psnrNoisy = std::numeric_limits<double>::quiet_NaN();
  double psnrDenoised = std::numeric_limits<double>::quiet_NaN();
  double relComplexity = 0;
  std::int64_t totalNonZeros = 0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double trainSeconds = 0;
  double codeSeconds = 0;

  void writeCsv(std::ostream& os) const {
    os << "psnr_noisy,psnr_denoised,rc,s_tot,sigma,train_seconds,code_seconds\n";
    os << psnrNoisy << ',' << psnrDenoised << ',' << relComplexity << ','
       << totalNonZeros << ',' << sigma << ',' << trainSeconds << ',' << codeSeconds
       << '\n';
  }
};

struct DenoiseResult {
  Image denoised;
  DenoiseReport report;
};

/// Patch-based denoising: learn a FAuST dictionary on randomly sampled noisy
/// patches, code every overlapping patch with OMP and average the overlaps.
/// Patch means are removed before coding and restored after unless disabled;
/// by default atoms are used unnormalized, matching the factor-normalized
/// dictionary (a weighted OMP), and normalizeAtoms enables the conventional
/// variant for comparison.
inline DenoiseResult denoiseImage(const Image& noisy, const DenoiseConfig& config,
                                  const std::optional<Image>& clean = std::nullopt,
                                  double sigma = std::numeric_limits<double>::quiet_NaN()) {
  const Index p = config.patch;
  detail::require(noisy.width >= p && noisy.height >= p,
                  "denoiseImage: image smaller than patch");
  const Index m = p * p;
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<Index> px(0, noisy.width - p), py(0, noisy.height - p);
  DenseMatrix<double> train(m, config.trainingPatches);
  for (Index c = 0; c < config.trainingPatches; ++c) {
    Vectord patch = extractPatch(noisy, px(rng), py(rng), p);
    if (config.removeMean) patch.array() -= patch.mean();
    train.col(c) = patch;
  }

  Codebook<double> cb;
  if (config.dctInit) {
    cb.dictionary = overcompleteDct(p, config.atoms);
    cb.coefficients = detail::codeColumns(LinearOp<double>(cb.dictionary), train,
                                          config.codingAtoms, config.threads);
  } else {
    cb = ksvdLikeInit(train, config.atoms, config.codingAtoms, config.ksvdIters,
                      config.seed + 1, config.threads);
  }

  const double budget = config.residualBudget > 0 ? config.residualBudget
                                                  : double(m) * double(m);
  auto plan = makeSchedulePlan<double>(m, config.atoms, config.numFactors,
                                       config.perColumn, config.intermediate, config.rho,
                                       budget);
  auto learned = hierarchicalDictionaryLearn(train, cb.dictionary, cb.coefficients, plan,
                                             config.codingAtoms, config.inner,
                                             config.global, config.threads);
  const auto t1 = std::chrono::steady_clock::now();

  LinearOp<double> coder = [&]() {
    if (!config.normalizeAtoms) return LinearOp<double>(learned.dictionary);
    DenseMatrix<double> dense = learned.dictionary.toDense();
    for (Index j = 0; j < dense.cols(); ++j) {
      const double nrm = dense.col(j).norm();
      if (nrm > 0) dense.col(j) /= nrm;
    }
    return LinearOp<double>(std::move(dense));
  }();

  std::vector<std::pair<Index, Index>> positions;
  for (Index y = 0; y + p <= noisy.height; ++y)
    for (Index x = 0; x + p <= noisy.width; ++x) positions.emplace_back(x, y);

  std::vector<Vectord> restored(positions.size());
  parallelFor(static_cast<Index>(positions.size()), config.threads, [&](Index k) {
    const auto [x, y] = positions[k];
    Vectord patch = extractPatch(noisy, x, y, p);
    double mean = 0;
    if (config.removeMean) {
      mean = patch.mean();
      patch.array() -= mean;
    }
    Eigen::SparseVector<double> g = omp(coder, patch, config.codingAtoms);
    Vectord approx = coder.apply(toDenseVector(g));
    if (config.removeMean) approx.array() += mean;
    restored[k] = std::move(approx);
  });
  Image out = reconstructFromPatches(noisy.width, noisy.height, p, positions, restored);
  const auto t2 = std::chrono::steady_clock::now();

  DenoiseResult result{std::move(out), {}};
  result.report.totalNonZeros = learned.dictionary.totalNonZeros();
  result.report.relComplexity =
      double(result.report.totalNonZeros) / (double(m) * double(config.atoms));
  result.report.sigma = sigma;
  result.report.trainSeconds = std::chrono::duration<double>(t1 - t0).count();
  result.report.codeSeconds = std::chrono::duration<double>(t2 - t1).count();
  if (clean) {
    result.report.psnrNoisy = psnr(*clean, noisy);
    result.report.psnrDenoised = psnr(*clean, result.denoised);
  }
  return result;
}

}  // namespace faust
