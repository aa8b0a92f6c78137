#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>
#include <random>

#include "faust/dictlearn.hpp"
#include "faust/generators.hpp"
#include "support/oracles.hpp"

using namespace faust;
using testing::randomMatrix;

namespace {

Matrixd orthogonal(Index m, std::uint64_t seed) {
  Matrixd a = randomMatrix(m, m, seed);
  Eigen::HouseholderQR<Matrixd> qr(a);
  return Matrixd(qr.householderQ());
}

}  // namespace

TEST_CASE("ksvd-like init nails a basis-vector training set") {
  const Index m = 8;
  Matrixd y = Matrixd::Identity(m, m);
  auto cb = ksvdLikeInit(y, m, 1, 3, 0);
  // Signed permutation of the identity and an exact reconstruction.
  CHECK((y - cb.dictionary * cb.coefficients).cwiseAbs().maxCoeff() <= 1e-14);
  Matrixd absD = cb.dictionary.cwiseAbs();
  for (Index j = 0; j < m; ++j) {
    CHECK(absD.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(absD.col(j).maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ksvd-like init on a single training vector") {
  Matrixd y = randomMatrix(6, 1, 3);
  auto cb = ksvdLikeInit(y, 1, 1, 2, 0);
  Vectord expected = y.col(0) / y.col(0).norm();
  CHECK((cb.dictionary.col(0).cwiseAbs() - expected.cwiseAbs()).norm() <= 1e-12);
  CHECK((y - cb.dictionary * cb.coefficients).norm() <= 1e-12 * y.norm());
}

TEST_CASE("ksvd-like reconstruction error is nonincreasing over rounds") {
  Matrixd y = randomMatrix(12, 80, 17);
  double prev = std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 5; ++iters) {
    auto cb = ksvdLikeInit(y, 20, 3, iters, 4);
    const double err = (y - cb.dictionary * cb.coefficients).norm();
    CHECK(err <= prev + 1e-9 * (1.0 + y.norm()));
    prev = err;
  }
}

TEST_CASE("ksvd-like init keeps atoms unit-norm and reassigns unused ones") {
  Matrixd y(4, 6);
  y.setZero();
  for (Index c = 0; c < 6; ++c) y(c % 2, c) = 1.0 + 0.1 * double(c);
  auto cb = ksvdLikeInit(y, 4, 1, 2, 1);  // more atoms than distinct directions
  for (Index j = 0; j < 4; ++j)
    CHECK(cb.dictionary.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cb.dictionary.allFinite());
}

TEST_CASE("fixed coefficient factor survives palm4msa bit-identically") {
  const Index m = 6, n = 9, numSamples = 40;
  Matrixd gamma = randomMatrix(n, numSamples, 23);
  Matrixd y = randomMatrix(m, numSamples, 24);
  std::vector<ConstraintSetd> cs{ConstraintSetd::globalSparsity(m, m, 20),
                                 ConstraintSetd::perColumn(m, n, 3),
                                 ConstraintSetd::fixed(gamma)};
  PalmState<double> init;
  init.factors = {Matrixd(Matrixd::Identity(m, m)), randomMatrix(m, n, 25), gamma};
  PalmConfig cfg;
  cfg.maxIter = 10;
  auto res = palm4msa<double>(y, cs, init, cfg);
  CHECK((res.state.factors.back() - gamma).cwiseAbs().maxCoeff() == 0.0);
  // The dictionary-side factors were still updated and remain feasible.
  CHECK(satisfies(res.state.factors[0], cs[0], 1e-12));
  CHECK(satisfies(res.state.factors[1], cs[1], 1e-12));
}

TEST_CASE("consistent model is reproduced exactly at coding sparsity one") {
  const Index m = 16, n = 32, numSamples = 300;
  Matrixd d0(m, n);
  d0 << orthogonal(m, 1), orthogonal(m, 2);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  Matrixd gamma0 = Matrixd::Zero(n, numSamples);
  for (Index c = 0; c < numSamples; ++c) gamma0(pick(rng), c) = 3.0 + std::abs(g(rng));
  Matrixd y = d0 * gamma0;

  FactorizationPlan<double> plan;
  plan.levels.push_back({ConstraintSetd::globalSparsity(m, m, m * m),
                         ConstraintSetd::perColumn(m, n, m)});
  PalmConfig cfg;
  cfg.maxIter = 200;
  auto res = hierarchicalDictionaryLearn(y, d0, gamma0, plan, 1, cfg, cfg);
  const double dataErr = (y - res.dictionary.toDense() * res.coefficients).norm();
  CHECK(dataErr <= 1e-10 * y.norm());
  CHECK((d0 - res.dictionary.toDense()).norm() <= 1e-10 * d0.norm());
}

TEST_CASE("schedule-driven toy stays within 1.5x of the dense coding error") {
  // Bound frozen after a pilot run (measured ratio 1.34 on these seeds).
  const Index m = 16, n = 32, numSamples = 500, t = 3;
  Matrixd dTrue = randomMatrix(m, n, 10);
  for (Index j = 0; j < n; ++j) dTrue.col(j).normalize();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  Matrixd y(m, numSamples);
  for (Index c = 0; c < numSamples; ++c) {
    Vectord col = Vectord::Zero(m);
    for (Index k = 0; k < t; ++k) col += g(rng) * dTrue.col(pick(rng));
    y.col(c) = col + 0.05 * g(rng) * Vectord::Ones(m);
  }
  auto cb = ksvdLikeInit(y, n, t, 10, 11);
  const double denseErr = (y - cb.dictionary * cb.coefficients).norm();

  auto plan = makeSchedulePlan<double>(m, n, 3, 4, 2 * m, 0.8, 1.4 * double(m * m));
  auto res = hierarchicalDictionaryLearn(y, cb.dictionary, cb.coefficients, plan, t);
  const double faustErr = (y - res.dictionary.toDense() * res.coefficients).norm();
  CHECK(faustErr <= 1.5 * denseErr);

  // Budgets below m*n give a sub-dense parameter count, and the coder's
  // column budget holds everywhere.
  CHECK(res.dictionary.totalNonZeros() < m * n);
  for (Index c = 0; c < res.coefficients.cols(); ++c) {
    Index nnz = 0;
    for (Index r = 0; r < res.coefficients.rows(); ++r)
      if (res.coefficients(r, c) != 0.0) ++nnz;
    CHECK(nnz <= t);
  }
  // Per-level trace rows carry the data error.
  int levels = 0;
  for (const auto& row : res.trace.rows())
    if (row.phase.rfind("dl-level-", 0) == 0) {
      ++levels;
      CHECK(row.objective == row.objective);
    }
  CHECK(levels == 2);
}

TEST_CASE("patch extraction and uniform-average reconstruction invert exactly") {
  Image img = makeTestImage(32);
  const Index p = 8;
  std::vector<std::pair<Index, Index>> positions;
  std::vector<Vectord> patches;
  for (Index y = 0; y + p <= img.height; ++y)
    for (Index x = 0; x + p <= img.width; ++x) {
      positions.emplace_back(x, y);
      patches.push_back(extractPatch(img, x, y, p));
    }
  Image back = reconstructFromPatches(img.width, img.height, p, positions, patches);
  double maxDiff = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    maxDiff = std::max(maxDiff, std::abs(img.pixels[i] - back.pixels[i]));
  CHECK(maxDiff <= 1e-10);
}

TEST_CASE("overcomplete DCT dictionary has unit nonconstant atoms") {
  Matrixd d = overcompleteDct(8, 128);
  CHECK(d.rows() == 64);
  CHECK(d.cols() == 128);
  for (Index j = 0; j < d.cols(); ++j)
    CHECK(d.col(j).norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("denoising a noisy constant image raises PSNR") {
  Image clean = makeImage(40, 40, 128.0);
  Image noisy = addGaussianNoise(clean, 25.0, 77);
  DenoiseConfig cfg;
  cfg.atoms = 32;
  cfg.trainingPatches = 400;
  cfg.numFactors = 3;
  cfg.perColumn = 3;
  cfg.intermediate = 128;
  cfg.rho = 0.5;
  cfg.ksvdIters = 3;
  cfg.inner.maxIter = 20;
  cfg.global.maxIter = 20;
  cfg.seed = 5;
  auto out = denoiseImage(noisy, cfg, clean, 25.0);
  CHECK(out.report.psnrDenoised > out.report.psnrNoisy);
  CHECK(out.report.psnrDenoised - out.report.psnrNoisy >= 3.0);
  CHECK(out.report.relComplexity > 0.0);
}

TEST_CASE("a clean input comes back at high fidelity") {
  // Bound frozen from a pilot on this fixed image (measured 30.6 dB); the
  // sparse 5-atom coding is lossy, so exact reproduction is not expected.
  Image clean = makeTestImage(64);
  DenoiseConfig cfg;
  cfg.atoms = 64;
  cfg.trainingPatches = 1500;
  cfg.numFactors = 3;
  cfg.perColumn = 4;
  cfg.intermediate = 256;
  cfg.rho = 0.5;
  cfg.ksvdIters = 4;
  cfg.inner.maxIter = 25;
  cfg.global.maxIter = 25;
  cfg.seed = 21;
  cfg.threads = 2;
  auto res = denoiseImage(clean, cfg, clean, 0.0);
  CHECK(std::isinf(res.report.psnrNoisy));
  CHECK(res.report.psnrDenoised >= 28.0);
}

TEST_CASE("DCT-initialized denoising also lifts PSNR on noisy input") {
  Image clean = makeImage(40, 40, 128.0);
  Image noisy = addGaussianNoise(clean, 25.0, 78);
  DenoiseConfig cfg;
  cfg.atoms = 36;
  cfg.trainingPatches = 400;
  cfg.numFactors = 3;
  cfg.perColumn = 3;
  cfg.intermediate = 128;
  cfg.rho = 0.5;
  cfg.dctInit = true;
  cfg.inner.maxIter = 20;
  cfg.global.maxIter = 20;
  cfg.seed = 5;
  auto out = denoiseImage(noisy, cfg, clean, 25.0);
  CHECK(out.report.psnrDenoised > out.report.psnrNoisy);
}

TEST_CASE("denoising rejects images smaller than the patch") {
  Image tiny = makeImage(5, 5, 0.0);
  DenoiseConfig cfg;
  CHECK_THROWS_AS(denoiseImage(tiny, cfg), std::invalid_argument);
}

TEST_CASE("parallel patch coding matches the sequential result") {
  Image clean = makeTestImage(48);
  Image noisy = addGaussianNoise(clean, 15.0, 99);
  DenoiseConfig cfg;
  cfg.atoms = 32;
  cfg.trainingPatches = 300;
  cfg.numFactors = 3;
  cfg.perColumn = 3;
  cfg.intermediate = 128;
  cfg.ksvdIters = 2;
  cfg.inner.maxIter = 15;
  cfg.global.maxIter = 15;
  cfg.seed = 6;
  auto seq = denoiseImage(noisy, cfg, clean, 15.0);
  cfg.threads = 4;
  auto par = denoiseImage(noisy, cfg, clean, 15.0);
  double maxDiff = 0;
  for (std::size_t i = 0; i < seq.denoised.pixels.size(); ++i)
    maxDiff = std::max(maxDiff, std::abs(seq.denoised.pixels[i] - par.denoised.pixels[i]));
  CHECK(maxDiff == 0.0);
}
