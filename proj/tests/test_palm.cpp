#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "faust/generators.hpp"
#include "faust/palm.hpp"
#include "support/oracles.hpp"

using namespace faust;
using testing::randomMatrix;
using testing::spectralNormOracle;

namespace {

// Central finite differences of the smooth objective with respect to S.
Matrixd finiteDifferenceGradient(const Matrixd& left, const Matrixd& s, const Matrixd& right,
                                 double lambda, const Matrixd& a, double h = 1e-6) {
  auto value = [&](const Matrixd& sTry) {
    Matrixd prod = sTry;
    if (left.size()) prod = left * prod;
    if (right.size()) prod = prod * right;
    return 0.5 * (a - lambda * prod).squaredNorm();
  };
  Matrixd grad(s.rows(), s.cols());
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = 0; i < s.rows(); ++i) {
      Matrixd up = s, down = s;
      up(i, j) += h;
      down(i, j) -= h;
      grad(i, j) = (value(up) - value(down)) / (2 * h);
    }
  return grad;
}

}  // namespace

TEST_CASE("objective values") {
  Matrixd a = randomMatrix(4, 3, 1);
  // lambda * prod == a gives 0.
  CHECK(objective(a, 2.0, {Matrixd(0.5 * a)}) == doctest::Approx(0.0).epsilon(1e-15));
  // lambda == 0 gives half the squared Frobenius norm.
  CHECK(objective(a, 0.0, {a}) == doctest::Approx(0.5 * a.squaredNorm()));

  // Random instance against an independent dense recomputation.
  Matrixd f1 = randomMatrix(4, 5, 2), f2 = randomMatrix(5, 3, 3);
  const double lambda = -1.3;
  const double direct = 0.5 * (a - lambda * f1 * f2).squaredNorm();
  CHECK(objective(a, lambda, {f1, f2}) == doctest::Approx(direct).epsilon(1e-14));

  CHECK_THROWS_AS(objective(a, 1.0, {f1}), std::invalid_argument);
}

TEST_CASE("analytic gradient: residual-zero and least-squares cases") {
  Matrixd l = randomMatrix(4, 4, 4), r = randomMatrix(5, 6, 5), s = randomMatrix(4, 5, 6);
  const double lambda = 0.7;
  Matrixd a = lambda * l * s * r;
  CHECK(gradientFactor(l, s, r, lambda, a).cwiseAbs().maxCoeff() <= 1e-12);

  Matrixd eye4 = Matrixd::Identity(4, 4);
  Matrixd target = randomMatrix(4, 4, 7);
  Matrixd sq = randomMatrix(4, 4, 8);
  Matrixd g = gradientFactor(eye4, sq, eye4, 1.0, target);
  CHECK((g - (sq - target)).cwiseAbs().maxCoeff() <= 1e-12);
  // Empty matrices stand for the identity.
  Matrixd gEmpty = gradientFactor(Matrixd(), sq, Matrixd(), 1.0, target);
  CHECK((gEmpty - (sq - target)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Matrixd l = randomMatrix(5, 5, 100 + seed);
    Matrixd s = randomMatrix(5, 5, 200 + seed);
    Matrixd r = randomMatrix(5, 5, 300 + seed);
    Matrixd a = randomMatrix(5, 5, 400 + seed);
    const double lambda = 0.5 + 0.1 * double(seed % 7);
    Matrixd analytic = gradientFactor(l, s, r, lambda, a);
    Matrixd fd = finiteDifferenceGradient(l, s, r, lambda, a);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("Lipschitz modulus: closed form and sampled bound") {
  Matrixd eye = Matrixd::Identity(3, 3);
  CHECK(lipschitzModulus(eye, eye, 1.0) == doctest::Approx(1.0).epsilon(1e-9));

  // lambda=2, ||L||=1, ||R||=3 gives 36.
  Matrixd r3 = Matrixd::Zero(3, 3);
  r3.diagonal() << 3.0, 1.0, 0.5;
  CHECK(lipschitzModulus(eye, r3, 2.0) == doctest::Approx(36.0).epsilon(1e-9));

  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    Matrixd l = randomMatrix(4, 4, 500 + rep), r = randomMatrix(5, 5, 600 + rep);
    Matrixd s1 = randomMatrix(4, 5, 700 + rep), s2 = randomMatrix(4, 5, 800 + rep);
    Matrixd a = randomMatrix(4, 5, 900 + rep);
    const double lambda = -1.0 + 0.02 * double(rng() % 100);
    const double modulus =
        lambda * lambda * std::pow(spectralNormOracle(l), 2) * std::pow(spectralNormOracle(r), 2);
    const double lhs =
        (gradientFactor(l, s1, r, lambda, a) - gradientFactor(l, s2, r, lambda, a)).norm();
    CHECK(lhs <= modulus * (s1 - s2).norm() * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("lambda update is the exact minimizer") {
  Matrixd a = randomMatrix(6, 4, 9);
  CHECK(updateLambda(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(updateLambda(a, Matrixd(2.0 * a)) == doctest::Approx(0.5).epsilon(1e-14));

  Matrixd orth(2, 2);
  orth << 1, 0, 0, 0;
  Matrixd other(2, 2);
  other << 0, 0, 0, 1;
  CHECK(updateLambda(orth, other) == doctest::Approx(0.0));

  CHECK_THROWS_AS(updateLambda(a, Matrixd(Matrixd::Zero(6, 4))), std::invalid_argument);
}

TEST_CASE("single-factor closed form: S = A/||A||_F, lambda = ||A||_F") {
  Matrixd a = randomMatrix(6, 5, 10);
  Index nnzA = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) ++nnzA;
  PalmConfig cfg;
  cfg.maxIter = 5;
  auto res = palm4msa<double>(a, {ConstraintSetd::globalSparsity(6, 5, nnzA)},
                              std::nullopt, cfg);
  CHECK(res.state.lambda == doctest::Approx(a.norm()).epsilon(1e-8));
  CHECK((res.state.factors[0] - a / a.norm()).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(res.state.objectiveTrace.back() <= 1e-8);
}

TEST_CASE("feasible stationary point stays fixed") {
  std::vector<ConstraintSetd> constraints{ConstraintSetd::globalSparsity(4, 4, 6),
                                          ConstraintSetd::globalSparsity(4, 4, 5)};
  Matrixd s2 = project(randomMatrix(4, 4, 11), constraints[0]);
  Matrixd s1 = project(randomMatrix(4, 4, 12), constraints[1]);
  const double lambdaStar = 2.5;
  Matrixd a = lambdaStar * s2 * s1;

  PalmState<double> init;
  init.lambda = lambdaStar;
  init.factors = {s2, s1};
  PalmConfig cfg;
  cfg.maxIter = 7;
  auto res = palm4msa<double>(a, constraints, init, cfg);
  CHECK(res.state.lambda == doctest::Approx(lambdaStar).epsilon(1e-12));
  CHECK((res.state.factors[0] - s2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((res.state.factors[1] - s1).cwiseAbs().maxCoeff() <= 1e-12);
  for (double psi : res.state.objectiveTrace) CHECK(psi <= 1e-20);
}

TEST_CASE("objective trace is nonincreasing and factors stay feasible") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Index m = 8, mid = 6, n = 7;
    Matrixd a = randomMatrix(m, n, 1300 + seed);
    std::vector<ConstraintSetd> constraints{
        ConstraintSetd::globalSparsity(m, mid, 14),
        ConstraintSetd::perColumn(mid, n, 2),
    };
    PalmConfig cfg;
    cfg.maxIter = 40;
    auto res = palm4msa<double>(a, constraints, std::nullopt, cfg);

    const auto& psi = res.state.objectiveTrace;
    const double slack = 1e-12 * (1.0 + psi.front());
    for (std::size_t i = 1; i < psi.size(); ++i) CHECK(psi[i] <= psi[i - 1] + slack);

    for (std::size_t j = 0; j < constraints.size(); ++j) {
      CHECK(satisfies(res.state.factors[j], constraints[j], 1e-12));
      CHECK(std::abs(res.state.factors[j].norm() - 1.0) <= 1e-12);
    }

    // The returned lambda is a local minimizer: nudging it by 1% in either
    // direction cannot decrease the objective.
    const double psiAt = [&](double lam) {
      return objective(a, lam, res.state.factors);
    }(res.state.lambda);
    for (double bump : {0.99, 1.01}) {
      CHECK(objective(a, res.state.lambda * bump, res.state.factors) >= psiAt - 1e-12);
    }
  }
}

TEST_CASE("early stop honors the windowed threshold") {
  Matrixd a = randomMatrix(6, 6, 14);
  std::vector<ConstraintSetd> constraints{ConstraintSetd::globalSparsity(6, 6, 36)};
  PalmConfig cfg;
  cfg.maxIter = 500;
  cfg.stopThreshold = 1e-14;
  auto res = palm4msa<double>(a, constraints, std::nullopt, cfg);
  CHECK(res.state.iteration < 500);  // exact single-factor fit converges at once
}

TEST_CASE("palm4msa input validation and NaN detection") {
  Matrixd a = randomMatrix(4, 4, 15);
  CHECK_THROWS_AS(palm4msa<double>(a, {}, std::nullopt, {}), std::invalid_argument);
  CHECK_THROWS_AS(palm4msa<double>(a, {ConstraintSetd::globalSparsity(3, 4, 2)},
                                   std::nullopt, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      palm4msa<double>(a,
                       {ConstraintSetd::globalSparsity(4, 3, 2),
                        ConstraintSetd::globalSparsity(4, 4, 2)},
                       std::nullopt, {}),
      std::invalid_argument);

  PalmState<double> poisoned;
  poisoned.factors = {Matrixd::Constant(4, 4, std::nan(""))};
  CHECK_THROWS_AS(palm4msa<double>(a, {ConstraintSetd::globalSparsity(4, 4, 2)},
                                   poisoned, {}),
                  NumericalError);
}

TEST_CASE("default initialization matches the documented convention") {
  std::vector<ConstraintSetd> constraints{ConstraintSetd::globalSparsity(4, 6, 8),
                                          ConstraintSetd::globalSparsity(6, 3, 6),
                                          ConstraintSetd::perColumn(3, 5, 2)};
  auto st = defaultPalmInit(constraints);
  CHECK(st.lambda == 1.0);
  CHECK(st.factors.back().cwiseAbs().maxCoeff() == 0.0);  // rightmost factor zero
  CHECK((st.factors[0] - Matrixd::Identity(4, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((st.factors[1] - Matrixd::Identity(6, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("direct multi-factor attack on the Hadamard matrix stays monotone") {
  const Index n = 32;
  Matrixd h = hadamardMatrix(n);
  std::vector<ConstraintSetd> constraints;
  for (int j = 0; j < 5; ++j)
    constraints.push_back(ConstraintSetd::globalSparsity(n, n, 2 * n));
  PalmConfig cfg;
  cfg.maxIter = 60;
  auto res = palm4msa<double>(h, constraints, std::nullopt, cfg);
  const auto& psi = res.state.objectiveTrace;
  const double slack = 1e-12 * (1.0 + psi.front());
  for (std::size_t i = 1; i < psi.size(); ++i) CHECK(psi[i] <= psi[i - 1] + slack);
}
