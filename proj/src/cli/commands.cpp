#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "faust/dictlearn.hpp"
#include "faust/generators.hpp"
#include "faust/io.hpp"
#include "faust/norms.hpp"
#include "faust/solvers.hpp"

namespace faust::cli {

namespace {

std::vector<std::string> splitOn(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

Index parsePositive(const std::string& text, const std::string& what) {
  try {
    const long v = std::stol(text);
    detail::require(v >= 1, what + " must be positive");
    return v;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("cannot parse " + what + " from '" + text + "'");
  }
}

std::vector<Index> readSupportFile(const std::string& path, Index rows, Index cols) {
  std::ifstream in(path);
  detail::require(bool(in), "cannot open support file " + path);
  SparseMatrixd mask = readMatrixMarketSparse(in);
  detail::require(mask.rows() == rows && mask.cols() == cols,
                  "support file shape does not match the factor");
  std::vector<Index> linear;
  for (const auto& e : mask.entries()) linear.push_back(e.col * rows + e.row);
  return linear;
}

std::vector<std::vector<Index>> readGroupsFile(const std::string& path, Index rows,
                                               Index cols) {
  std::ifstream in(path);
  detail::require(bool(in), "cannot open groups file " + path);
  std::map<long, std::vector<Index>> byGroup;
  long r, c, g;
  while (in >> r >> c >> g) {
    detail::require(r >= 1 && r <= rows && c >= 1 && c <= cols,
                    "group entry out of bounds in " + path);
    byGroup[g].push_back((c - 1) * rows + (r - 1));
  }
  detail::require(!byGroup.empty(), "groups file is empty: " + path);
  std::vector<std::vector<Index>> groups;
  for (auto& [id, members] : byGroup) groups.push_back(std::move(members));
  return groups;
}

void writeCsvFile(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  atomicWrite(path, fn);
}

struct PalmFlags {
  int innerIters = 50;
  int globalIters = 50;
  double alpha = 1e-3;
  double spectralTol = 1e-9;

  PalmConfig inner() const { return {innerIters, alpha, spectralTol, std::nullopt}; }
  PalmConfig global() const { return {globalIters, alpha, spectralTol, std::nullopt}; }

  void attach(CLI::App* cmd) {
    cmd->add_option("--inner-iters", innerIters, "PALM iterations per 2-factor split");
    cmd->add_option("--global-iters", globalIters, "PALM iterations per global refinement");
    cmd->add_option("--alpha", alpha, "step-size margin over the Lipschitz modulus");
    cmd->add_option("--spectral-tol", spectralTol, "power-iteration tolerance");
  }
};

int cmdFactorize(const std::string& input, Index demoHadamard,
                 const std::string& output, const std::string& tracePath,
                 const std::vector<std::string>& levels, Index scheduleJ, Index scheduleK,
                 Index scheduleS, double scheduleRho, double scheduleP, bool fromLeft,
                 double stopRe, const PalmFlags& palm) {
  Matrixd a;
  if (demoHadamard > 0) {
    a = hadamardMatrix(demoHadamard);
  } else {
    detail::require(!input.empty(), "factorize needs --input or --demo-hadamard");
    a = readDenseMatrixFile(input);
  }
  detail::require(a.rows() >= 2 && a.cols() >= 2, "matrix too small to factorize");

  FactorizationPlan<double> plan;
  if (demoHadamard > 0 && levels.empty() && scheduleJ == 0) {
    plan = makeHadamardPlan(demoHadamard);
  } else if (!levels.empty()) {
    plan = parseLevelPlan(levels, a.rows(), a.cols());
  } else {
    detail::require(scheduleJ >= 2, "factorize needs --level entries or --schedule-J");
    plan = makeSchedulePlan<double>(a.rows(), a.cols(), scheduleJ, scheduleK,
                                    scheduleS > 0 ? scheduleS : 2 * a.rows(), scheduleRho,
                                    scheduleP > 0 ? scheduleP
                                                  : 1.4 * double(a.rows()) * double(a.rows()));
  }
  plan.fromLeft = fromLeft;
  if (stopRe > 0) plan.stopRelError = stopRe;

  auto result = hierarchicalFactorize(a, plan, palm.inner(), palm.global());
  writeFaustFile(output, result.op);
  if (!tracePath.empty())
    writeCsvFile(tracePath, [&](std::ostream& os) { result.trace.writeCsv(os); });

  const double re = relativeError(a, result.op);
  const double rc = relativeComplexity(result.op, a);
  std::cout << "factors=" << result.op.numFactors() << " s_tot=" << result.op.totalNonZeros()
            << " RE=" << re << " RC=" << rc << " RCG=" << 1.0 / rc << "\n";
  return kExitOk;
}

int cmdApply(const std::string& faustPath, const std::string& input,
             const std::string& output, bool transpose, bool countFlops) {
  FaustOperatord op = readFaustFile(faustPath);
  Vectord x = readVectorFile(input);
  FlopCounter flops;
  Vectord y = transpose ? op.applyTranspose(x, &flops) : op.apply(x, &flops);
  atomicWrite(output, [&](std::ostream& os) {
    os << std::setprecision(17);
    for (Index i = 0; i < y.size(); ++i) os << y[i] << '\n';
  });
  if (countFlops) std::cout << "flops=" << flops.multiplyAdds << "\n";
  return kExitOk;
}

int cmdSvdBaseline(const std::string& input, const std::string& ranksText,
                   const std::string& output, std::uint64_t seed) {
  Matrixd a = readDenseMatrixFile(input);
  std::vector<Index> ranks;
  for (const std::string& part : splitOn(ranksText, ','))
    if (!part.empty()) ranks.push_back(parsePositive(part, "rank"));
  detail::require(!ranks.empty(), "svd-baseline needs at least one rank");

  const double denom = spectralNorm(a, 1e-10, 0, seed);
  detail::require(denom > 0, "input matrix is zero");
  std::ostringstream rows;
  rows << "rank,rel_error,parameters\n";
  for (Index r : ranks) {
    auto svd = truncatedSvd(a, r, 1e-11, 500, seed);
    const double re = spectralNorm(Matrixd(a - svd.reconstruct()), 1e-10, 0, seed) / denom;
    rows << r << ',' << re << ',' << r * (a.rows() + a.cols() + 1) << '\n';
  }
  writeCsvFile(output, [&](std::ostream& os) { os << rows.str(); });
  std::cout << rows.str();
  return kExitOk;
}

int cmdLocalize(Index rows, Index cols, Index numFactors, int trials, std::uint64_t seed,
                const std::string& output, const std::string& coordsPath) {
  detail::require(rows >= 2 && cols >= rows && numFactors >= 2, "bad synthetic sizes");
  // Planted operator: square sparse factors, a per-column-sparse rightmost
  // factor, and unit-norm measurement columns.
  auto planted = plantedMeasurementOperator<double>(rows, cols, numFactors - 1, 8 * rows,
                                                    std::min<Index>(4, rows), seed);
  Matrixd m = planted.toDense();

  // Degraded copy at roughly 10% relative error plus the zero operator.
  std::mt19937_64 rng(seed ^ 0x517cc1b727220a95ull);
  std::normal_distribution<double> g;
  std::vector<SparseMatrixd> noisy;
  for (Index j = 0; j < planted.numFactors(); ++j) {
    auto entries = planted.factor(j).entries();
    for (auto& e : entries) e.value += 0.3 * std::abs(e.value) * g(rng);
    noisy.emplace_back(planted.factor(j).rows(), planted.factor(j).cols(),
                       std::move(entries));
  }
  FaustOperatord mid(planted.scale(), std::move(noisy));
  FaustOperatord zero(0.0, {SparseMatrixd::identity(rows, cols)});

  std::optional<Matrixd> coords;
  if (!coordsPath.empty()) coords = readDenseMatrixFile(coordsPath);

  auto report = localizationExperiment<double>(m, {planted, mid, zero}, trials, seed, coords);
  writeCsvFile(output, [&](std::ostream& os) { report.writeCsv(os); });
  for (const auto& s : report.summaries)
    std::cout << s.label << ": exact_rate=" << s.exactRate
              << " mean_overlap=" << s.meanOverlap << "\n";
  return kExitOk;
}

int cmdDenoise(const std::string& input, const std::string& output,
               const std::string& cleanPath, const std::string& reportPath,
               double addNoiseSigma, DenoiseConfig cfg) {
  Image noisy = readPgm(input);
  std::optional<Image> clean;
  if (!cleanPath.empty()) clean = readPgm(cleanPath);
  double sigma = std::numeric_limits<double>::quiet_NaN();
  if (addNoiseSigma > 0) {
    if (!clean) clean = noisy;
    noisy = addGaussianNoise(*clean, addNoiseSigma, cfg.seed ^ 0x2545f4914f6cdd1dull);
    sigma = addNoiseSigma;
  }
  auto result = denoiseImage(noisy, cfg, clean, sigma);
  atomicWrite(output, [&](std::ostream& os) { writePgm(os, result.denoised); });
  if (!reportPath.empty())
    writeCsvFile(reportPath, [&](std::ostream& os) { result.report.writeCsv(os); });
  std::cout << "psnr_noisy=" << result.report.psnrNoisy
            << " psnr_denoised=" << result.report.psnrDenoised
            << " rc=" << result.report.relComplexity
            << " s_tot=" << result.report.totalNonZeros << "\n";
  return kExitOk;
}

}  // namespace

ConstraintSet<double> parseConstraint(const std::string& text, Index rows, Index cols) {
  const auto parts = splitOn(text, ':');
  detail::require(!parts.empty() && !parts[0].empty(), "empty constraint spec");
  const std::string& kind = parts[0];
  if (kind == "sp") {
    detail::require(parts.size() == 2, "expected sp:<s>");
    return ConstraintSet<double>::globalSparsity(rows, cols, parsePositive(parts[1], "sp budget"));
  }
  if (kind == "spcol") {
    detail::require(parts.size() == 2, "expected spcol:<k>");
    return ConstraintSet<double>::perColumn(rows, cols, parsePositive(parts[1], "spcol budget"));
  }
  if (kind == "sprow") {
    detail::require(parts.size() == 2, "expected sprow:<k>");
    return ConstraintSet<double>::perRow(rows, cols, parsePositive(parts[1], "sprow budget"));
  }
  if (kind == "supp") {
    detail::require(parts.size() == 2, "expected supp:<path>");
    return ConstraintSet<double>::fixedSupport(rows, cols, readSupportFile(parts[1], rows, cols));
  }
  if (kind == "const") {
    detail::require(parts.size() == 2, "expected const:<path>");
    Matrixd value = readDenseMatrixFile(parts[1]);
    detail::require(value.rows() == rows && value.cols() == cols,
                    "const matrix shape mismatch");
    return ConstraintSet<double>::fixed(std::move(value));
  }
  if (kind == "pwc") {
    detail::require(parts.size() == 3, "expected pwc:<groups-path>:<s>");
    return ConstraintSet<double>::piecewiseConstant(
        rows, cols, readGroupsFile(parts[1], rows, cols), parsePositive(parts[2], "pwc budget"));
  }
  throw std::invalid_argument("unknown constraint kind '" + kind + "'");
}

FactorizationPlan<double> parseLevelPlan(const std::vector<std::string>& levels,
                                         Index rows, Index cols) {
  detail::require(!levels.empty(), "no --level entries given");
  FactorizationPlan<double> plan;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto parts = splitOn(levels[l], ';');
    detail::require(parts.size() == 2, "expected --level \"<residual>;<factor>\"");
    const Index facCols = l == 0 ? cols : rows;
    plan.levels.push_back({parseConstraint(parts[0], rows, rows),
                           parseConstraint(parts[1], rows, facCols)});
  }
  return plan;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"multi-layer sparse matrix factorization toolkit"};
  app.require_subcommand(1);

  // factorize
  std::string input, output = "faust.json", tracePath;
  Index demoHadamard = 0;
  std::vector<std::string> levels;
  Index scheduleJ = 0, scheduleK = 10, scheduleS = 0;
  double scheduleRho = 0.8, scheduleP = 0;
  bool fromLeft = false;
  double stopRe = 0;
  PalmFlags palm;
  app.set_config("--config", "", "read options from a TOML/INI key-value file");
  auto* fact = app.add_subcommand("factorize", "hierarchically factorize a matrix");
  fact->add_option("--input", input, "matrix file (MatrixMarket or whitespace text)");
  fact->add_option("--demo-hadamard", demoHadamard,
                   "factorize the Hadamard matrix of this size instead of a file");
  fact->add_option("--output", output, "output FAuST JSON path");
  fact->add_option("--trace", tracePath, "optional trace CSV path");
  fact->add_option("--level", levels,
                   "per-level constraints \"<residual>;<factor>\" (repeatable)");
  fact->add_option("--schedule-J", scheduleJ, "factor count of the generated schedule");
  fact->add_option("--schedule-k", scheduleK, "per-column budget of the rightmost factor");
  fact->add_option("--schedule-s", scheduleS, "global budget of intermediate factors");
  fact->add_option("--schedule-rho", scheduleRho, "residual budget decay rate");
  fact->add_option("--schedule-P", scheduleP, "initial residual budget (default 1.4*m^2)");
  fact->add_flag("--from-left", fromLeft, "peel factors from the left instead");
  fact->add_option("--stop-re", stopRe, "stop splitting once RE drops below this");
  palm.attach(fact);

  // apply
  std::string faustPath, applyIn, applyOut = "out.txt";
  bool transpose = false, countFlops = false;
  auto* apply = app.add_subcommand("apply", "apply a stored FAuST to a vector");
  apply->add_option("--faust", faustPath, "FAuST JSON file")->required();
  apply->add_option("--input", applyIn, "vector file")->required();
  apply->add_option("--output", applyOut, "output vector file");
  apply->add_flag("--transpose", transpose, "apply the transpose");
  apply->add_flag("--count-flops", countFlops, "print the multiply-add count");

  // svd-baseline
  std::string svdInput, svdRanks, svdOutput = "svd.csv";
  std::uint64_t svdSeed = 0;
  auto* svd = app.add_subcommand("svd-baseline", "truncated-SVD error/parameter table");
  svd->add_option("--input", svdInput, "matrix file")->required();
  svd->add_option("--ranks", svdRanks, "comma-separated rank list")->required();
  svd->add_option("--output", svdOutput, "output CSV");
  svd->add_option("--seed", svdSeed, "seed for the iterative solvers");

  // localize
  Index locRows = 32, locCols = 256, locFactors = 4;
  int locTrials = 100;
  std::uint64_t locSeed = 0;
  std::string locOutput = "localize.csv", locCoords;
  auto* loc = app.add_subcommand("localize",
                                 "synthetic source-recovery comparison of operators");
  loc->add_option("--rows", locRows, "measurement dimension");
  loc->add_option("--cols", locCols, "source dimension");
  loc->add_option("--factors", locFactors, "factor count of the planted operator");
  loc->add_option("--trials", locTrials, "number of trials");
  loc->add_option("--seed", locSeed, "master seed");
  loc->add_option("--output", locOutput, "output CSV");
  loc->add_option("--coords", locCoords, "optional per-column coordinate table");

  // denoise
  std::string dnInput, dnOutput = "denoised.pgm", dnClean, dnReport;
  double dnSigma = 0;
  DenoiseConfig dn;
  int dnThreads = 1;
  std::uint64_t dnSeed = 0;
  bool normalizeAtoms = false, keepMean = false;
  auto* den = app.add_subcommand("denoise", "patch-based denoising with a learned FAuST");
  den->add_option("--input", dnInput, "noisy grayscale PGM")->required();
  den->add_option("--output", dnOutput, "denoised PGM path");
  den->add_option("--clean", dnClean, "clean reference for PSNR");
  den->add_option("--report", dnReport, "report CSV path");
  den->add_option("--add-noise", dnSigma, "add Gaussian noise of this sigma first");
  den->add_option("--atoms", dn.atoms, "dictionary atoms");
  den->add_option("--coding-atoms", dn.codingAtoms, "atoms per patch");
  den->add_option("--patches", dn.trainingPatches, "training patches");
  den->add_option("--factors", dn.numFactors, "dictionary factor count");
  den->add_option("--k", dn.perColumn, "per-column budget of the rightmost factor");
  den->add_option("--s", dn.intermediate, "global budget of intermediate factors");
  den->add_option("--rho", dn.rho, "residual budget decay");
  den->add_option("--P", dn.residualBudget, "initial residual budget");
  den->add_option("--ksvd-iters", dn.ksvdIters, "initial dictionary-learning rounds");
  den->add_option("--inner-iters", dn.inner.maxIter, "PALM iterations per split");
  den->add_option("--global-iters", dn.global.maxIter, "PALM iterations per refinement");
  den->add_option("--seed", dnSeed, "master seed");
  den->add_option("--threads", dnThreads, "worker cap for patch coding");
  den->add_flag("--normalize-atoms", normalizeAtoms,
                "normalize dictionary columns before coding");
  den->add_flag("--dct-init", dn.dctInit,
                "start from the analytic overcomplete DCT dictionary");
  den->add_flag("--keep-mean", keepMean, "skip patch mean removal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*fact)
      return cmdFactorize(input, demoHadamard, output, tracePath, levels, scheduleJ,
                          scheduleK, scheduleS, scheduleRho, scheduleP, fromLeft,
                          stopRe, palm);
    if (*apply) return cmdApply(faustPath, applyIn, applyOut, transpose, countFlops);
    if (*svd) return cmdSvdBaseline(svdInput, svdRanks, svdOutput, svdSeed);
    if (*loc)
      return cmdLocalize(locRows, locCols, locFactors, locTrials, locSeed, locOutput,
                         locCoords);
    if (*den) {
      dn.seed = dnSeed;
      dn.threads = dnThreads;
      dn.normalizeAtoms = normalizeAtoms;
      dn.removeMean = !keepMean;
      return cmdDenoise(dnInput, dnOutput, dnClean, dnReport, dnSigma, dn);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace faust::cli
