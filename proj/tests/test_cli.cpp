#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "faust/generators.hpp"
#include "faust/image.hpp"
#include "faust/io.hpp"
#include "support/oracles.hpp"

using namespace faust;
using testing::randomMatrix;

namespace {

namespace fs = std::filesystem;

fs::path workDir() {
  auto dir = fs::temp_directory_path() / "faust_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int runTool(const std::string& args) {
  const std::string cmd = std::string(FAUST_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string capture(const std::string& args) {
  const auto out = workDir() / "stdout.txt";
  const std::string cmd =
      std::string(FAUST_TOOL_PATH) + " " + args + " >" + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("factorize demo writes a valid container and the documented summary") {
  auto dir = workDir();
  auto out = dir / "h32.json";
  const std::string summary = capture("factorize --demo-hadamard 32 --output " + out.string());
  CHECK(summary.find("RC=0.3125") != std::string::npos);
  CHECK(summary.find("RCG=3.2") != std::string::npos);
  CHECK(summary.find("s_tot=320") != std::string::npos);

  FaustOperatord op = readFaustFile(out.string());
  CHECK(op.numFactors() == 5);
  for (Index j = 0; j < 5; ++j) CHECK(op.factor(j).nnz() <= 64);
}

TEST_CASE("factorize rejects too-small inputs with exit code 2") {
  auto dir = workDir();
  auto tiny = dir / "tiny.txt";
  {
    std::ofstream os(tiny);
    os << "3.5\n";
  }
  CHECK(runTool("factorize --input " + tiny.string() + " --schedule-J 2 --output " +
                (dir / "t.json").string()) == cli::kExitConfig);
}

TEST_CASE("bad usage exits with the configuration code") {
  CHECK(runTool("no-such-command") == cli::kExitConfig);
  CHECK(runTool("apply --faust /nonexistent.json --input /nonexistent.txt") ==
        cli::kExitConfig);
  CHECK(runTool("factorize") == cli::kExitConfig);
}

TEST_CASE("end-to-end MatrixMarket round trip: factorize then apply equals dense product") {
  auto dir = workDir();
  auto mtx = dir / "a.mtx";
  Matrixd a = randomMatrix(12, 16, 3);
  {
    std::ofstream os(mtx);
    writeMatrixMarketSparse(os, SparseMatrixd::fromDense(a));
  }
  auto faustFile = dir / "a_faust.json";
  CHECK(runTool("factorize --input " + mtx.string() +
                " --schedule-J 3 --schedule-k 6 --schedule-s 48 --output " +
                faustFile.string()) == cli::kExitOk);

  Vectord v = randomMatrix(16, 1, 4).col(0);
  auto vecFile = dir / "v.txt";
  {
    std::ofstream os(vecFile);
    os << std::setprecision(17);
    for (Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
  }
  auto outFile = dir / "y.txt";
  CHECK(runTool("apply --faust " + faustFile.string() + " --input " + vecFile.string() +
                " --output " + outFile.string()) == cli::kExitOk);

  FaustOperatord op = readFaustFile(faustFile.string());
  Vectord expected = op.toDense() * v;
  Vectord got = readVectorFile(outFile.string());
  CHECK((got - expected).norm() <= 1e-10 * (1.0 + expected.norm()));
}

TEST_CASE("apply honors --transpose and prints the flop counter") {
  auto dir = workDir();
  auto faustFile = dir / "id.json";
  writeFaustFile(faustFile.string(), FaustOperatord(1.0, {SparseMatrixd::identity(6, 6)}));
  auto vecFile = dir / "v6.txt";
  {
    std::ofstream os(vecFile);
    for (int i = 1; i <= 6; ++i) os << i << '\n';
  }
  auto outFile = dir / "y6.txt";
  const std::string out = capture("apply --faust " + faustFile.string() + " --input " +
                                  vecFile.string() + " --output " + outFile.string() +
                                  " --transpose --count-flops");
  CHECK(out.find("flops=") != std::string::npos);
  // identity FAuST echoes the input; flops <= 2*s_tot + n = 18
  const long flops = std::stol(out.substr(out.find("flops=") + 6));
  CHECK(flops <= 18);
  Vectord got = readVectorFile(outFile.string());
  for (Index i = 0; i < 6; ++i) CHECK(got[i] == double(i + 1));
}

TEST_CASE("svd-baseline emits a nonincreasing error sweep") {
  auto dir = workDir();
  auto mtx = dir / "s.mtx";
  Matrixd a = randomMatrix(10, 8, 7);
  {
    std::ofstream os(mtx);
    writeMatrixMarketSparse(os, SparseMatrixd::fromDense(a));
  }
  auto csv = dir / "svd.csv";
  CHECK(runTool("svd-baseline --input " + mtx.string() + " --ranks 1,2,4,8 --output " +
                csv.string()) == cli::kExitOk);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "rank,rel_error,parameters");
  double prev = 2.0;
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double rank, re, params;
    ls >> rank >> re >> params;
    CHECK(re <= prev + 1e-12);
    CHECK(params == rank * (10 + 8 + 1));
    prev = re;
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(prev <= 1e-8);  // full rank reproduces the matrix
}

TEST_CASE("localize runs deterministically for a fixed seed") {
  auto dir = workDir();
  auto csv1 = dir / "loc1.csv";
  auto csv2 = dir / "loc2.csv";
  const std::string args =
      "localize --rows 16 --cols 64 --factors 3 --trials 20 --seed 11 --output ";
  CHECK(runTool(args + csv1.string()) == cli::kExitOk);
  CHECK(runTool(args + csv2.string()) == cli::kExitOk);
  CHECK(slurp(csv1) == slurp(csv2));
  CHECK(slurp(csv1).find("trial,operator") == 0);
}

TEST_CASE("denoise round trip with synthetic noise") {
  auto dir = workDir();
  auto cleanFile = dir / "clean.pgm";
  {
    std::ofstream os(cleanFile);
    writePgm(os, makeTestImage(48));
  }
  auto outFile = dir / "den.pgm";
  auto reportFile = dir / "den.csv";
  const std::string out = capture(
      "denoise --input " + cleanFile.string() + " --add-noise 25 --output " +
      outFile.string() + " --report " + reportFile.string() +
      " --atoms 32 --patches 300 --factors 3 --k 3 --s 128 --ksvd-iters 2 "
      "--inner-iters 15 --global-iters 15 --seed 3 --threads 2");
  CHECK(out.find("psnr_denoised=") != std::string::npos);
  Image den = readPgm(outFile.string());
  CHECK(den.width == 48);
  const std::string report = slurp(reportFile);
  CHECK(report.find("psnr_noisy,psnr_denoised,rc,s_tot,sigma") == 0);
}

TEST_CASE("constraint grammar parses every documented form") {
  auto dir = workDir();
  // supp file: MatrixMarket pattern positions
  auto suppFile = dir / "supp.mtx";
  {
    std::ofstream os(suppFile);
    os << "%%MatrixMarket matrix coordinate real general\n4 4 3\n1 1 1\n2 2 1\n3 4 1\n";
  }
  auto constFile = dir / "const.txt";
  Matrixd frozen = randomMatrix(4, 4, 9);
  {
    std::ofstream os(constFile);
    writeDenseMatrix(os, frozen);
  }
  auto groupsFile = dir / "groups.txt";
  {
    std::ofstream os(groupsFile);
    os << "1 1 1\n1 2 1\n2 1 2\n2 2 2\n";
  }

  CHECK(std::get<GlobalSparsity>(cli::parseConstraint("sp:5", 4, 4).kind()).budget == 5);
  CHECK(std::get<PerColumnSparsity>(cli::parseConstraint("spcol:2", 4, 4).kind()).k == 2);
  CHECK(std::get<PerRowSparsity>(cli::parseConstraint("sprow:3", 4, 4).kind()).k == 3);
  auto supp = cli::parseConstraint("supp:" + suppFile.string(), 4, 4);
  CHECK(std::get<FixedSupport>(supp.kind()).mask.size() == 3);
  auto fixed = cli::parseConstraint("const:" + constFile.string(), 4, 4);
  CHECK((std::get<Fixed<double>>(fixed.kind()).value - frozen).cwiseAbs().maxCoeff() == 0.0);
  auto pwc = cli::parseConstraint("pwc:" + groupsFile.string() + ":1", 4, 4);
  CHECK(std::get<PiecewiseConstantSparse>(pwc.kind()).groups.size() == 2);

  CHECK_THROWS_AS(cli::parseConstraint("sp", 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(cli::parseConstraint("wat:3", 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(cli::parseConstraint("sp:0", 4, 4), std::invalid_argument);

  auto plan = cli::parseLevelPlan({"sp:8;spcol:2", "sp:4;sp:6"}, 4, 6);
  CHECK(plan.numFactors() == 3);
  CHECK(plan.levels[0].factor.cols() == 6);
  CHECK(plan.levels[1].factor.cols() == 4);
}

TEST_CASE("factorize reads its plan from a config file") {
  auto dir = workDir();
  auto mtx = dir / "cfg_a.mtx";
  Matrixd a = randomMatrix(10, 12, 29);
  {
    std::ofstream os(mtx);
    writeMatrixMarketSparse(os, SparseMatrixd::fromDense(a));
  }
  auto out = dir / "cfg.json";
  auto cfg = dir / "plan.toml";
  {
    std::ofstream os(cfg);
    os << "[factorize]\n";
    os << "input = \"" << mtx.string() << "\"\n";
    os << "output = \"" << out.string() << "\"\n";
    os << "level = [\"sp:60;spcol:3\", \"sp:30;sp:40\"]\n";
  }
  CHECK(runTool("--config " + cfg.string() + " factorize") == cli::kExitOk);
  FaustOperatord op = readFaustFile(out.string());
  CHECK(op.numFactors() == 3);
  CHECK(op.factor(2).cols() == 12);
}

TEST_CASE("factorize accepts explicit level constraints") {
  auto dir = workDir();
  auto mtx = dir / "lvl.mtx";
  Matrixd a = randomMatrix(8, 8, 13);
  {
    std::ofstream os(mtx);
    writeMatrixMarketSparse(os, SparseMatrixd::fromDense(a));
  }
  auto out = dir / "lvl.json";
  CHECK(runTool("factorize --input " + mtx.string() +
                " --level \"sp:32;spcol:2\" --level \"sp:16;sp:24\" --output " +
                out.string()) == cli::kExitOk);
  FaustOperatord op = readFaustFile(out.string());
  CHECK(op.numFactors() == 3);
}
