#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faust/faust_operator.hpp"
#include "faust/sparse_matrix.hpp"
#include "faust/types.hpp"

namespace faust {

// File formats:
//   - MatrixMarket coordinate (1-based) for sparse matrices, array for dense;
//   - plain whitespace text (one row per line) for dense matrices/vectors;
//   - a JSON container for FAuSTs: {scale, dims:[a_1..a_{J+1}], factors:[...]}
//     with factors ordered leftmost first and 0-based triplets.

namespace detail {

inline std::string readToken(std::istream& in, const std::string& context) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '%') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return tok;
  }
  throw std::invalid_argument(context + ": unexpected end of file");
}

}  // namespace detail

/// Write-then-rename so readers never observe a half-written file.
inline void atomicWrite(const std::string& path,
                        const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    detail::require(bool(os), "atomicWrite: cannot open " + tmp.string());
    writer(os);
    detail::require(bool(os), "atomicWrite: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

template <typename Scalar = double>
SparseMatrix<Scalar> readMatrixMarketSparse(std::istream& in) {
  std::string header;
  std::getline(in, header);
  detail::require(header.rfind("%%MatrixMarket", 0) == 0,
                  "readMatrixMarketSparse: missing MatrixMarket banner");
  std::istringstream hs(header);
  std::string tag, object, format, field, symmetry;
  hs >> tag >> object >> format >> field >> symmetry;
  detail::require(object == "matrix" && format == "coordinate",
                  "readMatrixMarketSparse: expected a coordinate matrix");
  detail::require(field == "real" || field == "integer" || field == "pattern",
                  "readMatrixMarketSparse: unsupported field " + field);
  detail::require(symmetry == "general",
                  "readMatrixMarketSparse: only general symmetry supported");

  const Index rows = std::stol(detail::readToken(in, "readMatrixMarketSparse"));
  const Index cols = std::stol(detail::readToken(in, "readMatrixMarketSparse"));
  const Index nnz = std::stol(detail::readToken(in, "readMatrixMarketSparse"));
  std::vector<typename SparseMatrix<Scalar>::Entry> entries;
  entries.reserve(nnz);
  for (Index k = 0; k < nnz; ++k) {
    const Index i = std::stol(detail::readToken(in, "readMatrixMarketSparse"));
    const Index j = std::stol(detail::readToken(in, "readMatrixMarketSparse"));
    Scalar v = Scalar(1);
    if (field != "pattern")
      v = Scalar(std::stod(detail::readToken(in, "readMatrixMarketSparse")));
    entries.push_back({i - 1, j - 1, v});
  }
  return SparseMatrix<Scalar>(rows, cols, std::move(entries));
}

template <typename Scalar>
void writeMatrixMarketSparse(std::ostream& os, const SparseMatrix<Scalar>& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  os << std::setprecision(17);
  for (const auto& e : m.entries())
    os << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
}

/// Dense matrix from either a MatrixMarket file (array or coordinate) or
/// plain whitespace text where every line is one row.
template <typename Scalar = double>
DenseMatrix<Scalar> readDenseMatrix(std::istream& in) {
  std::streampos start = in.tellg();
  std::string first;
  std::getline(in, first);
  if (first.rfind("%%MatrixMarket", 0) == 0) {
    std::istringstream hs(first);
    std::string tag, object, format;
    hs >> tag >> object >> format;
    if (format == "coordinate") {
      in.seekg(start);
      return readMatrixMarketSparse<Scalar>(in).toDense();
    }
    detail::require(format == "array", "readDenseMatrix: unsupported format " + format);
    const Index rows = std::stol(detail::readToken(in, "readDenseMatrix"));
    const Index cols = std::stol(detail::readToken(in, "readDenseMatrix"));
    DenseMatrix<Scalar> m(rows, cols);
    for (Index j = 0; j < cols; ++j)  // array format is column-major
      for (Index i = 0; i < rows; ++i)
        m(i, j) = Scalar(std::stod(detail::readToken(in, "readDenseMatrix")));
    return m;
  }

  // Plain text: rows = lines, cols = tokens per line.
  std::vector<std::vector<Scalar>> rows;
  std::string line = first;
  do {
    std::istringstream ls(line);
    std::vector<Scalar> row;
    double v;
    while (ls >> v) row.push_back(Scalar(v));
    if (!row.empty()) rows.push_back(std::move(row));
  } while (std::getline(in, line));
  detail::require(!rows.empty(), "readDenseMatrix: empty input");
  const Index cols = static_cast<Index>(rows.front().size());
  DenseMatrix<Scalar> m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::require(static_cast<Index>(rows[i].size()) == cols,
                    "readDenseMatrix: ragged rows");
    for (Index j = 0; j < cols; ++j) m(static_cast<Index>(i), j) = rows[i][j];
  }
  return m;
}

template <typename Scalar = double>
DenseMatrix<Scalar> readDenseMatrixFile(const std::string& path) {
  std::ifstream in(path);
  detail::require(bool(in), "readDenseMatrixFile: cannot open " + path);
  return readDenseMatrix<Scalar>(in);
}

template <typename Scalar>
void writeDenseMatrix(std::ostream& os, const DenseMatrix<Scalar>& m) {
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

template <typename Scalar = double>
DenseVector<Scalar> readVectorFile(const std::string& path) {
  DenseMatrix<Scalar> m = readDenseMatrixFile<Scalar>(path);
  if (m.cols() == 1) return m.col(0);
  detail::require(m.rows() == 1, "readVectorFile: not a vector: " + path);
  return m.row(0).transpose();
}

template <typename Scalar>
nlohmann::json faustToJson(const FaustOperator<Scalar>& f) {
  nlohmann::json doc;
  doc["scale"] = static_cast<double>(f.scale());
  std::vector<Index> dims;  // a_1 (input dim) .. a_{J+1} (output dim)
  dims.push_back(f.cols());
  for (Index j = f.numFactors() - 1; j >= 0; --j) dims.push_back(f.factor(j).rows());
  doc["dims"] = dims;
  doc["factors"] = nlohmann::json::array();
  for (Index j = 0; j < f.numFactors(); ++j) {
    const auto& s = f.factor(j);
    nlohmann::json jf;
    jf["rows"] = s.rows();
    jf["cols"] = s.cols();
    auto triplets = nlohmann::json::array();
    for (const auto& e : s.entries())
      triplets.push_back({e.row, e.col, static_cast<double>(e.value)});
    jf["triplets"] = std::move(triplets);
    doc["factors"].push_back(std::move(jf));
  }
  return doc;
}

template <typename Scalar = double>
FaustOperator<Scalar> faustFromJson(const nlohmann::json& doc) {
  detail::require(doc.contains("scale") && doc.contains("factors") && doc.contains("dims"),
                  "faustFromJson: missing required keys");
  std::vector<SparseMatrix<Scalar>> factors;
  for (const auto& jf : doc.at("factors")) {
    const Index rows = jf.at("rows").get<Index>();
    const Index cols = jf.at("cols").get<Index>();
    std::vector<typename SparseMatrix<Scalar>::Entry> entries;
    for (const auto& t : jf.at("triplets")) {
      detail::require(t.is_array() && t.size() == 3, "faustFromJson: bad triplet");
      entries.push_back({t[0].get<Index>(), t[1].get<Index>(), Scalar(t[2].get<double>())});
    }
    factors.emplace_back(rows, cols, std::move(entries));
  }
  FaustOperator<Scalar> f(Scalar(doc.at("scale").get<double>()), std::move(factors));
  const auto dims = doc.at("dims").get<std::vector<Index>>();
  detail::require(static_cast<Index>(dims.size()) == f.numFactors() + 1,
                  "faustFromJson: dims must list J+1 sizes");
  detail::require(dims.front() == f.cols() && dims.back() == f.rows(),
                  "faustFromJson: dims do not match the factors");
  for (Index j = 0; j < f.numFactors(); ++j) {
    const auto& s = f.factor(j);
    detail::require(s.rows() == dims[dims.size() - 1 - j] &&
                        s.cols() == dims[dims.size() - 2 - j],
                    "faustFromJson: factor shape does not match dims");
  }
  return f;
}

template <typename Scalar>
void writeFaustFile(const std::string& path, const FaustOperator<Scalar>& f) {
  atomicWrite(path, [&](std::ostream& os) { os << faustToJson(f).dump(2) << '\n'; });
}

template <typename Scalar = double>
FaustOperator<Scalar> readFaustFile(const std::string& path) {
  std::ifstream in(path);
  detail::require(bool(in), "readFaustFile: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  return faustFromJson<Scalar>(doc);
}

}  // namespace faust
