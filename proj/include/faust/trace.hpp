#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "faust/types.hpp"

namespace faust {

/// One reporting row. Iteration rows carry the PALM objective; level rows of
/// the hierarchical drivers carry relative error / relative complexity.
struct TraceRow {
  std::string phase;
  int iteration = -1;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double relError = std::numeric_limits<double>::quiet_NaN();
  double relComplexity = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::int64_t> factorNnz;
  double elapsedMs = std::numeric_limits<double>::quiet_NaN();
};

class RunTrace {
 public:
  void add(TraceRow row) { rows_.push_back(std::move(row)); }

  void append(const RunTrace& other, const std::string& phasePrefix = "") {
    for (TraceRow row : other.rows_) {
      if (!phasePrefix.empty())
        row.phase = row.phase.empty() ? phasePrefix : phasePrefix + "/" + row.phase;
      rows_.push_back(std::move(row));
    }
  }

  const std::vector<TraceRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  /// CSV with one row per entry; per-factor nonzero counts are joined with
  /// ';' into a single column so the layout survives growing factor counts.
  void writeCsv(std::ostream& os) const {
    os << "phase,iteration,objective,lambda,rel_error,rel_complexity,factor_nnz,elapsed_ms\n";
    for (const TraceRow& r : rows_) {
      os << r.phase << ',';
      if (r.iteration >= 0) os << r.iteration;
      os << ',';
      writeNumber(os, r.objective);
      os << ',';
      writeNumber(os, r.lambda);
      os << ',';
      writeNumber(os, r.relError);
      os << ',';
      writeNumber(os, r.relComplexity);
      os << ',';
      for (std::size_t i = 0; i < r.factorNnz.size(); ++i) {
        if (i) os << ';';
        os << r.factorNnz[i];
      }
      os << ',';
      writeNumber(os, r.elapsedMs);
      os << '\n';
    }
  }

 private:
  static void writeNumber(std::ostream& os, double v) {
    if (v == v) {
      auto prec = os.precision(17);
      os << v;
      os.precision(prec);
    }
  }

  std::vector<TraceRow> rows_;
};

}  // namespace faust
