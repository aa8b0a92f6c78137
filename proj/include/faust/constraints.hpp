#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "faust/types.hpp"

namespace faust {

// Constraint kinds. Each describes the sparsity structure of one factor's
// feasible set; all of them except Fixed and Unconstrained are additionally
// intersected with the unit-Frobenius-norm sphere.

struct GlobalSparsity {
  Index budget;
};
struct PerColumnSparsity {
  Index k;
};
struct PerRowSparsity {
  Index k;
};
/// Blocks partition the column-major linear index set; block i keeps at most
/// budgets[i] entries.
struct PartitionSparsity {
  std::vector<std::vector<Index>> blocks;
  std::vector<Index> budgets;
};
/// Entries allowed only on the given column-major linear indices.
struct FixedSupport {
  std::vector<Index> mask;
};
struct Triangular {
  bool upper = true;
};
struct Diagonal {};
/// Pairwise disjoint groups of column-major linear indices; the factor is
/// constant on each group, zero outside all groups, with at most `budget`
/// groups active.
struct PiecewiseConstantSparse {
  std::vector<std::vector<Index>> groups;
  Index budget;
};
struct Unconstrained {};

template <typename Scalar>
struct Fixed {
  DenseMatrix<Scalar> value;
};

template <typename Scalar>
using ConstraintKind =
    std::variant<GlobalSparsity, PerColumnSparsity, PerRowSparsity, PartitionSparsity,
                 FixedSupport, Triangular, Diagonal, PiecewiseConstantSparse,
                 Fixed<Scalar>, Unconstrained>;

/// One factor's feasible set: a sparsity structure on a rows x cols matrix.
/// Budgets larger than the capacity of their region are allowed and act as
/// vacuous constraints; non-positive budgets are rejected.
template <typename Scalar>
class ConstraintSet {
 public:
  ConstraintSet(Index rows, Index cols, ConstraintKind<Scalar> kind)
      : rows_(rows), cols_(cols), kind_(std::move(kind)) {
    validate();
  }

  static ConstraintSet globalSparsity(Index rows, Index cols, Index budget) {
    return ConstraintSet(rows, cols, GlobalSparsity{budget});
  }
  static ConstraintSet perColumn(Index rows, Index cols, Index k) {
    return ConstraintSet(rows, cols, PerColumnSparsity{k});
  }
  static ConstraintSet perRow(Index rows, Index cols, Index k) {
    return ConstraintSet(rows, cols, PerRowSparsity{k});
  }
  static ConstraintSet partition(Index rows, Index cols,
                                 std::vector<std::vector<Index>> blocks,
                                 std::vector<Index> budgets) {
    return ConstraintSet(rows, cols, PartitionSparsity{std::move(blocks), std::move(budgets)});
  }
  static ConstraintSet fixedSupport(Index rows, Index cols, std::vector<Index> mask) {
    return ConstraintSet(rows, cols, FixedSupport{std::move(mask)});
  }
  static ConstraintSet triangular(Index rows, Index cols, bool upper) {
    return ConstraintSet(rows, cols, Triangular{upper});
  }
  static ConstraintSet diagonal(Index rows, Index cols) {
    return ConstraintSet(rows, cols, Diagonal{});
  }
  static ConstraintSet piecewiseConstant(Index rows, Index cols,
                                         std::vector<std::vector<Index>> groups,
                                         Index budget) {
    return ConstraintSet(rows, cols, PiecewiseConstantSparse{std::move(groups), budget});
  }
  static ConstraintSet fixed(DenseMatrix<Scalar> value) {
    Index r = value.rows(), c = value.cols();
    return ConstraintSet(r, c, Fixed<Scalar>{std::move(value)});
  }
  static ConstraintSet unconstrained(Index rows, Index cols) {
    return ConstraintSet(rows, cols, Unconstrained{});
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const ConstraintKind<Scalar>& kind() const { return kind_; }

  /// True for the variants intersected with the unit-Frobenius sphere.
  bool isNormalized() const {
    return !std::holds_alternative<Fixed<Scalar>>(kind_) &&
           !std::holds_alternative<Unconstrained>(kind_);
  }

  /// Textual form matching the CLI grammar where one exists.
  std::string describe() const {
    struct Visitor {
      const ConstraintSet& c;
      std::string operator()(const GlobalSparsity& g) const {
        return "sp:" + std::to_string(g.budget);
      }
      std::string operator()(const PerColumnSparsity& g) const {
        return "spcol:" + std::to_string(g.k);
      }
      std::string operator()(const PerRowSparsity& g) const {
        return "sprow:" + std::to_string(g.k);
      }
      std::string operator()(const PartitionSparsity&) const { return "partition"; }
      std::string operator()(const FixedSupport& f) const {
        return "supp(" + std::to_string(f.mask.size()) + ")";
      }
      std::string operator()(const Triangular& t) const {
        return t.upper ? "triu" : "tril";
      }
      std::string operator()(const Diagonal&) const { return "diag"; }
      std::string operator()(const PiecewiseConstantSparse& p) const {
        return "pwc(" + std::to_string(p.groups.size()) + "):" + std::to_string(p.budget);
      }
      std::string operator()(const Fixed<Scalar>&) const { return "const"; }
      std::string operator()(const Unconstrained&) const { return "free"; }
    };
    return std::visit(Visitor{*this}, kind_);
  }

 private:
  void validate() {
    detail::require(rows_ > 0 && cols_ > 0, "ConstraintSet: dimensions must be positive");
    const Index cells = rows_ * cols_;
    if (auto* g = std::get_if<GlobalSparsity>(&kind_)) {
      detail::require(g->budget >= 1, "ConstraintSet: sparsity budget must be positive");
    } else if (auto* pc = std::get_if<PerColumnSparsity>(&kind_)) {
      detail::require(pc->k >= 1, "ConstraintSet: per-column budget must be positive");
    } else if (auto* pr = std::get_if<PerRowSparsity>(&kind_)) {
      detail::require(pr->k >= 1, "ConstraintSet: per-row budget must be positive");
    } else if (auto* pa = std::get_if<PartitionSparsity>(&kind_)) {
      detail::require(pa->blocks.size() == pa->budgets.size(),
                      "ConstraintSet: one budget per block required");
      std::vector<char> seen(cells, 0);
      Index covered = 0;
      for (auto& block : pa->blocks) {
        detail::require(!block.empty(), "ConstraintSet: empty partition block");
        std::sort(block.begin(), block.end());
        for (Index idx : block) {
          detail::require(idx >= 0 && idx < cells && !seen[idx],
                          "ConstraintSet: blocks must partition the index set");
          seen[idx] = 1;
          ++covered;
        }
      }
      detail::require(covered == cells, "ConstraintSet: blocks must cover every entry");
      for (Index b : pa->budgets)
        detail::require(b >= 1, "ConstraintSet: block budget must be positive");
    } else if (auto* fs = std::get_if<FixedSupport>(&kind_)) {
      detail::require(!fs->mask.empty(), "ConstraintSet: empty support mask");
      std::sort(fs->mask.begin(), fs->mask.end());
      detail::require(std::adjacent_find(fs->mask.begin(), fs->mask.end()) == fs->mask.end(),
                      "ConstraintSet: duplicate support index");
      detail::require(fs->mask.front() >= 0 && fs->mask.back() < cells,
                      "ConstraintSet: support index out of bounds");
    } else if (auto* pw = std::get_if<PiecewiseConstantSparse>(&kind_)) {
      detail::require(pw->budget >= 1, "ConstraintSet: group budget must be positive");
      detail::require(!pw->groups.empty(), "ConstraintSet: no groups given");
      std::vector<char> seen(cells, 0);
      for (auto& group : pw->groups) {
        detail::require(!group.empty(), "ConstraintSet: empty group");
        std::sort(group.begin(), group.end());
        for (Index idx : group) {
          detail::require(idx >= 0 && idx < cells && !seen[idx],
                          "ConstraintSet: groups must be pairwise disjoint");
          seen[idx] = 1;
        }
      }
    } else if (auto* fx = std::get_if<Fixed<Scalar>>(&kind_)) {
      detail::require(fx->value.rows() == rows_ && fx->value.cols() == cols_,
                      "ConstraintSet: fixed value shape mismatch");
    }
  }

  Index rows_;
  Index cols_;
  ConstraintKind<Scalar> kind_;
};

/// Indices of the k entries of largest absolute value, ties broken by the
/// smallest linear index. Returned sorted ascending.
template <typename Derived>
std::vector<Index> topKIndices(const Eigen::DenseBase<Derived>& values, Index k) {
  const Index n = values.size();
  detail::require(k >= 0 && k <= n, "topKIndices: k out of range");
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
    const auto va = std::abs(values.derived()(a)), vb = std::abs(values.derived()(b));
    return va != vb ? va > vb : a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace detail {

template <typename Scalar>
DenseVector<Scalar> flattenColMajor(const DenseMatrix<Scalar>& u) {
  return Eigen::Map<const DenseVector<Scalar>>(u.data(), u.size());
}

// Keep the given linear indices of u, zero elsewhere, then scale the result to
// unit Frobenius norm. If everything kept is zero, fall back to the feasible
// point with equal weight on the lexicographically first positions of each
// budgeted region, as produced by the caller-supplied `selected` list itself.
template <typename Scalar>
DenseMatrix<Scalar> keepAndNormalize(const DenseMatrix<Scalar>& u,
                                     const std::vector<Index>& selected,
                                     const std::vector<Index>& fallback) {
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(u.rows(), u.cols());
  Scalar sq = 0;
  for (Index idx : selected) {
    const Scalar v = u.data()[idx] == Scalar(0) ? Scalar(0) : u.data()[idx];
    out.data()[idx] = v;
    sq += v * v;
  }
  if (sq == Scalar(0)) {
    out.setZero();
    const Scalar v = Scalar(1) / std::sqrt(Scalar(fallback.size()));
    for (Index idx : fallback) out.data()[idx] = v;
    return out;
  }
  const Scalar nrm = std::sqrt(sq);
  for (Index idx : selected) out.data()[idx] /= nrm;
  return out;
}

template <typename Scalar>
std::vector<Index> maskFirst(const std::vector<Index>& sortedRegion, Index count) {
  return std::vector<Index>(sortedRegion.begin(), sortedRegion.begin() + count);
}

}  // namespace detail

/// Euclidean projection onto the constraint set. For the sparsity families the
/// result keeps the largest entries per budgeted region and is normalized to
/// unit Frobenius norm globally; for the piecewise-constant family it follows
/// the group-score rule with scores |group sum| / sqrt(group size). A zero
/// selection falls back to equal weight 1/sqrt(s) on the lexicographically
/// first admissible positions so the operator is total.
template <typename Scalar>
DenseMatrix<Scalar> project(const DenseMatrix<Scalar>& u, const ConstraintSet<Scalar>& c) {
  detail::require(u.rows() == c.rows() && u.cols() == c.cols(),
                  "project: input shape does not match constraint");
  const Index rows = u.rows(), cols = u.cols();

  if (std::holds_alternative<Unconstrained>(c.kind())) return u;
  if (auto* fx = std::get_if<Fixed<Scalar>>(&c.kind())) return fx->value;

  if (auto* g = std::get_if<GlobalSparsity>(&c.kind())) {
    const Index s = std::min(g->budget, rows * cols);
    auto flat = detail::flattenColMajor(u);
    std::vector<Index> sel = topKIndices(flat, s);
    std::vector<Index> fallback(s);
    std::iota(fallback.begin(), fallback.end(), Index(0));
    return detail::keepAndNormalize(u, sel, fallback);
  }

  if (auto* pc = std::get_if<PerColumnSparsity>(&c.kind())) {
    const Index k = std::min(pc->k, rows);
    std::vector<Index> sel, fallback;
    for (Index j = 0; j < cols; ++j) {
      std::vector<Index> colSel = topKIndices(u.col(j), k);
      for (Index i : colSel) sel.push_back(j * rows + i);
      for (Index i = 0; i < k; ++i) fallback.push_back(j * rows + i);
    }
    return detail::keepAndNormalize(u, sel, fallback);
  }

  if (auto* pr = std::get_if<PerRowSparsity>(&c.kind())) {
    const Index k = std::min(pr->k, cols);
    std::vector<Index> sel, fallback;
    for (Index i = 0; i < rows; ++i) {
      std::vector<Index> rowSel = topKIndices(u.row(i), k);
      for (Index j : rowSel) sel.push_back(j * rows + i);
      for (Index j = 0; j < k; ++j) fallback.push_back(j * rows + i);
    }
    std::sort(sel.begin(), sel.end());
    std::sort(fallback.begin(), fallback.end());
    return detail::keepAndNormalize(u, sel, fallback);
  }

  if (auto* pa = std::get_if<PartitionSparsity>(&c.kind())) {
    std::vector<Index> sel, fallback;
    for (std::size_t b = 0; b < pa->blocks.size(); ++b) {
      const auto& block = pa->blocks[b];
      const Index s = std::min<Index>(pa->budgets[b], block.size());
      DenseVector<Scalar> vals(block.size());
      for (std::size_t p = 0; p < block.size(); ++p) vals[p] = u.data()[block[p]];
      for (Index p : topKIndices(vals, s)) sel.push_back(block[p]);
      for (Index p = 0; p < s; ++p) fallback.push_back(block[p]);
    }
    std::sort(sel.begin(), sel.end());
    std::sort(fallback.begin(), fallback.end());
    return detail::keepAndNormalize(u, sel, fallback);
  }

  if (auto* fs = std::get_if<FixedSupport>(&c.kind())) {
    return detail::keepAndNormalize(u, fs->mask, fs->mask);
  }

  if (auto* tr = std::get_if<Triangular>(&c.kind())) {
    std::vector<Index> mask;
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        if (tr->upper ? i <= j : i >= j) mask.push_back(j * rows + i);
    return detail::keepAndNormalize(u, mask, mask);
  }

  if (std::holds_alternative<Diagonal>(c.kind())) {
    std::vector<Index> mask;
    for (Index i = 0; i < std::min(rows, cols); ++i) mask.push_back(i * rows + i);
    return detail::keepAndNormalize(u, mask, mask);
  }

  // Piecewise-constant family: pick the `s` groups with the highest
  // |group sum| / sqrt(group size); within the chosen groups the closest
  // constant-by-group matrix carries the group means, rescaled to unit norm.
  const auto& pw = std::get<PiecewiseConstantSparse>(c.kind());
  const Index numGroups = static_cast<Index>(pw.groups.size());
  const Index s = std::min(pw.budget, numGroups);
  DenseVector<Scalar> groupMean(numGroups), score(numGroups);
  for (Index g = 0; g < numGroups; ++g) {
    Scalar acc = 0;
    for (Index idx : pw.groups[g]) acc += u.data()[idx];
    const Scalar size = Scalar(pw.groups[g].size());
    groupMean[g] = acc / size;
    score[g] = std::abs(acc) / std::sqrt(size);
  }
  std::vector<Index> chosen = topKIndices(score, s);
  Scalar denom = 0;
  for (Index g : chosen)
    denom += Scalar(pw.groups[g].size()) * groupMean[g] * groupMean[g];
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(rows, cols);
  if (denom == Scalar(0)) {
    Index cellCount = 0;
    for (Index g = 0; g < s; ++g) cellCount += static_cast<Index>(pw.groups[g].size());
    const Scalar v = Scalar(1) / std::sqrt(Scalar(cellCount));
    for (Index g = 0; g < s; ++g)
      for (Index idx : pw.groups[g]) out.data()[idx] = v;
    return out;
  }
  const Scalar scale = Scalar(1) / std::sqrt(denom);
  for (Index g : chosen)
    for (Index idx : pw.groups[g]) out.data()[idx] = groupMean[g] * scale;
  return out;
}

/// Feasibility predicate for tests and solver assertions.
template <typename Scalar>
bool satisfies(const DenseMatrix<Scalar>& m, const ConstraintSet<Scalar>& c,
               Scalar tol = 1e-12) {
  if (m.rows() != c.rows() || m.cols() != c.cols()) return false;
  const Index rows = m.rows(), cols = m.cols();

  if (std::holds_alternative<Unconstrained>(c.kind())) return true;
  if (auto* fx = std::get_if<Fixed<Scalar>>(&c.kind()))
    return (m - fx->value).cwiseAbs().maxCoeff() <= tol;

  if (std::abs(m.norm() - Scalar(1)) > tol) return false;

  auto nnzOf = [](const auto& block) {
    Index n = 0;
    for (Index i = 0; i < block.size(); ++i)
      if (block.derived()(i) != Scalar(0)) ++n;
    return n;
  };

  if (auto* g = std::get_if<GlobalSparsity>(&c.kind()))
    return nnzOf(detail::flattenColMajor(m)) <= g->budget;
  if (auto* pc = std::get_if<PerColumnSparsity>(&c.kind())) {
    for (Index j = 0; j < cols; ++j)
      if (nnzOf(m.col(j)) > pc->k) return false;
    return true;
  }
  if (auto* pr = std::get_if<PerRowSparsity>(&c.kind())) {
    for (Index i = 0; i < rows; ++i)
      if (nnzOf(m.row(i).transpose()) > pr->k) return false;
    return true;
  }
  if (auto* pa = std::get_if<PartitionSparsity>(&c.kind())) {
    for (std::size_t b = 0; b < pa->blocks.size(); ++b) {
      Index n = 0;
      for (Index idx : pa->blocks[b])
        if (m.data()[idx] != Scalar(0)) ++n;
      if (n > pa->budgets[b]) return false;
    }
    return true;
  }
  if (auto* fs = std::get_if<FixedSupport>(&c.kind())) {
    std::vector<char> allowed(rows * cols, 0);
    for (Index idx : fs->mask) allowed[idx] = 1;
    for (Index idx = 0; idx < rows * cols; ++idx)
      if (m.data()[idx] != Scalar(0) && !allowed[idx]) return false;
    return true;
  }
  if (auto* tr = std::get_if<Triangular>(&c.kind())) {
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        if (m(i, j) != Scalar(0) && (tr->upper ? i > j : i < j)) return false;
    return true;
  }
  if (std::holds_alternative<Diagonal>(c.kind())) {
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        if (m(i, j) != Scalar(0) && i != j) return false;
    return true;
  }

  const auto& pw = std::get<PiecewiseConstantSparse>(c.kind());
  std::vector<char> covered(rows * cols, 0);
  Index active = 0;
  for (const auto& group : pw.groups) {
    const Scalar v = m.data()[group.front()];
    for (Index idx : group) {
      covered[idx] = 1;
      if (std::abs(m.data()[idx] - v) > tol) return false;
    }
    if (v != Scalar(0)) ++active;
  }
  for (Index idx = 0; idx < rows * cols; ++idx)
    if (!covered[idx] && m.data()[idx] != Scalar(0)) return false;
  return active <= pw.budget;
}

/// Constraint on the transposed factor; used by the from-left hierarchy.
template <typename Scalar>
ConstraintSet<Scalar> transposeConstraint(const ConstraintSet<Scalar>& c) {
  const Index rows = c.rows(), cols = c.cols();
  auto t = [rows, cols](Index idx) {
    const Index i = idx % rows, j = idx / rows;
    return i * cols + j;
  };
  auto tAll = [&](const std::vector<Index>& v) {
    std::vector<Index> out;
    out.reserve(v.size());
    for (Index idx : v) out.push_back(t(idx));
    std::sort(out.begin(), out.end());
    return out;
  };

  struct Visitor {
    Index rows, cols;
    decltype(tAll)& mapAll;
    ConstraintSet<Scalar> operator()(const GlobalSparsity& g) const {
      return ConstraintSet<Scalar>::globalSparsity(cols, rows, g.budget);
    }
    ConstraintSet<Scalar> operator()(const PerColumnSparsity& g) const {
      return ConstraintSet<Scalar>::perRow(cols, rows, g.k);
    }
    ConstraintSet<Scalar> operator()(const PerRowSparsity& g) const {
      return ConstraintSet<Scalar>::perColumn(cols, rows, g.k);
    }
    ConstraintSet<Scalar> operator()(const PartitionSparsity& p) const {
      std::vector<std::vector<Index>> blocks;
      for (const auto& b : p.blocks) blocks.push_back(mapAll(b));
      return ConstraintSet<Scalar>::partition(cols, rows, std::move(blocks), p.budgets);
    }
    ConstraintSet<Scalar> operator()(const FixedSupport& f) const {
      return ConstraintSet<Scalar>::fixedSupport(cols, rows, mapAll(f.mask));
    }
    ConstraintSet<Scalar> operator()(const Triangular& tr) const {
      return ConstraintSet<Scalar>::triangular(cols, rows, !tr.upper);
    }
    ConstraintSet<Scalar> operator()(const Diagonal&) const {
      return ConstraintSet<Scalar>::diagonal(cols, rows);
    }
    ConstraintSet<Scalar> operator()(const PiecewiseConstantSparse& p) const {
      std::vector<std::vector<Index>> groups;
      for (const auto& g : p.groups) groups.push_back(mapAll(g));
      return ConstraintSet<Scalar>::piecewiseConstant(cols, rows, std::move(groups), p.budget);
    }
    ConstraintSet<Scalar> operator()(const Fixed<Scalar>& f) const {
      return ConstraintSet<Scalar>::fixed(f.value.transpose());
    }
    ConstraintSet<Scalar> operator()(const Unconstrained&) const {
      return ConstraintSet<Scalar>::unconstrained(cols, rows);
    }
  };
  return std::visit(Visitor{rows, cols, tAll}, c.kind());
}

// Group generators realizing circulant/Toeplitz/Hankel structure as
// piecewise-constant index families. Groups are ordered by offset, so the
// deterministic tie-break on group index is reproducible.

inline std::vector<std::vector<Index>> toeplitzGroups(Index rows, Index cols) {
  std::vector<std::vector<Index>> groups;
  for (Index d = -(rows - 1); d <= cols - 1; ++d) {
    std::vector<Index> g;
    for (Index i = 0; i < rows; ++i) {
      const Index j = i + d;
      if (j >= 0 && j < cols) g.push_back(j * rows + i);
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

inline std::vector<std::vector<Index>> hankelGroups(Index rows, Index cols) {
  std::vector<std::vector<Index>> groups;
  for (Index a = 0; a <= rows + cols - 2; ++a) {
    std::vector<Index> g;
    for (Index i = 0; i < rows; ++i) {
      const Index j = a - i;
      if (j >= 0 && j < cols) g.push_back(j * rows + i);
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

inline std::vector<std::vector<Index>> circulantGroups(Index n) {
  std::vector<std::vector<Index>> groups(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) groups[(j - i + n) % n].push_back(j * n + i);
  return groups;
}

using ConstraintSetd = ConstraintSet<double>;

}  // namespace faust
