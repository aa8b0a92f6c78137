#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace faust {

using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = DenseMatrix<double>;
using Vectord = DenseVector<double>;

/// Thrown when an iteration produces NaN/Inf or otherwise diverges.
/// Contract violations (bad shapes, bad budgets, bad files) use
/// std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Per-call multiply-add counter used to audit the fast-apply cost claims.
struct FlopCounter {
  std::uint64_t multiplyAdds = 0;

  void add(std::uint64_t n) { multiplyAdds += n; }
  void reset() { multiplyAdds = 0; }
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

}  // namespace faust
