#ifndef RELUNMD_MATRIX_HPP
#define RELUNMD_MATRIX_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "relunmd/errors.hpp"

namespace relunmd {

/// Column-major dense matrix of doubles. Every numeric container in the
/// library (data matrices, iterates, factors) uses this one type.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Checked matrix product. Throws DimensionError naming both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);

/// sqrt of the sum of squared entries.
double frobenius_norm(const Matrix& a);

/// Elementwise max(0, a_ij).
Matrix relu(const Matrix& a);

/// Partition of a nonnegative matrix into zero and strictly positive
/// entries. Indices are linear offsets into column-major storage.
struct SupportPattern {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> zero_idx;
  std::vector<Index> positive_idx;

  std::pair<Index, Index> coords(Index linear) const {
    return {linear % rows, linear / rows};
  }
};

/// Splits m into its zero and positive entries.
/// Rejects negative entries, naming the offending index.
SupportPattern support_pattern(const Matrix& m);

/// True when no entry is NaN or infinite.
bool is_finite(const Matrix& a);

std::string shape_string(const Matrix& a);

}  // namespace relunmd

#endif
