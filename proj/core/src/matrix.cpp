#include "relunmd/matrix.hpp"

#include <string>

namespace relunmd {

std::string shape_string(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a) +
                         " * " + shape_string(b));
  }
  return a * b;
}

double frobenius_norm(const Matrix& a) { return a.norm(); }

Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

SupportPattern support_pattern(const Matrix& m) {
  SupportPattern p;
  p.rows = m.rows();
  p.cols = m.cols();
  const Index n = m.size();
  const double* data = m.data();
  for (Index idx = 0; idx < n; ++idx) {
    const double value = data[idx];
    if (value < 0.0 || !std::isfinite(value)) {
      const Index i = idx % m.rows();
      const Index j = idx / m.rows();
      throw InvalidArgument("support_pattern: entry (" + std::to_string(i) +
                            ", " + std::to_string(j) + ") = " +
                            std::to_string(value) +
                            " but the data matrix must be nonnegative");
    }
    if (value == 0.0) {
      p.zero_idx.push_back(idx);
    } else {
      p.positive_idx.push_back(idx);
    }
  }
  return p;
}

bool is_finite(const Matrix& a) { return a.allFinite(); }

}  // namespace relunmd
