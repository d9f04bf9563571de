#include "relunmd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace relunmd {

namespace {

// Makes the decomposition reproducible: the largest-magnitude entry of each
// left singular vector is forced positive, ties going to the lowest row.
void fix_signs(Matrix& u, Matrix& vt) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index pivot = 0;
    double best = std::abs(u(0, j));
    for (Index i = 1; i < u.rows(); ++i) {
      const double mag = std::abs(u(i, j));
      if (mag > best) {
        best = mag;
        pivot = i;
      }
    }
    if (u(pivot, j) < 0.0) {
      u.col(j) = -u.col(j);
      vt.row(j) = -vt.row(j);
    }
  }
}

SvdFactors truncate(const Matrix& u_full, const Vector& sigma_full,
                    const Matrix& v_full, Index r) {
  SvdFactors f;
  f.u = u_full.leftCols(r);
  f.sigma = sigma_full.head(r);
  f.vt = v_full.leftCols(r).transpose();
  fix_signs(f.u, f.vt);
  return f;
}

SvdFactors exact_svd(const Matrix& m, Index r) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return truncate(svd.matrixU(), svd.singularValues(), svd.matrixV(), r);
}

Matrix thin_q(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

SvdFactors randomized_svd(const Matrix& m, Index r, const SvdOptions& opts) {
  const Index k = std::min<Index>(r + opts.oversample, std::min(m.rows(), m.cols()));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix omega(m.cols(), k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < m.cols(); ++i) {
      omega(i, j) = gauss(rng);
    }
  }
  Matrix q = thin_q(m * omega);
  for (int it = 0; it < opts.power_iters; ++it) {
    q = thin_q(m.transpose() * q);
    q = thin_q(m * q);
  }
  const Matrix b = q.transpose() * m;  // k x n
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix u_full = q * svd.matrixU();
  return truncate(u_full, svd.singularValues(), svd.matrixV(), r);
}

}  // namespace

SvdFactors truncated_svd(const Matrix& m, Index r, const SvdOptions& opts) {
  const Index min_dim = std::min(m.rows(), m.cols());
  if (r < 1 || r > min_dim) {
    throw InvalidArgument("truncated_svd: rank " + std::to_string(r) +
                          " out of range for " + shape_string(m));
  }
  switch (opts.method) {
    case SvdMethod::exact:
      return exact_svd(m, r);
    case SvdMethod::randomized:
      return randomized_svd(m, r, opts);
    case SvdMethod::automatic:
    default:
      return min_dim <= opts.exact_limit ? exact_svd(m, r)
                                         : randomized_svd(m, r, opts);
  }
}

namespace {

// Solves (gram + lambda I) sol = rhs for an SPD gram matrix. Cholesky when
// the ridge shift keeps the system definite; a pivoted factorization with a
// rank check when lambda == 0.
Matrix solve_regularized(Matrix gram, const Matrix& rhs, double lambda,
                         const char* who) {
  const Index r = gram.rows();
  if (lambda > 0.0) {
    gram.diagonal().array() += lambda;
    return gram.llt().solve(rhs);
  }
  Eigen::FullPivLU<Matrix> lu(gram);
  if (lu.rank() < r) {
    throw RankDeficiencyError(std::string(who) + ": gram matrix is rank " +
                              std::to_string(lu.rank()) + " of " +
                              std::to_string(r) +
                              " at lambda == 0; the system is singular");
  }
  return lu.solve(rhs);
}

}  // namespace

Matrix ridge_solve_right(const Matrix& w, const Matrix& v, double lambda) {
  if (w.cols() != v.cols()) {
    throw DimensionError("ridge_solve_right: w " + shape_string(w) +
                         " and v " + shape_string(v) +
                         " must share a column count");
  }
  if (lambda < 0.0) {
    throw InvalidArgument("ridge_solve_right: lambda must be >= 0");
  }
  // U (v v^T + lambda I) = w v^T, solved transposed.
  const Matrix gram = v * v.transpose();
  const Matrix rhs = v * w.transpose();
  return solve_regularized(gram, rhs, lambda, "ridge_solve_right").transpose();
}

Matrix ridge_solve_left(const Matrix& w, const Matrix& u, double lambda) {
  if (w.rows() != u.rows()) {
    throw DimensionError("ridge_solve_left: w " + shape_string(w) + " and u " +
                         shape_string(u) + " must share a row count");
  }
  if (lambda < 0.0) {
    throw InvalidArgument("ridge_solve_left: lambda must be >= 0");
  }
  const Matrix gram = u.transpose() * u;
  const Matrix rhs = u.transpose() * w;
  return solve_regularized(gram, rhs, lambda, "ridge_solve_left");
}

}  // namespace relunmd
