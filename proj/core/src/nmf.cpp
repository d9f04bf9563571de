#include "relunmd/nmf.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "relunmd/errors.hpp"

namespace relunmd {

namespace {

// Below this a Gram diagonal entry is treated as a dead component: the
// corresponding column/row is zeroed instead of divided by it.
constexpr double kDeadPivot = std::numeric_limits<double>::min();

void require_nonnegative(const Matrix& a, const char* who) {
  if (a.size() > 0 && a.minCoeff() < 0.0) {
    throw InvalidArgument(std::string(who) + ": negative entries");
  }
}

}  // namespace

NmfFactors nmf_hals(const Matrix& m, Index p, int sweeps,
                    unsigned long seed) {
  require_nonnegative(m, "nmf_hals");
  if (p < 1 || p > std::min(m.rows(), m.cols())) {
    throw InvalidArgument("nmf_hals: inner rank " + std::to_string(p) +
                          " invalid for " + shape_string(m));
  }
  const double norm = m.norm();
  if (m.size() == 0 || norm == 0.0) {
    throw InvalidArgument("nmf_hals: the data matrix is zero");
  }
  if (sweeps < 0) {
    throw InvalidArgument("nmf_hals: sweeps must be >= 0");
  }

  NmfFactors f;
  f.inner_rank = p;
  f.w_basis.resize(m.rows(), p);
  f.h_coef.resize(p, m.cols());

  // Uniform nonnegative start scaled to the data norm; W first, then H,
  // both in storage order, so the stream of draws is reproducible.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = norm / static_cast<double>(p);
  for (Index i = 0; i < f.w_basis.size(); ++i) {
    f.w_basis.data()[i] = scale * unit(rng);
  }
  for (Index i = 0; i < f.h_coef.size(); ++i) {
    f.h_coef.data()[i] = scale * unit(rng);
  }

  Matrix& w = f.w_basis;
  Matrix& h = f.h_coef;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // Basis columns: exact minimization of ||M - WH||_F over one column
    // with the rest held fixed.
    {
      const Matrix gram = h * h.transpose();   // p x p
      const Matrix cross = m * h.transpose();  // m x p
      for (Index i = 0; i < p; ++i) {
        if (gram(i, i) <= kDeadPivot) {
          w.col(i).setZero();
          continue;
        }
        w.col(i) =
            (w.col(i) + (cross.col(i) - w * gram.col(i)) / gram(i, i))
                .cwiseMax(0.0);
      }
    }
    // Coefficient rows, symmetrically.
    {
      const Matrix gram = w.transpose() * w;  // p x p
      const Matrix cross = w.transpose() * m;  // p x n
      for (Index i = 0; i < p; ++i) {
        if (gram(i, i) <= kDeadPivot) {
          h.row(i).setZero();
          continue;
        }
        h.row(i) =
            (h.row(i) + (cross.row(i) - gram.row(i) * h) / gram(i, i))
                .cwiseMax(0.0);
      }
    }
  }
  return f;
}

Matrix nnls_fit(const Matrix& m, const Matrix& u_hat, int sweeps) {
  if (u_hat.rows() != m.rows()) {
    throw DimensionError("nnls_fit: basis " + shape_string(u_hat) +
                         " vs data " + shape_string(m));
  }
  require_nonnegative(u_hat, "nnls_fit");
  if (sweeps < 0) {
    throw InvalidArgument("nnls_fit: sweeps must be >= 0");
  }

  const Index p = u_hat.cols();
  Matrix v = Matrix::Zero(p, m.cols());
  const Matrix gram = u_hat.transpose() * u_hat;  // p x p
  const Matrix cross = u_hat.transpose() * m;     // p x n

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (Index i = 0; i < p; ++i) {
      if (gram(i, i) <= kDeadPivot) {
        v.row(i).setZero();  // zero basis column: row stays at zero
        continue;
      }
      v.row(i) = (v.row(i) + (cross.row(i) - gram.row(i) * v) / gram(i, i))
                     .cwiseMax(0.0);
    }
    if (nnls_kkt_violation(m, u_hat, v) <= 1e-8) {
      break;
    }
  }
  return v;
}

double nnls_kkt_violation(const Matrix& m, const Matrix& u_hat,
                          const Matrix& v) {
  if (u_hat.rows() != m.rows() || u_hat.cols() != v.rows() ||
      v.cols() != m.cols()) {
    throw DimensionError("nnls_kkt_violation: shapes m " + shape_string(m) +
                         ", u_hat " + shape_string(u_hat) + ", v " +
                         shape_string(v) + " do not conform");
  }
  const Matrix cross = u_hat.transpose() * m;
  const Matrix curvature = (u_hat.transpose() * u_hat) * v;
  const Matrix grad = curvature - cross;
  const double scale =
      1.0 + (cross.size() > 0 ? cross.cwiseAbs().maxCoeff() : 0.0) +
      (curvature.size() > 0 ? curvature.cwiseAbs().maxCoeff() : 0.0);
  double worst = 0.0;
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      const double g = grad(i, j);
      const double viol =
          v(i, j) > 0.0 ? std::abs(g) : std::max(0.0, -g);
      worst = std::max(worst, viol);
    }
  }
  return worst / scale;
}

}  // namespace relunmd
