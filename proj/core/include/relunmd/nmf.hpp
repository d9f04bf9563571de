#ifndef RELUNMD_NMF_HPP
#define RELUNMD_NMF_HPP

#include "relunmd/matrix.hpp"

namespace relunmd {

/// Nonnegative factor pair m ~ w_basis * h_coef.
struct NmfFactors {
  Matrix w_basis;  // m x p, >= 0
  Matrix h_coef;   // p x n, >= 0
  Index inner_rank = 0;
};

/// HALS nonnegative factorization: per sweep, exact coordinate updates of
/// each basis column then each coefficient row, so the fit error is
/// nonincreasing across sweeps. Initialization is uniform random scaled to
/// the data norm, deterministic for a given seed.
NmfFactors nmf_hals(const Matrix& m, Index p, int sweeps, unsigned long seed);

/// Nonnegative least squares min_{V >= 0} ||m - u_hat V||_F by HALS-type
/// coordinate sweeps from a zero start. Rows whose basis column is zero
/// stay at zero. Stops early once the scaled KKT violation drops below
/// 1e-8 (see nnls_kkt_violation).
Matrix nnls_fit(const Matrix& m, const Matrix& u_hat, int sweeps);

/// Max scaled KKT violation of v for min_{V >= 0} ||m - u_hat V||_F:
/// with G = u_hat^T (u_hat v - m), entries v_ij > 0 contribute |G_ij| and
/// entries v_ij == 0 contribute max(0, -G_ij), divided by
/// scale = 1 + max|u_hat^T m| + max|u_hat^T u_hat v|.
double nnls_kkt_violation(const Matrix& m, const Matrix& u_hat,
                          const Matrix& v);

}  // namespace relunmd

#endif
