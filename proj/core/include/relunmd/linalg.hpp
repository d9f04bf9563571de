#ifndef RELUNMD_LINALG_HPP
#define RELUNMD_LINALG_HPP

#include "relunmd/matrix.hpp"

namespace relunmd {

/// Top-r singular triplets. Columns of u and rows of vt are orthonormal,
/// sigma is sorted nonincreasing.
struct SvdFactors {
  Matrix u;      // m x r
  Vector sigma;  // r
  Matrix vt;     // r x n
};

enum class SvdMethod {
  automatic,   // exact below exact_limit, randomized above
  exact,       // full dense decomposition, then truncate
  randomized,  // seeded range finder with oversampling and power iterations
};

struct SvdOptions {
  SvdMethod method = SvdMethod::automatic;
  Index exact_limit = 2048;  // automatic picks exact while min(m,n) <= this
  int oversample = 10;
  int power_iters = 2;
  unsigned long seed = 0;
};

/// Best rank-r approximation factors of m.
/// Sign convention: in each column of u the entry of largest magnitude is
/// positive, ties broken by lowest row index, so results are reproducible.
SvdFactors truncated_svd(const Matrix& m, Index r, const SvdOptions& opts = {});

/// Solves min_U 1/2 ||w - U v||_F^2 + lambda/2 ||U||_F^2 through the normal
/// equations U (v v^T + lambda I) = w v^T. The r x r system is SPD for
/// lambda > 0 and solved by Cholesky; at lambda == 0 a pivoted factorization
/// is used instead and rank deficiency is reported, not papered over.
Matrix ridge_solve_right(const Matrix& w, const Matrix& v, double lambda);

/// Solves min_V 1/2 ||w - u V||_F^2 + lambda/2 ||V||_F^2 through
/// (u^T u + lambda I) V = u^T w. Same factorization policy as above.
Matrix ridge_solve_left(const Matrix& w, const Matrix& u, double lambda);

}  // namespace relunmd

#endif
