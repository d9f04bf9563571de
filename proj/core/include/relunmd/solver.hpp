#ifndef RELUNMD_SOLVER_HPP
#define RELUNMD_SOLVER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "relunmd/linalg.hpp"
#include "relunmd/matrix.hpp"

namespace relunmd {

// Momentum-accelerated alternating solver for Tikhonov-regularized ReLU
// decomposition: given a sparse nonnegative M, find U (m x r) and V (r x n)
// minimizing 1/2 ||W - UV||_F^2 + lambda/2 (||U||_F^2 + ||V||_F^2) subject
// to max(0, W) = M. Each iteration updates W, U, V, X = UV in that order;
// W and X take an extrapolation step past the fresh half-step, while U and
// V take a convex-combination step that pulls back toward the previous
// iterate. With lambda = 0 and beta = 1 the loop degenerates to plain
// three-block alternating minimization.

struct NmdParams {
  Index rank = 0;
  double alpha = 0.95;   // extrapolation weight for W and X, in [0, 1)
  double beta = 0.95;    // combination weight for U and V, in (0, 1]
  double lambda = 1e-4;  // Tikhonov weight, >= 0
  int max_iters = 1000;
  std::optional<double> time_limit_seconds;
  std::optional<double> rel_change_tol;  // stop after 5 consecutive small changes
  unsigned long seed = 0;               // consumed by the randomized SVD path

  /// Throws InvalidArgument when a field is out of range for an
  /// m-by-n problem.
  void validate(Index rows, Index cols) const;
};

/// One trace entry. rel_error is ||M - max(0, X)||_F / ||M||_F at the
/// extrapolated X; rel_error_half is the same quantity at the plain
/// product UV before extrapolation.
struct TraceRecord {
  int k = 0;
  double seconds = 0.0;
  double rel_error = 0.0;
  double objective = 0.0;
  double rel_error_half = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  bool empty() const { return records.empty(); }
  const TraceRecord& back() const { return records.back(); }
};

enum class StopReason { max_iters, time_limit, rel_change, numeric_failure };

const char* to_string(StopReason reason);

/// Full iterates plus the most recent half-steps, exposed so that callers
/// can drive the loop manually and inspect intermediate quantities.
struct NmdState {
  Matrix w, u, v, x;  // current full iterates
  Matrix w_half;      // latest feasible half-step, max(0, w_half) == M
  Matrix u_half, v_half;  // latest exact subproblem solutions
  Matrix x_half;          // latest plain product UV
  int k = 0;
  SupportPattern pattern;
};

struct NmdResult {
  Matrix u;
  Matrix v;
  ConvergenceTrace trace;
  StopReason stop_reason = StopReason::max_iters;
};

struct StepOutcome {
  TraceRecord record;
  bool numeric_ok = true;
};

/// Clock used for trace timestamps, returning seconds. Injectable so runs
/// can produce byte-reproducible traces; empty means wall clock.
using Clock = std::function<double()>;

/// Spectral initialization: U0 V0 is the best rank-r approximation of m
/// with the singular values split evenly between the factors, X0 = U0 V0,
/// W0 = m on the positive entries and min(0, X0) on the zero entries.
NmdState initialize(const Matrix& m, const NmdParams& params);

/// W half-step and extrapolation. Only zero-pattern entries move; entries
/// on the positive pattern are pinned to m bitwise.
void update_w(NmdState& s, const Matrix& m, double alpha);

/// Ridge solve for U against V^k, then U <- beta U_half + (1 - beta) U.
void update_u(NmdState& s, double lambda, double beta);

/// Ridge solve for V against the updated U, then the same combination.
void update_v(NmdState& s, double lambda, double beta);

/// X_half = U V, then extrapolation past the previous X.
void update_x(NmdState& s, double alpha);

/// One full W, U, V, X cycle. Increments k and reports the iteration's
/// metrics; numeric_ok turns false if any iterate stopped being finite.
StepOutcome step(NmdState& s, const Matrix& m, const NmdParams& params);

/// Runs initialize plus up to max_iters steps, stopping early on the time
/// limit, on 5 consecutive relative-error changes below rel_change_tol, or
/// on numeric failure (partial trace returned).
NmdResult fit(const Matrix& m, const NmdParams& params, const Clock& clock = {});

/// ||m - max(0, x)||_F / ||m||_F. Rejects ||m||_F == 0.
double relative_error(const Matrix& m, const Matrix& x);

/// 1/2 ||w - u v||_F^2 + lambda/2 (||u||_F^2 + ||v||_F^2).
double objective(const Matrix& w, const Matrix& u, const Matrix& v,
                 double lambda);

}  // namespace relunmd

#endif
