#include "relunmd/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace relunmd {

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iters:
      return "max_iters";
    case StopReason::time_limit:
      return "time_limit";
    case StopReason::rel_change:
      return "rel_change";
    case StopReason::numeric_failure:
      return "numeric_failure";
  }
  return "unknown";
}

void NmdParams::validate(Index rows, Index cols) const {
  if (rank < 1) {
    throw InvalidArgument("params: rank must be positive");
  }
  if (rank > std::min(rows, cols)) {
    throw InvalidArgument("params: rank " + std::to_string(rank) +
                          " exceeds min(" + std::to_string(rows) + ", " +
                          std::to_string(cols) + ")");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw InvalidArgument("params: alpha must lie in [0, 1)");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw InvalidArgument("params: beta must lie in (0, 1]");
  }
  if (!(lambda >= 0.0)) {
    throw InvalidArgument("params: lambda must be >= 0");
  }
  if (max_iters < 0) {
    throw InvalidArgument("params: max_iters must be >= 0");
  }
  if (time_limit_seconds && !(*time_limit_seconds >= 0.0)) {
    throw InvalidArgument("params: time limit must be >= 0");
  }
  if (rel_change_tol && !(*rel_change_tol >= 0.0)) {
    throw InvalidArgument("params: rel_change_tol must be >= 0");
  }
}

double relative_error(const Matrix& m, const Matrix& x) {
  if (m.rows() != x.rows() || m.cols() != x.cols()) {
    throw DimensionError("relative_error: m " + shape_string(m) + " vs x " +
                         shape_string(x));
  }
  const double denom = m.norm();
  if (denom == 0.0) {
    throw InvalidArgument("relative_error: ||m||_F == 0");
  }
  return (m - x.cwiseMax(0.0)).norm() / denom;
}

double objective(const Matrix& w, const Matrix& u, const Matrix& v,
                 double lambda) {
  if (u.cols() != v.rows() || w.rows() != u.rows() || w.cols() != v.cols()) {
    throw DimensionError("objective: shapes w " + shape_string(w) + ", u " +
                         shape_string(u) + ", v " + shape_string(v) +
                         " do not conform");
  }
  return 0.5 * (w - u * v).squaredNorm() +
         0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

namespace {

// Same value as objective(), reusing an already-computed product u*v.
double objective_with_product(const Matrix& w, const Matrix& product,
                              const Matrix& u, const Matrix& v,
                              double lambda) {
  return 0.5 * (w - product).squaredNorm() +
         0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

}  // namespace

NmdState initialize(const Matrix& m, const NmdParams& params) {
  params.validate(m.rows(), m.cols());
  NmdState s;
  s.pattern = support_pattern(m);

  SvdOptions svd_opts;
  svd_opts.seed = params.seed;
  const SvdFactors f = truncated_svd(m, params.rank, svd_opts);

  // Balanced split: both factors absorb sqrt(sigma), so their norms match.
  const Vector root = f.sigma.cwiseSqrt();
  s.u = f.u * root.asDiagonal();
  s.v = root.asDiagonal() * f.vt;
  s.x.noalias() = s.u * s.v;

  s.w = m;
  for (const Index idx : s.pattern.zero_idx) {
    s.w(idx) = std::min(0.0, s.x(idx));
  }

  s.w_half = s.w;
  s.u_half = s.u;
  s.v_half = s.v;
  s.x_half = s.x;
  s.k = 0;
  return s;
}

void update_w(NmdState& s, const Matrix& m, double alpha) {
  if (s.w.rows() != m.rows() || s.w.cols() != m.cols()) {
    throw DimensionError("update_w: state w " + shape_string(s.w) +
                         " vs m " + shape_string(m));
  }
  // Entries on the positive pattern never move: w and w_half hold M there
  // from initialization on, so the feasibility max(0, w_half) == M is exact.
  for (const Index idx : s.pattern.zero_idx) {
    const double half = std::min(0.0, s.x(idx));
    s.w_half(idx) = half;
    s.w(idx) = half + alpha * (half - s.w(idx));
  }
}

void update_u(NmdState& s, double lambda, double beta) {
  s.u_half = ridge_solve_right(s.w, s.v, lambda);
  s.u = beta * s.u_half + (1.0 - beta) * s.u;
}

void update_v(NmdState& s, double lambda, double beta) {
  s.v_half = ridge_solve_left(s.w, s.u, lambda);
  s.v = beta * s.v_half + (1.0 - beta) * s.v;
}

void update_x(NmdState& s, double alpha) {
  s.x_half.noalias() = s.u * s.v;
  s.x = s.x_half + alpha * (s.x_half - s.x);
}

StepOutcome step(NmdState& s, const Matrix& m, const NmdParams& params) {
  update_w(s, m, params.alpha);
  update_u(s, params.lambda, params.beta);
  update_v(s, params.lambda, params.beta);
  update_x(s, params.alpha);
  s.k += 1;

  StepOutcome out;
  out.record.k = s.k;
  out.numeric_ok =
      is_finite(s.w) && is_finite(s.u) && is_finite(s.v) && is_finite(s.x);
  if (out.numeric_ok) {
    out.record.rel_error = relative_error(m, s.x);
    out.record.rel_error_half = relative_error(m, s.x_half);
    out.record.objective =
        objective_with_product(s.w, s.x_half, s.u, s.v, params.lambda);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.record.rel_error = nan;
    out.record.rel_error_half = nan;
    out.record.objective = nan;
  }
  return out;
}

namespace {

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

}  // namespace

NmdResult fit(const Matrix& m, const NmdParams& params, const Clock& clock) {
  params.validate(m.rows(), m.cols());
  if (m.size() == 0 || m.norm() == 0.0) {
    throw InvalidArgument("fit: the data matrix has zero Frobenius norm");
  }
  const Clock clk = clock ? clock : Clock(&wall_seconds);
  const double t0 = clk();

  NmdState s = initialize(m, params);

  NmdResult result;
  TraceRecord base;
  base.k = 0;
  base.rel_error = relative_error(m, s.x);
  base.rel_error_half = base.rel_error;  // x == x_half at initialization
  base.objective =
      objective_with_product(s.w, s.x, s.u, s.v, params.lambda);
  base.seconds = clk() - t0;
  result.trace.records.push_back(base);

  StopReason reason = StopReason::max_iters;
  double prev_error = base.rel_error;
  int small_changes = 0;

  for (int k = 1; k <= params.max_iters; ++k) {
    StepOutcome out = step(s, m, params);
    if (!out.numeric_ok) {
      reason = StopReason::numeric_failure;
      break;
    }
    out.record.seconds = clk() - t0;
    result.trace.records.push_back(out.record);

    if (params.rel_change_tol) {
      if (std::abs(out.record.rel_error - prev_error) <=
          *params.rel_change_tol) {
        ++small_changes;
      } else {
        small_changes = 0;
      }
      if (small_changes >= 5) {
        reason = StopReason::rel_change;
        break;
      }
    }
    prev_error = out.record.rel_error;

    if (params.time_limit_seconds &&
        clk() - t0 >= *params.time_limit_seconds) {
      reason = StopReason::time_limit;
      break;
    }
  }

  result.u = s.u;
  result.v = s.v;
  result.stop_reason = reason;
  return result;
}

}  // namespace relunmd
