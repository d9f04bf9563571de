#include "relunmd/compress.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "relunmd/errors.hpp"
#include "relunmd/linalg.hpp"

namespace relunmd {

const char* to_string(CompressMethod method) {
  switch (method) {
    case CompressMethod::nmd_tm:
      return "nmd_tm";
    case CompressMethod::tsvd:
      return "tsvd";
  }
  return "unknown";
}

BasisCompression compress_basis(const Matrix& u_basis, Index r,
                                CompressMethod method,
                                const NmdParams& params) {
  if (u_basis.size() == 0 || u_basis.norm() == 0.0) {
    throw InvalidArgument("compress_basis: the basis has zero norm");
  }
  if (u_basis.minCoeff() < 0.0) {
    throw InvalidArgument("compress_basis: the basis has negative entries");
  }
  if (r < 1 || r > std::min(u_basis.rows(), u_basis.cols())) {
    throw InvalidArgument("compress_basis: rank " + std::to_string(r) +
                          " invalid for " + shape_string(u_basis));
  }

  BasisCompression out;
  out.report.method = method;
  out.report.rank = r;

  if (method == CompressMethod::nmd_tm) {
    NmdParams fit_params = params;
    fit_params.rank = r;
    const NmdResult result = fit(u_basis, fit_params);
    if (result.stop_reason == StopReason::numeric_failure) {
      throw Error("compress_basis: the solver diverged at rank " +
                  std::to_string(r));
    }
    out.approx = (result.u * result.v).cwiseMax(0.0);
  } else {
    SvdOptions opts;
    opts.seed = params.seed;
    const SvdFactors f = truncated_svd(u_basis, r, opts);
    out.approx = f.u * f.sigma.asDiagonal() * f.vt;
  }

  out.report.basis_rel_error = (u_basis - out.approx).norm() / u_basis.norm();
  return out;
}

double tol_nmf(const Matrix& m, const Matrix& u_approx, int sweeps) {
  const double denom = m.norm();
  if (m.size() == 0 || denom == 0.0) {
    throw InvalidArgument("tol_nmf: the data matrix has zero norm");
  }
  const Matrix u_hat = relu(u_approx);
  const Matrix v_hat = nnls_fit(m, u_hat, sweeps);
  return (m - u_hat * v_hat).norm() / denom;
}

ImageBuffer render_montage(const Matrix& basis, int image_height,
                           int image_width, int grid_cols) {
  if (image_height < 1 || image_width < 1 || grid_cols < 1) {
    throw InvalidArgument("render_montage: tile and grid sizes must be >= 1");
  }
  if (basis.cols() < 1) {
    throw InvalidArgument("render_montage: the basis has no columns");
  }
  if (basis.rows() !=
      static_cast<Index>(image_height) * static_cast<Index>(image_width)) {
    throw DimensionError("render_montage: basis rows " +
                         std::to_string(basis.rows()) + " != " +
                         std::to_string(image_height) + " x " +
                         std::to_string(image_width));
  }

  const int tiles = static_cast<int>(basis.cols());
  const int grid_rows = (tiles + grid_cols - 1) / grid_cols;

  ImageBuffer image;
  image.width = grid_cols * image_width + (grid_cols - 1);
  image.height = grid_rows * image_height + (grid_rows - 1);
  // Zero-initialized: separators and unused trailing cells stay black.
  image.pixels.assign(
      static_cast<std::size_t>(image.width) * image.height, 0);

  for (int t = 0; t < tiles; ++t) {
    const int origin_y = (t / grid_cols) * (image_height + 1);
    const int origin_x = (t % grid_cols) * (image_width + 1);
    const double lo = basis.col(t).minCoeff();
    const double hi = basis.col(t).maxCoeff();
    const double span = hi - lo;
    for (int j = 0; j < image_width; ++j) {
      for (int i = 0; i < image_height; ++i) {
        // The column holds the tile column-major: entry (i, j) at i + j*h.
        const double value =
            basis(static_cast<Index>(i) + static_cast<Index>(j) * image_height,
                  t);
        const double scaled =
            span > 0.0 ? (value - lo) / span * 255.0 : 0.0;
        const auto byte = static_cast<std::uint8_t>(
            std::clamp(std::lround(scaled), 0L, 255L));
        image.pixels[static_cast<std::size_t>(origin_y + i) * image.width +
                     origin_x + j] = byte;
      }
    }
  }
  return image;
}

void write_compression_report_csv(
    const std::string& path, const std::vector<CompressionReport>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "method,rank,basis_rel_error,tol_nmf,seconds\n";
  char buffer[128];
  for (const CompressionReport& row : rows) {
    std::snprintf(buffer, sizeof(buffer), "%s,%lld,%.12g,%.12g,%.6g\n",
                  to_string(row.method),
                  static_cast<long long>(row.rank), row.basis_rel_error,
                  row.tol_nmf, row.seconds);
    out << buffer;
  }
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

}  // namespace relunmd
