#ifndef RELUNMD_COMPRESS_HPP
#define RELUNMD_COMPRESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "relunmd/nmf.hpp"
#include "relunmd/solver.hpp"

namespace relunmd {

enum class CompressMethod { nmd_tm, tsvd };

const char* to_string(CompressMethod method);

struct CompressionReport {
  CompressMethod method = CompressMethod::nmd_tm;
  Index rank = 0;
  double basis_rel_error = 0.0;
  double tol_nmf = 0.0;
  double seconds = 0.0;
};

struct BasisCompression {
  Matrix approx;  // what replaces the basis: max(0, UV) for nmd_tm, the
                  // raw rank-r reconstruction (possibly negative) for tsvd
  CompressionReport report;  // tol_nmf and seconds left for the caller
};

/// Compresses a nonnegative basis to rank r with the chosen method and
/// reports ||basis - approx||_F / ||basis||_F.
BasisCompression compress_basis(const Matrix& u_basis, Index r,
                                CompressMethod method,
                                const NmdParams& params);

/// Downstream factorization error after the basis is replaced: clips the
/// approximation to u_hat = max(0, u_approx), refits nonnegative
/// coefficients by NNLS, returns ||m - u_hat v_hat||_F / ||m||_F.
double tol_nmf(const Matrix& m, const Matrix& u_approx, int sweeps);

/// 8-bit grayscale raster, row-major.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Tiles each basis column (reshaped column-major to height x width) into
/// a grid, row-major, with 1-pixel black separators. Tiles are rescaled to
/// [0, 255] individually; a constant tile maps to 0. Unused trailing grid
/// cells stay black.
ImageBuffer render_montage(const Matrix& basis, int image_height,
                           int image_width, int grid_cols);

void write_compression_report_csv(const std::string& path,
                                  const std::vector<CompressionReport>& rows);

}  // namespace relunmd

#endif
