#ifndef RELUNMD_IO_HPP
#define RELUNMD_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "relunmd/compress.hpp"
#include "relunmd/matrix.hpp"
#include "relunmd/solver.hpp"

namespace relunmd::io {

// On-disk formats used by the experiment pipelines. All readers reject
// malformed input with a byte or line position instead of truncating, and
// never produce NaN/Inf entries. Writers print 17 significant digits so
// write-then-read round trips are lossless.

enum class DataFormat { idx, matrix_market, csv };
enum class Orientation { samples_as_rows, samples_as_cols };
enum class Normalization { raw, unit_scale };

struct DatasetHandle {
  std::string path;
  std::optional<DataFormat> format;  // unset: trust the sniffed format
  Orientation orientation = Orientation::samples_as_rows;
  Normalization normalization = Normalization::unit_scale;
};

/// Detects the format from magic bytes: big-endian 0x00000803/0x00000801
/// means idx, a %%MatrixMarket banner means matrix_market, anything else
/// is treated as csv.
DataFormat sniff_format(const std::string& path);

/// Reads per handle, erroring if a declared format contradicts the sniffed
/// one. samples_as_cols transposes after reading so samples end up as rows.
Matrix load_dataset(const DatasetHandle& handle);

/// IDX3 image file (magic 0x00000803, big-endian): n_images x (rows*cols)
/// matrix, one flattened row-major image per row. unit_scale divides the
/// pixel bytes by 255.
Matrix read_idx(const std::string& path,
                Normalization normalization = Normalization::unit_scale);

/// IDX1 label file (magic 0x00000801).
std::vector<int> read_idx_labels(const std::string& path);

/// First per_class rows of each label value, label values in ascending
/// order, original row order preserved inside a class.
Matrix subset_per_class(const Matrix& m, const std::vector<int>& labels,
                        Index per_class);

/// MatrixMarket, "real general" only, array and coordinate formats.
Matrix read_matrix_market(const std::string& path);

/// Writes array format, column-major, 17 significant digits.
void write_matrix_market(const std::string& path, const Matrix& m);

/// Headerless comma-separated values; skip_header drops one leading row.
Matrix read_csv(const std::string& path, bool skip_header = false);

void write_csv(const std::string& path, const Matrix& m);

/// Schema "k,seconds,rel_error,objective"; rel_error carries 12
/// significant digits.
void write_trace_csv(const std::string& path, const ConvergenceTrace& trace);

/// Accepts the schema above, with or without a trailing ",tol" column
/// (the tol values are not kept).
ConvergenceTrace read_trace_csv(const std::string& path);

/// Binary PGM (P5), maxval 255.
void write_pgm(const std::string& path, const ImageBuffer& image);

}  // namespace relunmd::io

#endif
