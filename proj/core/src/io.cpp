#include "relunmd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "relunmd/errors.hpp"

namespace relunmd::io {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801u;
// Refuse IDX payloads past this many bytes; headers that multiply out
// beyond it are corrupt or hostile, not data.
constexpr std::uint64_t kMaxIdxPayload = 1ull << 40;

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& bytes,
                   std::size_t offset) {
  return (std::uint32_t(bytes[offset]) << 24) |
         (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) |
         std::uint32_t(bytes[offset + 3]);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    out.push_back(token);
  }
  return out;
}

// Strict double parse: the whole token must be consumed and the value
// finite. `where` names the offending position in thrown messages.
double parse_double(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  if (t.empty()) {
    throw IoError(where + ": empty cell");
  }
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw IoError(where + ": non-numeric value '" + t + "'");
  }
  if (!std::isfinite(value)) {
    throw IoError(where + ": non-finite value '" + t + "'");
  }
  return value;
}

long parse_long(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  long value = 0;
  const auto [ptr, ec] =
      std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || t.empty() || ptr != t.data() + t.size()) {
    throw IoError(where + ": non-integer value '" + t + "'");
  }
  return value;
}

std::string at_line(const std::string& path, std::size_t line) {
  return path + " line " + std::to_string(line);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

DataFormat sniff_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  char head[16] = {};
  in.read(head, sizeof(head));
  const std::streamsize got = in.gcount();
  if (got >= 4) {
    const auto b = [&](int i) {
      return std::uint32_t(static_cast<unsigned char>(head[i]));
    };
    const std::uint32_t magic =
        (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
    if (magic == kIdxImageMagic || magic == kIdxLabelMagic) {
      return DataFormat::idx;
    }
  }
  if (got >= 14 &&
      lower(std::string(head, 14)) == "%%matrixmarket") {
    return DataFormat::matrix_market;
  }
  return DataFormat::csv;
}

Matrix load_dataset(const DatasetHandle& handle) {
  const DataFormat sniffed = sniff_format(handle.path);
  if (handle.format && *handle.format != sniffed) {
    const auto name = [](DataFormat f) {
      switch (f) {
        case DataFormat::idx:
          return "idx";
        case DataFormat::matrix_market:
          return "matrix_market";
        case DataFormat::csv:
          return "csv";
      }
      return "unknown";
    };
    throw IoError(handle.path + ": declared format " + name(*handle.format) +
                  " but the file looks like " + name(sniffed));
  }
  Matrix m;
  switch (sniffed) {
    case DataFormat::idx:
      m = read_idx(handle.path, handle.normalization);
      break;
    case DataFormat::matrix_market:
      m = read_matrix_market(handle.path);
      break;
    case DataFormat::csv:
      m = read_csv(handle.path);
      break;
  }
  if (handle.orientation == Orientation::samples_as_cols) {
    m.transposeInPlace();
  }
  return m;
}

Matrix read_idx(const std::string& path, Normalization normalization) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  if (bytes.size() < 4) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) + " (need 4 magic bytes)");
  }
  const std::uint32_t magic = be32(bytes, 0);
  if (magic != kIdxImageMagic) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw IoError(path + ": bad IDX image magic " + hex +
                  " at byte 0 (want 0x00000803)");
  }
  if (bytes.size() < 16) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) +
                  " (need a 16-byte IDX3 header)");
  }
  const std::uint64_t count = be32(bytes, 4);
  const std::uint64_t rows = be32(bytes, 8);
  const std::uint64_t cols = be32(bytes, 12);
  const std::uint64_t per_image = rows * cols;  // each < 2^32, fits
  if (per_image != 0 && count > kMaxIdxPayload / per_image) {
    throw IoError(path + ": dimension overflow " + std::to_string(count) +
                  " x " + std::to_string(rows) + " x " +
                  std::to_string(cols) + " in the header at byte 4");
  }
  const std::uint64_t total = count * per_image;
  const std::uint64_t expected = 16 + total;
  if (bytes.size() < expected) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) + " (header promises " +
                  std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw IoError(path + ": trailing data at byte " +
                  std::to_string(expected) + " (header promises " +
                  std::to_string(expected) + " bytes)");
  }

  // Divide rather than multiply by a reciprocal: b / 255.0 is the exact
  // double every writer of k/255-grid data produces.
  const double divisor =
      normalization == Normalization::unit_scale ? 255.0 : 1.0;
  Matrix m(static_cast<Index>(count), static_cast<Index>(per_image));
  for (std::uint64_t i = 0; i < count; ++i) {
    const unsigned char* image = bytes.data() + 16 + i * per_image;
    for (std::uint64_t k = 0; k < per_image; ++k) {
      m(static_cast<Index>(i), static_cast<Index>(k)) = image[k] / divisor;
    }
  }
  return m;
}

std::vector<int> read_idx_labels(const std::string& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  if (bytes.size() < 4) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) + " (need 4 magic bytes)");
  }
  const std::uint32_t magic = be32(bytes, 0);
  if (magic != kIdxLabelMagic) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw IoError(path + ": bad IDX label magic " + hex +
                  " at byte 0 (want 0x00000801)");
  }
  if (bytes.size() < 8) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) +
                  " (need an 8-byte IDX1 header)");
  }
  const std::uint64_t count = be32(bytes, 4);
  const std::uint64_t expected = 8 + count;
  if (bytes.size() < expected) {
    throw IoError(path + ": truncated at byte " +
                  std::to_string(bytes.size()) + " (header promises " +
                  std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw IoError(path + ": trailing data at byte " +
                  std::to_string(expected) + " (header promises " +
                  std::to_string(expected) + " bytes)");
  }
  std::vector<int> labels(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    labels[i] = bytes[8 + i];
  }
  return labels;
}

Matrix subset_per_class(const Matrix& m, const std::vector<int>& labels,
                        Index per_class) {
  if (static_cast<Index>(labels.size()) != m.rows()) {
    throw DimensionError("subset_per_class: " +
                         std::to_string(labels.size()) + " labels vs " +
                         std::to_string(m.rows()) + " rows");
  }
  if (per_class < 0) {
    throw InvalidArgument("subset_per_class: per_class must be >= 0");
  }
  // std::map keeps label values ascending; row order within a class is the
  // original order because we scan top to bottom.
  std::map<int, std::vector<Index>> by_class;
  for (Index i = 0; i < m.rows(); ++i) {
    auto& rows = by_class[labels[static_cast<std::size_t>(i)]];
    if (static_cast<Index>(rows.size()) < per_class) {
      rows.push_back(i);
    }
  }
  for (const auto& [label, rows] : by_class) {
    if (static_cast<Index>(rows.size()) < per_class) {
      throw InvalidArgument("subset_per_class: class " +
                            std::to_string(label) + " has only " +
                            std::to_string(rows.size()) + " of " +
                            std::to_string(per_class) + " samples");
    }
  }
  Matrix out(static_cast<Index>(by_class.size()) * per_class, m.cols());
  Index next = 0;
  for (const auto& [label, rows] : by_class) {
    for (const Index row : rows) {
      out.row(next++) = m.row(row);
    }
  }
  return out;
}

Matrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw IoError(at_line(path, 1) + ": missing MatrixMarket banner");
  }
  ++line_no;
  const std::vector<std::string> banner = split_whitespace(lower(line));
  if (banner.size() < 5 || banner[0] != "%%matrixmarket" ||
      banner[1] != "matrix" ||
      (banner[2] != "array" && banner[2] != "coordinate") ||
      banner[3] != "real" || banner[4] != "general") {
    throw IoError(at_line(path, 1) + ": unsupported banner '" + trim(line) +
                  "' (need matrix array|coordinate real general)");
  }
  const bool coordinate = banner[2] == "coordinate";

  // Size line: first non-comment, non-blank line after the banner.
  std::vector<std::string> size_tokens;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '%') {
      continue;
    }
    size_tokens = split_whitespace(t);
    break;
  }
  const std::size_t expected_sizes = coordinate ? 3 : 2;
  if (size_tokens.size() != expected_sizes) {
    throw IoError(at_line(path, line_no) + ": expected " +
                  std::to_string(expected_sizes) + " size fields");
  }
  const long rows = parse_long(size_tokens[0], at_line(path, line_no));
  const long cols = parse_long(size_tokens[1], at_line(path, line_no));
  if (rows < 0 || cols < 0) {
    throw IoError(at_line(path, line_no) + ": negative matrix size");
  }

  Matrix m = Matrix::Zero(rows, cols);
  if (coordinate) {
    const long nnz = parse_long(size_tokens[2], at_line(path, line_no));
    if (nnz < 0) {
      throw IoError(at_line(path, line_no) + ": negative entry count");
    }
    long seen = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '%') {
        continue;
      }
      const std::vector<std::string> tokens = split_whitespace(t);
      if (seen == nnz) {
        throw IoError(at_line(path, line_no) + ": more than " +
                      std::to_string(nnz) + " entries");
      }
      if (tokens.size() != 3) {
        throw IoError(at_line(path, line_no) +
                      ": expected 'row col value'");
      }
      const long i = parse_long(tokens[0], at_line(path, line_no));
      const long j = parse_long(tokens[1], at_line(path, line_no));
      if (i < 1 || i > rows || j < 1 || j > cols) {
        throw IoError(at_line(path, line_no) + ": index (" +
                      std::to_string(i) + ", " + std::to_string(j) +
                      ") outside 1-based bounds " + std::to_string(rows) +
                      " x " + std::to_string(cols));
      }
      m(i - 1, j - 1) += parse_double(tokens[2], at_line(path, line_no));
      ++seen;
    }
    if (seen != nnz) {
      throw IoError(path + ": truncated: " + std::to_string(seen) + " of " +
                    std::to_string(nnz) + " entries by line " +
                    std::to_string(line_no));
    }
  } else {
    const long total = rows * cols;
    long seen = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '%') {
        continue;
      }
      for (const std::string& token : split_whitespace(t)) {
        if (seen == total) {
          throw IoError(at_line(path, line_no) + ": more than " +
                        std::to_string(total) + " values");
        }
        // Array data is stored column-major.
        m(seen % std::max(rows, 1L), seen / std::max(rows, 1L)) =
            parse_double(token, at_line(path, line_no));
        ++seen;
      }
    }
    if (seen != total) {
      throw IoError(path + ": truncated: " + std::to_string(seen) + " of " +
                    std::to_string(total) + " values by line " +
                    std::to_string(line_no));
    }
  }
  return m;
}

void write_matrix_market(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  char buffer[64];
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.17g\n", m(i, j));
      out << buffer;
    }
  }
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

Matrix read_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) {
      continue;
    }
    const std::vector<std::string> cells = split(line, ',');
    if (width < 0) {
      width = static_cast<Index>(cells.size());
    } else if (static_cast<Index>(cells.size()) != width) {
      throw IoError(at_line(path, line_no) + ": " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(width));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row.push_back(parse_double(
          cells[c],
          at_line(path, line_no) + " column " + std::to_string(c + 1)));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    return Matrix(0, 0);
  }
  Matrix m(static_cast<Index>(rows.size()), width);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

void write_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  char buffer[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", m(i, j));
      out << buffer << (j + 1 == m.cols() ? "\n" : ",");
    }
  }
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

void write_trace_csv(const std::string& path,
                     const ConvergenceTrace& trace) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "k,seconds,rel_error,objective\n";
  char buffer[160];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(buffer, sizeof(buffer), "%d,%.9g,%.12g,%.12g\n", r.k,
                  r.seconds, r.rel_error, r.objective);
    out << buffer;
  }
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

ConvergenceTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(at_line(path, 1) + ": missing trace header");
  }
  const std::string header = trim(line);
  bool with_tol = false;
  if (header == "k,seconds,rel_error,objective,tol") {
    with_tol = true;
  } else if (header != "k,seconds,rel_error,objective") {
    throw IoError(at_line(path, 1) + ": unexpected trace header '" + header +
                  "'");
  }
  const std::size_t expected = with_tol ? 5 : 4;

  ConvergenceTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> cells = split(trim(line), ',');
    if (cells.size() != expected) {
      throw IoError(at_line(path, line_no) + ": " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(expected));
    }
    TraceRecord r;
    r.k = static_cast<int>(parse_long(cells[0], at_line(path, line_no)));
    r.seconds = parse_double(cells[1], at_line(path, line_no));
    r.rel_error = parse_double(cells[2], at_line(path, line_no));
    r.objective = parse_double(cells[3], at_line(path, line_no));
    r.rel_error_half = r.rel_error;
    trace.records.push_back(r);
  }
  return trace;
}

void write_pgm(const std::string& path, const ImageBuffer& image) {
  if (image.width < 1 || image.height < 1) {
    throw InvalidArgument("write_pgm: image dimensions must be >= 1");
  }
  if (image.pixels.size() !=
      static_cast<std::size_t>(image.width) * image.height) {
    throw DimensionError("write_pgm: " + std::to_string(image.pixels.size()) +
                         " pixels for " + std::to_string(image.width) + " x " +
                         std::to_string(image.height));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

}  // namespace relunmd::io
