#include "lcval/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval {

namespace {

std::string describe(const Bounds& b) {
  std::ostringstream ss;
  ss << "[" << b.min_x << ", " << b.max_x << "] x [" << b.min_y << ", "
     << b.max_y << "]";
  return ss.str();
}

void check_shape(int rows, int cols, double cell_size, std::size_t n_values) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs at least one row and column");
  }
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorCode::kInvalidArgument, "cell size must be positive");
  }
  if (n_values != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw Error(ErrorCode::kInvalidArgument, "value count does not match rows x cols");
  }
}

// Integer cell offset between two lattice coordinates, or nullopt when
// they are not aligned.
std::optional<long> lattice_offset(double from, double to, double cell_size) {
  const double cells = (to - from) / cell_size;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-6) return std::nullopt;
  return static_cast<long>(rounded);
}

// Splits a line into whitespace-separated tokens.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

}  // namespace

RasterGrid::RasterGrid(int rows, int cols, double origin_x, double origin_y,
                       double cell_size, int nodata, std::vector<int> values)
    : rows_(rows),
      cols_(cols),
      origin_x_(origin_x),
      yll_(origin_y - rows * cell_size),
      cell_size_(cell_size),
      nodata_(nodata),
      values_(std::move(values)) {
  check_shape(rows, cols, cell_size, values_.size());
}

RasterGrid RasterGrid::filled(int rows, int cols, double origin_x,
                              double origin_y, double cell_size, int nodata,
                              int value) {
  check_shape(rows, cols, cell_size,
              static_cast<std::size_t>(std::max(rows, 0)) *
                  static_cast<std::size_t>(std::max(cols, 0)));
  return RasterGrid(rows, cols, origin_x, origin_y, cell_size, nodata,
                    std::vector<int>(static_cast<std::size_t>(rows) * cols, value));
}

RasterGrid RasterGrid::from_lower_left(int rows, int cols, double xllcorner,
                                       double yllcorner, double cell_size,
                                       int nodata, std::vector<int> values) {
  RasterGrid grid(rows, cols, xllcorner, yllcorner + rows * cell_size,
                  cell_size, nodata, std::move(values));
  grid.yll_ = yllcorner;
  return grid;
}

Point RasterGrid::cell_center(CellIndex idx) const {
  return {origin_x_ + (idx.col + 0.5) * cell_size_,
          origin_y() - (idx.row + 0.5) * cell_size_};
}

Bounds RasterGrid::bounds() const {
  return {origin_x_, yll_, origin_x_ + cols_ * cell_size_, origin_y()};
}

Bounds RasterGrid::lookup_bounds() const {
  const double half = cell_size_ / 2.0;
  const Bounds b = bounds();
  return {b.min_x - half, b.min_y - half, b.max_x + half, b.max_y + half};
}

bool RasterGrid::same_geometry(const RasterGrid& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ &&
         origin_x_ == other.origin_x_ && yll_ == other.yll_ &&
         cell_size_ == other.cell_size_;
}

RasterGrid parse_grid(std::string_view text) {
  static constexpr std::string_view kKeys[] = {
      "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"};

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  // Trailing blank lines are tolerated.
  while (!lines.empty() && tokens(lines.back()).empty()) lines.pop_back();

  std::string_view header_values[6];
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t line_no = i + 1;
    if (i >= lines.size()) {
      throw Error(ErrorCode::kParse, "missing header key '" + std::string(kKeys[i]) +
                                         "'" + at_line(line_no));
    }
    const auto toks = tokens(lines[i]);
    if (toks.size() != 2 || toks[0] != kKeys[i]) {
      throw Error(ErrorCode::kParse, "malformed header, expected '" +
                                         std::string(kKeys[i]) + " <value>'" +
                                         at_line(line_no));
    }
    header_values[i] = toks[1];
  }

  auto header_int = [&](std::size_t i) {
    try {
      return csv::parse_int(header_values[i], i + 1);
    } catch (const Error&) {
      throw Error(ErrorCode::kParse, "header '" + std::string(kKeys[i]) +
                                         "' is not an integer" + at_line(i + 1));
    }
  };
  auto header_double = [&](std::size_t i) {
    try {
      return csv::parse_double(header_values[i], i + 1);
    } catch (const Error&) {
      throw Error(ErrorCode::kParse, "header '" + std::string(kKeys[i]) +
                                         "' is not a number" + at_line(i + 1));
    }
  };

  const std::int64_t ncols = header_int(0);
  const std::int64_t nrows = header_int(1);
  const double xll = header_double(2);
  const double yll = header_double(3);
  const double cellsize = header_double(4);
  const std::int64_t nodata = header_int(5);
  constexpr std::int64_t kMaxDim = std::numeric_limits<int>::max();
  if (ncols < 1 || ncols > kMaxDim) {
    throw Error(ErrorCode::kParse, "ncols must be positive" + at_line(1));
  }
  if (nrows < 1 || nrows > kMaxDim) {
    throw Error(ErrorCode::kParse, "nrows must be positive" + at_line(2));
  }
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) {
    throw Error(ErrorCode::kParse, "cellsize must be positive" + at_line(5));
  }
  if (nodata < std::numeric_limits<int>::min() || nodata > kMaxDim) {
    throw Error(ErrorCode::kParse, "NODATA_value out of range" + at_line(6));
  }

  std::vector<int> values;
  values.reserve(static_cast<std::size_t>(std::min<std::int64_t>(ncols * nrows, 1 << 22)));
  for (std::int64_t r = 0; r < nrows; ++r) {
    const std::size_t idx = 6 + static_cast<std::size_t>(r);
    const std::size_t line_no = idx + 1;
    if (idx >= lines.size()) {
      throw Error(ErrorCode::kParse, "row count mismatch: expected " +
                                         std::to_string(nrows) + " rows, got " +
                                         std::to_string(r) + at_line(line_no));
    }
    const auto toks = tokens(lines[idx]);
    if (static_cast<std::int64_t>(toks.size()) != ncols) {
      throw Error(ErrorCode::kParse, "row length mismatch" + at_line(line_no));
    }
    for (auto tok : toks) {
      int v = 0;
      const char* first = tok.data();
      const char* last = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::kParse, "non-integer cell value '" + std::string(tok) +
                                           "'" + at_line(line_no));
      }
      values.push_back(v);
    }
  }
  if (lines.size() > 6 + static_cast<std::size_t>(nrows)) {
    throw Error(ErrorCode::kParse, "row count mismatch: more than " +
                                       std::to_string(nrows) + " rows" +
                                       at_line(7 + static_cast<std::size_t>(nrows)));
  }
  return RasterGrid::from_lower_left(static_cast<int>(nrows), static_cast<int>(ncols),
                                     xll, yll, cellsize, static_cast<int>(nodata),
                                     std::move(values));
}

std::string write_grid(const RasterGrid& grid) {
  std::string out;
  out.reserve(grid.size() * 4 + 128);
  out += "ncols " + std::to_string(grid.cols()) + "\n";
  out += "nrows " + std::to_string(grid.rows()) + "\n";
  out += "xllcorner " + csv::format_double(grid.origin_x()) + "\n";
  out += "yllcorner " + csv::format_double(grid.yllcorner()) + "\n";
  out += "cellsize " + csv::format_double(grid.cell_size()) + "\n";
  out += "NODATA_value " + std::to_string(grid.nodata()) + "\n";
  char buf[16];
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (c) out += ' ';
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, grid.at(r, c));
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

RasterGrid read_grid_file(const std::filesystem::path& path) {
  try {
    return parse_grid(csv::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_grid_file(const std::filesystem::path& path, const RasterGrid& grid) {
  csv::write_file(path, write_grid(grid));
}

CellIndex world_to_cell(const RasterGrid& grid, double x, double y) {
  const Bounds lb = grid.lookup_bounds();
  if (!lb.contains(x, y)) {
    std::ostringstream ss;
    ss << "point (" << x << ", " << y << ") outside lookup bounds " << describe(lb);
    throw Error(ErrorCode::kOutOfExtent, ss.str());
  }
  const double u = (x - grid.origin_x()) / grid.cell_size();
  const double v = (grid.origin_y() - y) / grid.cell_size();
  // Nearest center; an exact half rounds toward the smaller index.
  const int col = static_cast<int>(std::ceil(u - 1.0));
  const int row = static_cast<int>(std::ceil(v - 1.0));
  return {std::clamp(row, 0, grid.rows() - 1), std::clamp(col, 0, grid.cols() - 1)};
}

RasterGrid merge_layers(std::span<const OffsetLayer> layers) {
  if (layers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "merge needs at least one layer");
  }
  const RasterGrid& first = layers.front().grid.get();

  struct Range {
    long lo;
    long hi;
    std::size_t layer;
  };
  std::vector<Range> ranges;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const RasterGrid& g = layers[i].grid.get();
    if (!g.same_geometry(first)) {
      throw Error(ErrorCode::kGeometryMismatch,
                  "layer " + std::to_string(i) + " geometry differs from layer 0");
    }
    long lo = std::numeric_limits<long>::max();
    long hi = std::numeric_limits<long>::min();
    for (int v : g.values()) {
      if (v == g.nodata()) continue;
      lo = std::min<long>(lo, v);
      hi = std::max<long>(hi, v);
    }
    if (lo > hi) continue;  // no data at all
    const long off = layers[i].offset;
    if (first.nodata() >= lo + off && first.nodata() <= hi + off) {
      throw Error(ErrorCode::kOverlappingCodes,
                  "layer " + std::to_string(i) +
                      " shifted codes include the output nodata value");
    }
    ranges.push_back({lo + off, hi + off, i});
  }
  for (std::size_t a = 0; a < ranges.size(); ++a) {
    for (std::size_t b = a + 1; b < ranges.size(); ++b) {
      if (ranges[a].lo <= ranges[b].hi && ranges[b].lo <= ranges[a].hi) {
        throw Error(ErrorCode::kOverlappingCodes,
                    "shifted code ranges of layers " + std::to_string(ranges[a].layer) +
                        " and " + std::to_string(ranges[b].layer) + " overlap");
      }
    }
  }

  std::vector<int> out(first.size(), first.nodata());
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    for (const auto& layer : layers) {
      const RasterGrid& g = layer.grid.get();
      const int v = g.values()[cell];
      if (v != g.nodata()) {
        out[cell] = v + layer.offset;
        break;
      }
    }
  }
  return RasterGrid::from_lower_left(first.rows(), first.cols(), first.origin_x(),
                                     first.yllcorner(), first.cell_size(),
                                     first.nodata(), std::move(out));
}

RasterGrid mosaic(std::span<const RasterGrid> tiles, std::size_t reference,
                  std::span<const TileShift> shifts, int max_shift) {
  if (tiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mosaic needs at least one tile");
  }
  if (reference >= tiles.size()) {
    throw Error(ErrorCode::kInvalidArgument, "reference tile index out of range");
  }
  if (shifts.size() != tiles.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one shift per tile is required");
  }
  if (shifts[reference] != TileShift{}) {
    throw Error(ErrorCode::kInvalidArgument, "the reference tile cannot be shifted");
  }
  const RasterGrid& ref = tiles[reference];
  const double cs = ref.cell_size();

  struct Placement {
    long row;
    long col;
  };
  std::vector<Placement> place(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const RasterGrid& t = tiles[i];
    if (std::abs(shifts[i].dx) > max_shift || std::abs(shifts[i].dy) > max_shift) {
      throw Error(ErrorCode::kInvalidArgument,
                  "shift of tile " + std::to_string(i) + " exceeds the cap of " +
                      std::to_string(max_shift) + " cells");
    }
    if (std::abs(t.cell_size() - cs) > 1e-9 * cs) {
      throw Error(ErrorCode::kGeometryMismatch,
                  "tile " + std::to_string(i) + " has an incompatible cell size");
    }
    if (t.nodata() != ref.nodata()) {
      throw Error(ErrorCode::kGeometryMismatch,
                  "tile " + std::to_string(i) + " has a different nodata code");
    }
    const auto col = lattice_offset(ref.origin_x(), t.origin_x(), cs);
    const auto row = lattice_offset(t.origin_y(), ref.origin_y(), cs);
    if (!col || !row) {
      throw Error(ErrorCode::kGeometryMismatch,
                  "tile " + std::to_string(i) + " is not aligned to the reference lattice");
    }
    place[i] = {*row - shifts[i].dy, *col + shifts[i].dx};
  }

  long min_row = place[0].row, min_col = place[0].col;
  long max_row = place[0].row + tiles[0].rows();
  long max_col = place[0].col + tiles[0].cols();
  for (std::size_t i = 1; i < tiles.size(); ++i) {
    min_row = std::min(min_row, place[i].row);
    min_col = std::min(min_col, place[i].col);
    max_row = std::max(max_row, place[i].row + tiles[i].rows());
    max_col = std::max(max_col, place[i].col + tiles[i].cols());
  }
  const long out_rows = max_row - min_row;
  const long out_cols = max_col - min_col;
  if (out_rows > std::numeric_limits<int>::max() || out_cols > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "mosaic extent too large");
  }

  std::vector<std::size_t> order{reference};
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (i != reference) order.push_back(i);
  }

  std::vector<int> out(static_cast<std::size_t>(out_rows * out_cols), ref.nodata());
  for (std::size_t i : order) {
    const RasterGrid& t = tiles[i];
    const long r0 = place[i].row - min_row;
    const long c0 = place[i].col - min_col;
    for (int r = 0; r < t.rows(); ++r) {
      for (int c = 0; c < t.cols(); ++c) {
        const int v = t.at(r, c);
        if (v == t.nodata()) continue;
        int& dst = out[static_cast<std::size_t>((r0 + r) * out_cols + c0 + c)];
        if (dst == ref.nodata()) dst = v;
      }
    }
  }
  return RasterGrid(static_cast<int>(out_rows), static_cast<int>(out_cols),
                    ref.origin_x() + min_col * cs, ref.origin_y() - min_row * cs,
                    cs, ref.nodata(), std::move(out));
}

}  // namespace lcval
