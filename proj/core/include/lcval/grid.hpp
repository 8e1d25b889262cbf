#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcval {

struct CellIndex {
  int row = 0;
  int col = 0;

  auto operator<=>(const CellIndex&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

// Whole-cell translation of a tile in the world frame: dx cells east,
// dy cells north.
struct TileShift {
  int dx = 0;
  int dy = 0;

  bool operator==(const TileShift&) const = default;
};

inline constexpr int kDefaultMaxShift = 3;

// Rectangular grid of integer class codes. The origin is the outer corner
// of the top-left cell; rows grow southwards, columns eastwards. Immutable
// once constructed.
class RasterGrid {
 public:
  RasterGrid(int rows, int cols, double origin_x, double origin_y,
             double cell_size, int nodata, std::vector<int> values);

  static RasterGrid filled(int rows, int cols, double origin_x,
                           double origin_y, double cell_size, int nodata,
                           int value);
  // Construction from the lower-left corner, as stored in grid files.
  static RasterGrid from_lower_left(int rows, int cols, double xllcorner,
                                    double yllcorner, double cell_size,
                                    int nodata, std::vector<int> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return yll_ + rows_ * cell_size_; }
  double yllcorner() const { return yll_; }
  double cell_size() const { return cell_size_; }
  int nodata() const { return nodata_; }
  std::span<const int> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool contains(CellIndex idx) const {
    return idx.row >= 0 && idx.row < rows_ && idx.col >= 0 && idx.col < cols_;
  }
  int at(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * cols_ + col];
  }
  int at(CellIndex idx) const { return at(idx.row, idx.col); }
  bool is_nodata(CellIndex idx) const { return at(idx) == nodata_; }

  Point cell_center(CellIndex idx) const;
  // Outer extent of the cells.
  Bounds bounds() const;
  // Outer extent grown by half a cell on every side: the region in which
  // nearest-center lookup is defined.
  Bounds lookup_bounds() const;
  // Same geometry (shape, origin, cell size).
  bool same_geometry(const RasterGrid& other) const;

  bool operator==(const RasterGrid&) const = default;

 private:
  int rows_;
  int cols_;
  // The lower-left y is stored so that file round-trips are exact.
  double origin_x_;
  double yll_;
  double cell_size_;
  int nodata_;
  std::vector<int> values_;
};

// Header-then-rows text format (ncols, nrows, xllcorner, yllcorner,
// cellsize, NODATA_value). Errors carry the offending line number.
RasterGrid parse_grid(std::string_view text);
std::string write_grid(const RasterGrid& grid);

RasterGrid read_grid_file(const std::filesystem::path& path);
void write_grid_file(const std::filesystem::path& path, const RasterGrid& grid);

// Nearest cell center to (x, y); ties go to the smaller row, then the
// smaller column. Throws kOutOfExtent outside lookup_bounds().
CellIndex world_to_cell(const RasterGrid& grid, double x, double y);

struct OffsetLayer {
  std::reference_wrapper<const RasterGrid> grid;
  int offset = 0;
};

// Each output cell takes raw + offset from the first layer (argument order)
// that has data there. Layers must share geometry and their shifted code
// ranges must be pairwise disjoint. The output uses the first layer's
// nodata code.
RasterGrid merge_layers(std::span<const OffsetLayer> layers);

// Mosaic of tiles on the reference tile's cell lattice after applying the
// per-tile shifts. Overlaps resolve to the reference tile, then list order;
// a tile's nodata cells never cover another tile's data.
RasterGrid mosaic(std::span<const RasterGrid> tiles, std::size_t reference,
                  std::span<const TileShift> shifts,
                  int max_shift = kDefaultMaxShift);

}  // namespace lcval
