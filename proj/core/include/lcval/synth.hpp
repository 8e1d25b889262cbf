#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lcval/grid.hpp"

namespace lcval {

struct ClassFraction {
  int code = 0;
  double fraction = 0.0;
};

// Seeded region-growing landscape. Class cell counts are the largest-
// remainder apportionment of the targets, so empirical fractions are exact
// up to one cell. blob_scale is the typical blob side in cells: each class
// starts from about count / blob_scale^2 seeds.
RasterGrid generate_landscape(std::uint64_t seed, int rows, int cols,
                              double cell_size,
                              std::span<const ClassFraction> mix,
                              double blob_scale, int nodata = -1);

// Map-class probabilities per truth class, plus a whole-cell shift and a
// rate of nodata cells.
struct DegradationSpec {
  std::vector<int> classes;                 // row and column codes
  std::vector<std::vector<double>> kernel;  // row-stochastic
  TileShift shift;
  double unclassified_rate = 0.0;

  // Throws kInvalidArgument for non-square, negative or non-normalized
  // kernels or a rate outside [0,1].
  void validate() const;

  static DegradationSpec identity(std::span<const int> classes);
  // P(correct) on the diagonal, the rest spread evenly off-diagonal.
  static DegradationSpec uniform(std::span<const int> classes,
                                 double correct);
};

// Structured config document (JSON): {"classes": [...], "kernel": [[...]],
// "shift": [dx, dy], "unclassified_rate": r}.
DegradationSpec parse_degradation_spec(std::string_view text);

// Output cell (r, c) takes the truth cell that the shift moves onto it and
// draws its map class from that truth class's kernel row; cells shifted in
// from outside, truth nodata and unclassified draws become nodata.
RasterGrid degrade(const RasterGrid& truth, const DegradationSpec& spec,
                   std::uint64_t seed);

}  // namespace lcval
