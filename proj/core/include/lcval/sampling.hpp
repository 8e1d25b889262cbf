#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcval/grid.hpp"
#include "lcval/nomenclature.hpp"

namespace lcval {

// Planning sample size for estimating a proportion:
// n = ceil(z^2 * P * (1 - P) / h^2).
struct SampleSizePlan {
  double z = 0.0;
  double p = 0.0;
  double half_width = 0.0;
  std::int64_t n = 0;
};

SampleSizePlan required_sample_size(double z, double p, double half_width);

struct Stratum {
  std::string id;
  double coverage = 0.0;  // fraction of the total area
};

// Throws kInvalidArgument unless coverages are in [0,1] and sum to 1
// within `tolerance`.
void validate_stratification(std::span<const Stratum> strata,
                             double tolerance = 1e-6);

struct AllocationEntry {
  std::string stratum_id;
  double coverage = 0.0;
  double raw_quota = 0.0;
  std::int64_t selected = 0;
};

struct Allocation {
  std::vector<AllocationEntry> entries;
  std::int64_t total = 0;

  const AllocationEntry* find(std::string_view stratum_id) const;
};

// floor(x + 0.5), tolerant of representation error just below a half.
std::int64_t round_half_up(double x);

// The largest stratum gets n_max; the others scale by coverage ratio,
// round half-up and are floored at n_min. No downward rebalancing.
Allocation allocate_max_anchored(std::span<const Stratum> strata,
                                 std::int64_t n_max, std::int64_t n_min);

// The anchor stratum gets anchor_n; the others scale by their coverage
// ratio to the anchor, round half-up and are floored at n_min.
Allocation allocate_class_anchored(std::span<const Stratum> strata,
                                   std::string_view anchor,
                                   std::int64_t anchor_n, std::int64_t n_min);

// Area fractions of each distinct non-nodata code, keyed by the code as
// decimal text, in ascending code order.
std::vector<Stratum> strata_from_codes(const RasterGrid& grid);
// Area fractions of each general class (OthersUnclassified excluded) over
// the cells that harmonize to one of the four categories.
std::vector<Stratum> strata_from_general(const RasterGrid& grid,
                                         const ClassScheme& scheme);

struct SamplePoint {
  std::int64_t sample_id = 0;
  double x = 0.0;
  double y = 0.0;
  std::string stratum_id;
  std::string source_product;

  bool operator==(const SamplePoint&) const = default;
};

// Raster codes that make up each stratum.
using StratumMembership = std::map<std::string, std::vector<int>, std::less<>>;

// Membership where each stratum id is itself a decimal raster code.
StratumMembership membership_by_code(const Allocation& allocation);
// Membership where each stratum id is a GeneralClass name resolved through
// the scheme.
StratumMembership membership_by_general(const Allocation& allocation,
                                        const ClassScheme& scheme);

// Per-stratum seed, independent of the other strata in the allocation.
std::uint64_t stratum_seed(std::uint64_t seed, std::string_view stratum_id);

// Draws `selected` distinct cells per stratum uniformly without
// replacement, one point per cell at its center. Strata are emitted in
// ascending id order, points within a stratum in row-major cell order, and
// ids count up from `first_id`. Throws kNotFound for a stratum without
// membership or without any cell, kUnderpopulated when it has too few.
std::vector<SamplePoint> draw_points(const RasterGrid& stratum_map,
                                     const Allocation& allocation,
                                     const StratumMembership& membership,
                                     std::uint64_t seed,
                                     std::string_view source_product = {},
                                     std::int64_t first_id = 0);

std::vector<SamplePoint> draw_points(const RasterGrid& stratum_map,
                                     const Allocation& allocation,
                                     std::uint64_t seed,
                                     std::string_view source_product = {},
                                     std::int64_t first_id = 0);

// sample_id,x,y,stratum_id,source_product
std::string write_samples_csv(std::span<const SamplePoint> samples);
std::vector<SamplePoint> parse_samples_csv(std::string_view text);

// stratum_id,coverage,raw_quota,selected
std::string write_allocation_csv(const Allocation& allocation);
Allocation parse_allocation_csv(std::string_view text);

// stratum_id,coverage
std::vector<Stratum> parse_strata_csv(std::string_view text);

}  // namespace lcval
