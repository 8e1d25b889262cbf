#include "lcval/sampling.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"
#include "random.hpp"

namespace lcval {

namespace {

// Relative slack absorbing representation error before ceil/floor.
constexpr double kRoundingSlack = 1e-9;

void check_counts(std::int64_t n_a, std::int64_t n_min, const char* what) {
  if (n_min < 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_min must be non-negative");
  }
  if (n_a < n_min) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be >= n_min");
  }
}

void check_strata(std::span<const Stratum> strata) {
  if (strata.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no strata given");
  }
  std::set<std::string_view> seen;
  for (const auto& s : strata) {
    if (!(s.coverage >= 0.0) || !std::isfinite(s.coverage)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stratum " + s.id + " has an invalid coverage");
    }
    if (!seen.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicate, "stratum " + s.id + " listed twice");
    }
  }
}

Allocation anchored(std::span<const Stratum> strata, std::size_t anchor,
                    std::int64_t anchor_n, std::int64_t n_min) {
  Allocation alloc;
  const double anchor_cov = strata[anchor].coverage;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    AllocationEntry e;
    e.stratum_id = strata[i].id;
    e.coverage = strata[i].coverage;
    if (i == anchor) {
      e.raw_quota = static_cast<double>(anchor_n);
      e.selected = anchor_n;
    } else {
      e.raw_quota = strata[i].coverage / anchor_cov * static_cast<double>(anchor_n);
      e.selected = std::max(n_min, round_half_up(e.raw_quota));
    }
    alloc.total += e.selected;
    alloc.entries.push_back(std::move(e));
  }
  return alloc;
}

std::optional<int> parse_code(std::string_view id) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), v);
  if (id.empty() || ec != std::errc() || ptr != id.data() + id.size()) return std::nullopt;
  return v;
}

}  // namespace

SampleSizePlan required_sample_size(double z, double p, double half_width) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid half-width: must be > 0");
  }
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::kInvalidArgument, "critical value z must be > 0");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "planning proportion P must be in [0,1]");
  }
  const double exact = z * z * p * (1.0 - p) / (half_width * half_width);
  const double n = std::ceil(exact - kRoundingSlack * std::max(1.0, exact));
  return {z, p, half_width, static_cast<std::int64_t>(std::max(0.0, n))};
}

void validate_stratification(std::span<const Stratum> strata, double tolerance) {
  check_strata(strata);
  double sum = 0.0;
  for (const auto& s : strata) {
    if (s.coverage > 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "stratum " + s.id + " coverage exceeds 1");
    }
    sum += s.coverage;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                "stratum coverages sum to " + csv::format_double(sum) + ", not 1");
  }
}

const AllocationEntry* Allocation::find(std::string_view stratum_id) const {
  for (const auto& e : entries) {
    if (e.stratum_id == stratum_id) return &e;
  }
  return nullptr;
}

std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(
      std::floor(x + 0.5 + kRoundingSlack * std::max(1.0, std::abs(x))));
}

Allocation allocate_max_anchored(std::span<const Stratum> strata,
                                 std::int64_t n_max, std::int64_t n_min) {
  check_strata(strata);
  check_counts(n_max, n_min, "n_max");
  std::size_t largest = 0;
  for (std::size_t i = 1; i < strata.size(); ++i) {
    if (strata[i].coverage > strata[largest].coverage) largest = i;
  }
  if (strata[largest].coverage <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "all stratum coverages are zero");
  }
  return anchored(strata, largest, n_max, n_min);
}

Allocation allocate_class_anchored(std::span<const Stratum> strata,
                                   std::string_view anchor, std::int64_t anchor_n,
                                   std::int64_t n_min) {
  check_strata(strata);
  check_counts(anchor_n, n_min, "anchor_n");
  auto it = std::find_if(strata.begin(), strata.end(),
                         [&](const Stratum& s) { return s.id == anchor; });
  if (it == strata.end()) {
    throw Error(ErrorCode::kNotFound, "anchor stratum " + std::string(anchor) + " missing");
  }
  if (it->coverage <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "anchor stratum " + std::string(anchor) + " has zero coverage");
  }
  return anchored(strata, static_cast<std::size_t>(it - strata.begin()), anchor_n, n_min);
}

std::vector<Stratum> strata_from_codes(const RasterGrid& grid) {
  std::map<int, std::int64_t> counts;
  std::int64_t total = 0;
  for (int v : grid.values()) {
    if (v == grid.nodata()) continue;
    ++counts[v];
    ++total;
  }
  std::vector<Stratum> out;
  for (const auto& [code, n] : counts) {
    out.push_back({std::to_string(code), static_cast<double>(n) / static_cast<double>(total)});
  }
  return out;
}

std::vector<Stratum> strata_from_general(const RasterGrid& grid, const ClassScheme& scheme) {
  std::array<std::int64_t, kGeneralClassCount> counts{};
  std::int64_t total = 0;
  for (int v : grid.values()) {
    const GeneralClass c = harmonize(scheme, v);
    if (c == GeneralClass::kOthersUnclassified) continue;
    ++counts[index_of(c)];
    ++total;
  }
  std::vector<Stratum> out;
  if (total == 0) return out;
  for (GeneralClass c : kGeneralClasses) {
    if (c == GeneralClass::kOthersUnclassified || counts[index_of(c)] == 0) continue;
    out.push_back({std::string(to_string(c)),
                   static_cast<double>(counts[index_of(c)]) / static_cast<double>(total)});
  }
  return out;
}

StratumMembership membership_by_code(const Allocation& allocation) {
  StratumMembership out;
  for (const auto& e : allocation.entries) {
    auto code = parse_code(e.stratum_id);
    if (!code) {
      throw Error(ErrorCode::kNotFound,
                  "unknown stratum code '" + e.stratum_id + "' (not an integer raster code)");
    }
    out[e.stratum_id] = {*code};
  }
  return out;
}

StratumMembership membership_by_general(const Allocation& allocation,
                                        const ClassScheme& scheme) {
  StratumMembership out;
  for (const auto& e : allocation.entries) {
    auto cls = try_parse_general_class(e.stratum_id);
    if (!cls) {
      throw Error(ErrorCode::kNotFound,
                  "unknown stratum '" + e.stratum_id + "' (not a general class)");
    }
    std::vector<int> codes;
    for (const auto& [code, entry] : scheme.entries()) {
      if (entry.general == *cls) codes.push_back(code);
    }
    out[e.stratum_id] = std::move(codes);
  }
  return out;
}

std::uint64_t stratum_seed(std::uint64_t seed, std::string_view stratum_id) {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a(stratum_id));
}

std::vector<SamplePoint> draw_points(const RasterGrid& stratum_map,
                                     const Allocation& allocation,
                                     const StratumMembership& membership,
                                     std::uint64_t seed,
                                     std::string_view source_product,
                                     std::int64_t first_id) {
  std::vector<const AllocationEntry*> entries;
  for (const auto& e : allocation.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(),
            [](const auto* a, const auto* b) { return a->stratum_id < b->stratum_id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i]->stratum_id == entries[i - 1]->stratum_id) {
      throw Error(ErrorCode::kDuplicate, "stratum " + entries[i]->stratum_id + " listed twice");
    }
  }

  std::vector<SamplePoint> out;
  std::int64_t next_id = first_id;
  for (const AllocationEntry* e : entries) {
    if (e->selected < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative allocation for " + e->stratum_id);
    }
    auto it = membership.find(e->stratum_id);
    if (it == membership.end()) {
      throw Error(ErrorCode::kNotFound, "unknown stratum code '" + e->stratum_id + "'");
    }
    if (e->selected == 0) continue;
    const std::set<int> codes(it->second.begin(), it->second.end());
    std::vector<std::uint32_t> eligible;
    const auto values = stratum_map.values();
    for (std::size_t cell = 0; cell < values.size(); ++cell) {
      if (values[cell] != stratum_map.nodata() && codes.contains(values[cell])) {
        eligible.push_back(static_cast<std::uint32_t>(cell));
      }
    }
    if (eligible.empty()) {
      throw Error(ErrorCode::kNotFound,
                  "unknown stratum code '" + e->stratum_id + "': no cells in the stratum map");
    }
    const auto k = static_cast<std::size_t>(e->selected);
    if (eligible.size() < k) {
      throw Error(ErrorCode::kUnderpopulated,
                  "stratum " + e->stratum_id + " has " + std::to_string(eligible.size()) +
                      " cells, " + std::to_string(k) + " requested");
    }
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    detail::Engine engine(stratum_seed(seed, e->stratum_id));
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + detail::uniform_below(engine, eligible.size() - i);
      std::swap(eligible[i], eligible[j]);
    }
    std::sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i) {
      const auto cell = eligible[i];
      const CellIndex idx{static_cast<int>(cell / stratum_map.cols()),
                          static_cast<int>(cell % stratum_map.cols())};
      const Point p = stratum_map.cell_center(idx);
      out.push_back({next_id++, p.x, p.y, e->stratum_id, std::string(source_product)});
    }
  }
  return out;
}

std::vector<SamplePoint> draw_points(const RasterGrid& stratum_map,
                                     const Allocation& allocation, std::uint64_t seed,
                                     std::string_view source_product,
                                     std::int64_t first_id) {
  return draw_points(stratum_map, allocation, membership_by_code(allocation), seed,
                     source_product, first_id);
}

std::string write_samples_csv(std::span<const SamplePoint> samples) {
  std::string out = "sample_id,x,y,stratum_id,source_product\n";
  for (const auto& s : samples) {
    out += csv::join({std::to_string(s.sample_id), csv::format_double(s.x),
                      csv::format_double(s.y), s.stratum_id, s.source_product});
    out += '\n';
  }
  return out;
}

std::vector<SamplePoint> parse_samples_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"sample_id", "x", "y", "stratum_id", "source_product"});
  std::vector<SamplePoint> out;
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.lines[i];
    SamplePoint s{csv::parse_int(row[0], line), csv::parse_double(row[1], line),
                  csv::parse_double(row[2], line), row[3], row[4]};
    if (!ids.insert(s.sample_id).second) {
      throw Error(ErrorCode::kDuplicate,
                  "line " + std::to_string(line) + ": duplicate sample_id " +
                      std::to_string(s.sample_id));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_allocation_csv(const Allocation& allocation) {
  std::string out = "stratum_id,coverage,raw_quota,selected\n";
  for (const auto& e : allocation.entries) {
    out += csv::join({e.stratum_id, csv::format_double(e.coverage),
                      csv::format_double(e.raw_quota), std::to_string(e.selected)});
    out += '\n';
  }
  return out;
}

Allocation parse_allocation_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"stratum_id", "coverage", "raw_quota", "selected"});
  Allocation alloc;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.lines[i];
    AllocationEntry e{row[0], csv::parse_double(row[1], line),
                      csv::parse_double(row[2], line), csv::parse_int(row[3], line)};
    alloc.total += e.selected;
    alloc.entries.push_back(std::move(e));
  }
  return alloc;
}

std::vector<Stratum> parse_strata_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"stratum_id", "coverage"});
  std::vector<Stratum> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out.push_back({table.rows[i][0], csv::parse_double(table.rows[i][1], table.lines[i])});
  }
  return out;
}

}  // namespace lcval
