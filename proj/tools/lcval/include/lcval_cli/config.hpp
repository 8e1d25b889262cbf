#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcval/grid.hpp"
#include "lcval/metrics.hpp"
#include "lcval/nomenclature.hpp"
#include "lcval/retrieval.hpp"

namespace lcval::cli {

struct LayerConfig {
  std::filesystem::path grid;
  int offset = 0;
};

struct TileConfig {
  std::filesystem::path grid;
  TileShift shift;
};

// A product is either one grid file, a stack of offset layers merged into
// one grid, or a set of shifted tiles mosaicked onto the reference tile.
struct ProductConfig {
  std::string name;
  std::optional<std::filesystem::path> grid;
  std::vector<LayerConfig> layers;
  std::vector<TileConfig> tiles;
  std::size_t reference_tile = 0;
  int max_shift = kDefaultMaxShift;
  std::string scheme;  // file path or built-in scheme name
};

struct SamplingConfig {
  double z = 1.96;
  double p = 0.5;
  double h = 0.05;
  std::optional<std::int64_t> n_max;
  std::int64_t n_min = 5;
  std::optional<std::string> anchor;
  std::optional<std::int64_t> anchor_n;
  std::uint64_t seed = 0;
  std::string source_product;
  std::string strata = "code";  // "code" or "general"
};

struct ProjectConfig {
  std::vector<ProductConfig> products;
  SamplingConfig sampling;
  std::vector<LevelDefinition> levels;  // empty: standard three levels
  std::vector<std::string> experts;
  std::filesystem::path output_dir = ".";
  ExtentPolicy policy = ExtentPolicy::kStrict;

  const ProductConfig& product(std::string_view name) const;
  ConfidenceWeighting weighting() const;
};

// Parses the JSON project document; relative paths resolve against
// `base_dir`.
ProjectConfig parse_project_config(std::string_view text,
                                   const std::filesystem::path& base_dir);
ProjectConfig load_project_config(const std::filesystem::path& path);

struct LoadedProduct {
  std::string name;
  RasterGrid grid;
  ClassScheme scheme;
};

// Directory holding schemes/ and fixtures/: $LCVAL_DATA_DIR, else the
// installed share directory, else the source tree.
std::filesystem::path data_dir();

// A scheme argument that names no existing file is looked up among the
// built-in schemes.
ClassScheme resolve_scheme(const std::string& scheme);
LoadedProduct load_product(const ProductConfig& config);

ExtentPolicy parse_policy(std::string_view name);

}  // namespace lcval::cli
