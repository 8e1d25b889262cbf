#include "lcval_cli/config.hpp"

#include <cstdlib>

#include <json.hpp>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

TileShift parse_shift(const json& doc) {
  const auto v = doc.get<std::vector<int>>();
  if (v.size() != 2) throw Error(ErrorCode::kParse, "shift must be [dx, dy]");
  return {v[0], v[1]};
}

ProductConfig parse_product(const json& doc, const fs::path& base) {
  ProductConfig p;
  p.name = doc.at("name").get<std::string>();
  p.scheme = doc.at("scheme").get<std::string>();
  if (p.scheme.find('/') != std::string::npos || p.scheme.ends_with(".csv")) {
    p.scheme = resolve(base, p.scheme).string();
  }
  if (doc.contains("grid")) p.grid = resolve(base, doc.at("grid").get<std::string>());
  if (doc.contains("layers")) {
    for (const auto& l : doc.at("layers")) {
      p.layers.push_back({resolve(base, l.at("grid").get<std::string>()), l.value("offset", 0)});
    }
  }
  if (doc.contains("tiles")) {
    for (const auto& t : doc.at("tiles")) {
      TileConfig tile{resolve(base, t.at("grid").get<std::string>()), {}};
      if (t.contains("shift")) tile.shift = parse_shift(t.at("shift"));
      p.tiles.push_back(tile);
    }
    p.reference_tile = doc.value("reference_tile", std::size_t{0});
    p.max_shift = doc.value("max_shift", kDefaultMaxShift);
  }
  const int sources = (p.grid ? 1 : 0) + (p.layers.empty() ? 0 : 1) + (p.tiles.empty() ? 0 : 1);
  if (sources != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "product '" + p.name + "' needs exactly one of grid, layers, tiles");
  }
  return p;
}

}  // namespace

const ProductConfig& ProjectConfig::product(std::string_view name) const {
  for (const auto& p : products) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kNotFound, "no product named '" + std::string(name) + "' in config");
}

ConfidenceWeighting ProjectConfig::weighting() const {
  return levels.empty() ? default_weighting() : weights_from_levels(levels);
}

ProjectConfig parse_project_config(std::string_view text, const fs::path& base_dir) {
  ProjectConfig cfg;
  try {
    const json doc = json::parse(text);
    if (doc.contains("products")) {
      for (const auto& p : doc.at("products")) cfg.products.push_back(parse_product(p, base_dir));
    }
    if (doc.contains("sampling")) {
      const auto& s = doc.at("sampling");
      auto& out = cfg.sampling;
      out.z = s.value("z", out.z);
      out.p = s.value("p", out.p);
      out.h = s.value("h", out.h);
      if (s.contains("n_max")) out.n_max = s.at("n_max").get<std::int64_t>();
      out.n_min = s.value("n_min", out.n_min);
      if (s.contains("anchor")) out.anchor = s.at("anchor").get<std::string>();
      if (s.contains("anchor_n")) out.anchor_n = s.at("anchor_n").get<std::int64_t>();
      out.seed = s.value("seed", out.seed);
      out.source_product = s.value("source_product", out.source_product);
      out.strata = s.value("strata", out.strata);
    }
    if (doc.contains("weighting")) {
      for (const auto& l : doc.at("weighting")) {
        LevelDefinition def;
        def.level = l.at("level").get<int>();
        def.range.lo = l.at("lo").get<double>();
        def.range.hi = l.at("hi").get<double>();
        def.range.lo_inclusive = l.value("lo_inclusive", true);
        def.range.hi_inclusive = l.value("hi_inclusive", true);
        cfg.levels.push_back(def);
      }
    }
    if (doc.contains("experts")) cfg.experts = doc.at("experts").get<std::vector<std::string>>();
    if (doc.contains("output_dir")) {
      cfg.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
    }
    if (doc.contains("extent_policy")) {
      cfg.policy = parse_policy(doc.at("extent_policy").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("project config: ") + e.what());
  }
  if (cfg.sampling.strata != "code" && cfg.sampling.strata != "general") {
    throw Error(ErrorCode::kInvalidArgument, "sampling.strata must be 'code' or 'general'");
  }
  return cfg;
}

ProjectConfig load_project_config(const fs::path& path) {
  return parse_project_config(csv::read_file(path), path.parent_path());
}

fs::path data_dir() {
  if (const char* env = std::getenv("LCVAL_DATA_DIR"); env && *env) return env;
#ifdef LCVAL_INSTALLED_DATA_DIR
  if (fs::exists(fs::path(LCVAL_INSTALLED_DATA_DIR) / "schemes")) return LCVAL_INSTALLED_DATA_DIR;
#endif
#ifdef LCVAL_SOURCE_DATA_DIR
  return LCVAL_SOURCE_DATA_DIR;
#else
  return "data";
#endif
}

ClassScheme resolve_scheme(const std::string& scheme) {
  if (fs::exists(scheme)) return load_scheme(scheme);
  const fs::path builtin = data_dir() / "schemes" / (scheme + ".csv");
  if (fs::exists(builtin)) return load_scheme(builtin);
  throw Error(ErrorCode::kNotFound, "no scheme file or built-in scheme named '" + scheme + "'");
}

LoadedProduct load_product(const ProductConfig& config) {
  ClassScheme scheme = resolve_scheme(config.scheme);
  if (config.grid) return {config.name, read_grid_file(*config.grid), std::move(scheme)};
  if (!config.layers.empty()) {
    std::vector<RasterGrid> grids;
    for (const auto& l : config.layers) grids.push_back(read_grid_file(l.grid));
    std::vector<OffsetLayer> layers;
    for (std::size_t i = 0; i < grids.size(); ++i) {
      layers.push_back({std::cref(grids[i]), config.layers[i].offset});
    }
    return {config.name, merge_layers(layers), std::move(scheme)};
  }
  std::vector<RasterGrid> tiles;
  std::vector<TileShift> shifts;
  for (const auto& t : config.tiles) {
    tiles.push_back(read_grid_file(t.grid));
    shifts.push_back(t.shift);
  }
  return {config.name, mosaic(tiles, config.reference_tile, shifts, config.max_shift),
          std::move(scheme)};
}

ExtentPolicy parse_policy(std::string_view name) {
  if (name == "strict") return ExtentPolicy::kStrict;
  if (name == "unclassified") return ExtentPolicy::kUnclassified;
  throw Error(ErrorCode::kInvalidArgument,
              "extent policy must be 'strict' or 'unclassified', got '" + std::string(name) + "'");
}

}  // namespace lcval::cli
