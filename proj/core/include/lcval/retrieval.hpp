#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcval/grid.hpp"
#include "lcval/nomenclature.hpp"
#include "lcval/sampling.hpp"

namespace lcval {

// What to do with a sample outside a product's lookup bounds.
enum class ExtentPolicy {
  kStrict,        // error naming the sample and product
  kUnclassified,  // nodata raw code, OthersUnclassified
};

struct ProductRef {
  std::string name;
  std::reference_wrapper<const RasterGrid> grid;
  std::reference_wrapper<const ClassScheme> scheme;
};

struct ProductLabel {
  int raw = 0;
  GeneralClass general = GeneralClass::kOthersUnclassified;

  bool operator==(const ProductLabel&) const = default;
};

struct RetrievalRow {
  std::int64_t sample_id = 0;
  double x = 0.0;
  double y = 0.0;
  std::vector<ProductLabel> labels;  // one per product, table order

  bool operator==(const RetrievalRow&) const = default;
};

struct RetrievalTable {
  std::vector<std::string> products;
  std::vector<RetrievalRow> rows;

  // Throws kNotFound for an unknown product.
  std::size_t product_index(std::string_view name) const;

  bool operator==(const RetrievalTable&) const = default;
};

ProductLabel lookup_label(const RasterGrid& grid, const ClassScheme& scheme,
                          double x, double y, ExtentPolicy policy);

// One row per sample, in input order; per product the nearest-center cell
// value and its harmonized class.
RetrievalTable retrieve_labels(std::span<const SamplePoint> samples,
                               std::span<const ProductRef> products,
                               ExtentPolicy policy = ExtentPolicy::kStrict);

// sample_id,x,y then <name>_code,<name>_class per product.
std::string write_retrieval_csv(const RetrievalTable& table);
RetrievalTable parse_retrieval_csv(std::string_view text);

}  // namespace lcval
