#include "lcval/retrieval.hpp"

#include <set>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval {

std::size_t RetrievalTable::product_index(std::string_view name) const {
  for (std::size_t i = 0; i < products.size(); ++i) {
    if (products[i] == name) return i;
  }
  throw Error(ErrorCode::kNotFound, "product '" + std::string(name) + "' not in table");
}

ProductLabel lookup_label(const RasterGrid& grid, const ClassScheme& scheme, double x,
                          double y, ExtentPolicy policy) {
  if (policy == ExtentPolicy::kUnclassified && !grid.lookup_bounds().contains(x, y)) {
    return {grid.nodata(), GeneralClass::kOthersUnclassified};
  }
  const int raw = grid.at(world_to_cell(grid, x, y));
  return {raw, harmonize(scheme, raw)};
}

RetrievalTable retrieve_labels(std::span<const SamplePoint> samples,
                               std::span<const ProductRef> products, ExtentPolicy policy) {
  RetrievalTable table;
  std::set<std::string_view> names;
  for (const auto& p : products) {
    if (!names.insert(p.name).second) {
      throw Error(ErrorCode::kDuplicate, "product '" + p.name + "' listed twice");
    }
    table.products.push_back(p.name);
  }
  table.rows.reserve(samples.size());
  for (const auto& s : samples) {
    RetrievalRow row{s.sample_id, s.x, s.y, {}};
    row.labels.reserve(products.size());
    for (const auto& p : products) {
      try {
        row.labels.push_back(lookup_label(p.grid, p.scheme, s.x, s.y, policy));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kOutOfExtent) throw;
        throw Error(ErrorCode::kOutOfExtent, "sample " + std::to_string(s.sample_id) +
                                                 " outside product '" + p.name +
                                                 "': " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string write_retrieval_csv(const RetrievalTable& table) {
  std::vector<std::string> header{"sample_id", "x", "y"};
  for (const auto& p : table.products) {
    header.push_back(p + "_code");
    header.push_back(p + "_class");
  }
  std::string out = csv::join(header) + "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> fields{std::to_string(row.sample_id), csv::format_double(row.x),
                                    csv::format_double(row.y)};
    for (const auto& label : row.labels) {
      fields.push_back(std::to_string(label.raw));
      fields.emplace_back(to_string(label.general));
    }
    out += csv::join(fields) + "\n";
  }
  return out;
}

RetrievalTable parse_retrieval_csv(std::string_view text) {
  const csv::Table csv_table = csv::parse(text);
  const auto& header = csv_table.header;
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "x" || header[2] != "y" ||
      (header.size() - 3) % 2 != 0) {
    throw Error(ErrorCode::kParse,
                "retrieval table header must be sample_id,x,y then <name>_code,<name>_class pairs");
  }
  RetrievalTable table;
  for (std::size_t i = 3; i < header.size(); i += 2) {
    const std::string& code_col = header[i];
    const std::string& class_col = header[i + 1];
    constexpr std::string_view kCode = "_code";
    constexpr std::string_view kClass = "_class";
    if (code_col.size() <= kCode.size() || !code_col.ends_with(kCode)) {
      throw Error(ErrorCode::kParse, "expected <name>_code column, got '" + code_col + "'");
    }
    std::string name = code_col.substr(0, code_col.size() - kCode.size());
    if (class_col != name + std::string(kClass)) {
      throw Error(ErrorCode::kParse, "expected " + name + "_class column, got '" + class_col + "'");
    }
    table.products.push_back(std::move(name));
  }
  for (std::size_t r = 0; r < csv_table.rows.size(); ++r) {
    const auto& fields = csv_table.rows[r];
    const std::size_t line = csv_table.lines[r];
    RetrievalRow row{csv::parse_int(fields[0], line), csv::parse_double(fields[1], line),
                     csv::parse_double(fields[2], line), {}};
    for (std::size_t i = 3; i < fields.size(); i += 2) {
      const auto raw = csv::parse_int(fields[i], line);
      auto general = try_parse_general_class(fields[i + 1]);
      if (!general) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line) +
                                           ": unknown general class '" + fields[i + 1] + "'");
      }
      row.labels.push_back({static_cast<int>(raw), *general});
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace lcval
