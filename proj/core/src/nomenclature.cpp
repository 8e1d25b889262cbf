#include "lcval/nomenclature.hpp"

#include <limits>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval {

namespace {

constexpr std::string_view kClassNames[kGeneralClassCount] = {
    "ArtificialSurfaces", "Agriculture", "Forest", "Water", "OthersUnclassified"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool well_formed_l3(std::string_view code) {
  return code.size() == 5 && is_digit(code[0]) && code[1] == '.' &&
         is_digit(code[2]) && code[3] == '.' && is_digit(code[4]);
}

}  // namespace

std::string_view to_string(GeneralClass c) { return kClassNames[index_of(c)]; }

std::optional<GeneralClass> try_parse_general_class(std::string_view name) {
  for (GeneralClass c : kGeneralClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

GeneralClass parse_general_class(std::string_view name) {
  if (auto c = try_parse_general_class(name)) return *c;
  throw Error(ErrorCode::kParse, "unknown general class '" + std::string(name) + "'");
}

std::string_view to_string(L1Family family) {
  switch (family) {
    case L1Family::kArtificialSurfaces: return "Artificial Surfaces";
    case L1Family::kAgriculturalAreas: return "Agricultural Areas";
    case L1Family::kForestAndSemiNaturalAreas: return "Forest and Semi-Natural Areas";
    case L1Family::kWaterBodies: return "Water Bodies";
  }
  return "";
}

GeneralClass general_of(L1Family family) {
  switch (family) {
    case L1Family::kArtificialSurfaces: return GeneralClass::kArtificialSurfaces;
    case L1Family::kAgriculturalAreas: return GeneralClass::kAgriculture;
    case L1Family::kForestAndSemiNaturalAreas: return GeneralClass::kForest;
    case L1Family::kWaterBodies: return GeneralClass::kWater;
  }
  return GeneralClass::kOthersUnclassified;
}

L1Family l3_to_l1(std::string_view l3_code) {
  if (!well_formed_l3(l3_code)) {
    throw Error(ErrorCode::kParse, "malformed level-3 code '" + std::string(l3_code) +
                                       "', expected d.d.d");
  }
  switch (l3_code[0]) {
    case '1': return L1Family::kArtificialSurfaces;
    case '2': return L1Family::kAgriculturalAreas;
    case '3': return L1Family::kForestAndSemiNaturalAreas;
    case '5': return L1Family::kWaterBodies;
    default:
      throw Error(ErrorCode::kUnsupportedFamily,
                  "level-1 family " + std::string(1, l3_code[0]) + " of '" +
                      std::string(l3_code) + "' is outside the validated set");
  }
}

void ClassScheme::add(int raw_code, SchemeEntry entry) {
  if (entries_.contains(raw_code)) {
    throw Error(ErrorCode::kDuplicate, "scheme " + id_ + ": duplicate raw code " +
                                           std::to_string(raw_code));
  }
  if (entry.l3_code) {
    const std::string& l3 = *entry.l3_code;
    if (!well_formed_l3(l3)) {
      throw Error(ErrorCode::kParse, "scheme " + id_ + ": malformed level-3 code '" + l3 + "'");
    }
    // Codes of an in-scope family map to that family's class or are left
    // out as OthersUnclassified; other families can only be left out.
    GeneralClass family_class = GeneralClass::kOthersUnclassified;
    try {
      family_class = general_of(l3_to_l1(l3));
    } catch (const Error&) {
    }
    if (entry.general != family_class &&
        entry.general != GeneralClass::kOthersUnclassified) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scheme " + id_ + ": level-3 code " + l3 + " cannot map to " +
                      std::string(to_string(entry.general)));
    }
  }
  entries_.emplace(raw_code, std::move(entry));
}

const SchemeEntry* ClassScheme::find(int raw_code) const {
  auto it = entries_.find(raw_code);
  return it == entries_.end() ? nullptr : &it->second;
}

GeneralClass harmonize(const ClassScheme& scheme, int raw_code) {
  const SchemeEntry* entry = scheme.find(raw_code);
  return entry ? entry->general : GeneralClass::kOthersUnclassified;
}

ClassScheme parse_scheme_csv(std::string_view text, std::string id) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"raw_code", "label", "l3_code", "general"});
  ClassScheme scheme(std::move(id));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.lines[i];
    const std::int64_t code = csv::parse_int(row[0], line);
    if (code < std::numeric_limits<int>::min() || code > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": raw code out of range");
    }
    SchemeEntry entry;
    entry.label = row[1];
    if (!row[2].empty()) entry.l3_code = row[2];
    auto general = try_parse_general_class(row[3]);
    if (!general) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) +
                                         ": unknown general class '" + row[3] + "'");
    }
    entry.general = *general;
    scheme.add(static_cast<int>(code), std::move(entry));
  }
  return scheme;
}

std::string write_scheme_csv(const ClassScheme& scheme) {
  std::string out = "raw_code,label,l3_code,general\n";
  for (const auto& [code, entry] : scheme.entries()) {
    out += csv::join({std::to_string(code), entry.label, entry.l3_code.value_or(""),
                      std::string(to_string(entry.general))});
    out += '\n';
  }
  return out;
}

ClassScheme load_scheme(const std::filesystem::path& path) {
  try {
    return parse_scheme_csv(csv::read_file(path), path.stem().string());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace lcval
