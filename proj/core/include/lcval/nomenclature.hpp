#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace lcval {

// The four validated categories plus the catch-all row/column.
enum class GeneralClass {
  kArtificialSurfaces = 0,
  kAgriculture = 1,
  kForest = 2,
  kWater = 3,
  kOthersUnclassified = 4,
};

inline constexpr std::size_t kGeneralClassCount = 5;

inline constexpr std::array<GeneralClass, kGeneralClassCount> kGeneralClasses{
    GeneralClass::kArtificialSurfaces, GeneralClass::kAgriculture,
    GeneralClass::kForest, GeneralClass::kWater,
    GeneralClass::kOthersUnclassified};

constexpr std::size_t index_of(GeneralClass c) {
  return static_cast<std::size_t>(c);
}

// Canonical names: ArtificialSurfaces, Agriculture, Forest, Water,
// OthersUnclassified.
std::string_view to_string(GeneralClass c);
std::optional<GeneralClass> try_parse_general_class(std::string_view name);
// Throws kParse on unknown names.
GeneralClass parse_general_class(std::string_view name);

// CLC level-1 families within the validated set.
enum class L1Family {
  kArtificialSurfaces,
  kAgriculturalAreas,
  kForestAndSemiNaturalAreas,
  kWaterBodies,
};

std::string_view to_string(L1Family family);
GeneralClass general_of(L1Family family);

// "d.d.d" -> level-1 family from the leading digit. Throws kParse for a
// malformed code and kUnsupportedFamily for families 4 and above.
L1Family l3_to_l1(std::string_view l3_code);

struct SchemeEntry {
  std::string label;
  std::optional<std::string> l3_code;
  GeneralClass general = GeneralClass::kOthersUnclassified;
};

// A product's raw code vocabulary with its projection onto GeneralClass.
class ClassScheme {
 public:
  explicit ClassScheme(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  const std::map<int, SchemeEntry>& entries() const { return entries_; }

  // Throws kDuplicate for a repeated raw code, kParse or kInvalidArgument
  // when the dotted l3 code disagrees with the general class.
  void add(int raw_code, SchemeEntry entry);

  const SchemeEntry* find(int raw_code) const;
  bool contains(int raw_code) const { return find(raw_code) != nullptr; }

 private:
  std::string id_;
  std::map<int, SchemeEntry> entries_;
};

// Total: codes absent from the scheme (nodata included) map to
// OthersUnclassified.
GeneralClass harmonize(const ClassScheme& scheme, int raw_code);

// CSV with header raw_code,label,l3_code,general.
ClassScheme parse_scheme_csv(std::string_view text, std::string id);
std::string write_scheme_csv(const ClassScheme& scheme);
// The scheme id defaults to the file stem.
ClassScheme load_scheme(const std::filesystem::path& path);

}  // namespace lcval
