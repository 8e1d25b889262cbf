#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "lcval/error.hpp"
#include "lcval/retrieval.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace lcval;

namespace {

const std::filesystem::path kSchemes = std::filesystem::path(LCVAL_TEST_DATA_DIR) / "schemes";

}  // namespace

TEST(RetrieveLabels, UrbanSampleAcrossProducts) {
  const auto glc_scheme = load_scheme(kSchemes / "glc30.csv");
  const auto hrl_scheme = load_scheme(kSchemes / "hrl_merged.csv");
  // A 30 m and a 20 m product over the same point; sample ids 0 and 7.
  const auto glc = RasterGrid::filled(3, 3, 0, 90, 30, -1, 80);
  const RasterGrid hrl(3, 3, 0, 60, 20, 255, {92, 92, 92, 0, 0, 0, 0, 0, 0});
  const std::vector<SamplePoint> samples{{0, 30, 50, "1.1.1", "clc"}, {7, 30, 30, "1.1.1", "clc"}};
  const ProductRef products[] = {{"hrl", std::cref(hrl), std::cref(hrl_scheme)},
                                 {"glc30", std::cref(glc), std::cref(glc_scheme)}};
  const auto t = retrieve_labels(samples, products);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].labels[0], (ProductLabel{92, GeneralClass::kArtificialSurfaces}));
  EXPECT_EQ(t.rows[0].labels[1], (ProductLabel{80, GeneralClass::kArtificialSurfaces}));
  EXPECT_EQ(t.rows[1].labels[0], (ProductLabel{0, GeneralClass::kOthersUnclassified}));
  EXPECT_EQ(t.product_index("glc30"), 1u);
  EXPECT_EQ(code_of([&] { t.product_index("nope"); }), ErrorCode::kNotFound);
}

TEST(RetrieveLabels, MatchesCompositionOracle) {
  std::mt19937_64 rng(500);
  ClassScheme scheme("s");
  scheme.add(1, {"a", std::nullopt, GeneralClass::kArtificialSurfaces});
  scheme.add(2, {"b", std::nullopt, GeneralClass::kAgriculture});
  scheme.add(3, {"c", std::nullopt, GeneralClass::kForest});
  scheme.add(4, {"d", std::nullopt, GeneralClass::kWater});
  const auto g1 = oracle::random_grid(rng, 25, {1, 2, 3, 4, 5}, -1, 0.1);
  const auto g2 = oracle::random_grid(rng, 25, {1, 2, 3, 4, 9}, -1, 0.1);
  std::vector<SamplePoint> samples;
  for (int i = 0; i < 500; ++i) {
    const auto& g = i % 2 ? g1 : g2;
    const auto b = g.lookup_bounds();
    std::uniform_real_distribution<double> ux(b.min_x, b.max_x), uy(b.min_y, b.max_y);
    samples.push_back({i, ux(rng), uy(rng), "x", "x"});
  }
  const ProductRef products[] = {{"one", std::cref(g1), std::cref(scheme)},
                                 {"two", std::cref(g2), std::cref(scheme)}};
  const auto t = retrieve_labels(samples, products, ExtentPolicy::kUnclassified);
  ASSERT_EQ(t.rows.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    ASSERT_EQ(t.rows[i].sample_id, s.sample_id);
    const RasterGrid* grids[] = {&g1, &g2};
    for (std::size_t p = 0; p < 2; ++p) {
      const auto& g = *grids[p];
      const auto b = g.lookup_bounds();
      ProductLabel want{g.nodata(), GeneralClass::kOthersUnclassified};
      if (s.x >= b.min_x && s.x <= b.max_x && s.y >= b.min_y && s.y <= b.max_y) {
        const int raw = g.at(oracle::nearest_center(g, s.x, s.y));
        const auto* e = scheme.entries().count(raw) ? &scheme.entries().at(raw) : nullptr;
        want = {raw, e ? e->general : GeneralClass::kOthersUnclassified};
      }
      ASSERT_EQ(t.rows[i].labels[p], want) << "sample " << i << " product " << p;
    }
  }
}

TEST(RetrieveLabels, ExtentPolicies) {
  ClassScheme scheme("s");
  const auto g = RasterGrid::filled(2, 2, 0, 20, 10, -1, 1);
  const std::vector<SamplePoint> samples{{0, 5, 5, "", ""}, {42, 500, 5, "", ""}};
  const ProductRef products[] = {{"prod", std::cref(g), std::cref(scheme)}};
  const auto msg = message_of([&] { retrieve_labels(samples, products); });
  EXPECT_NE(msg.find("42"), std::string::npos);
  EXPECT_NE(msg.find("prod"), std::string::npos);
  EXPECT_EQ(code_of([&] { retrieve_labels(samples, products); }), ErrorCode::kOutOfExtent);
  const auto t = retrieve_labels(samples, products, ExtentPolicy::kUnclassified);
  EXPECT_EQ(t.rows[1].labels[0], (ProductLabel{-1, GeneralClass::kOthersUnclassified}));
}

TEST(RetrieveLabels, MosaicIdentityCommutes) {
  std::mt19937_64 rng(8);
  ClassScheme scheme("s");
  scheme.add(2, {"b", std::nullopt, GeneralClass::kForest});
  const auto g = oracle::random_grid(rng, 20, {1, 2, 3}, -1, 0.1);
  const RasterGrid tiles[] = {g};
  const TileShift shifts[] = {{0, 0}};
  const auto m = mosaic(tiles, 0, shifts);
  std::vector<SamplePoint> samples;
  const auto b = g.lookup_bounds();
  std::uniform_real_distribution<double> ux(b.min_x, b.max_x), uy(b.min_y, b.max_y);
  for (int i = 0; i < 200; ++i) samples.push_back({i, ux(rng), uy(rng), "", ""});
  const ProductRef direct[] = {{"p", std::cref(g), std::cref(scheme)}};
  const ProductRef mosaicked[] = {{"p", std::cref(m), std::cref(scheme)}};
  EXPECT_EQ(retrieve_labels(samples, direct), retrieve_labels(samples, mosaicked));
}

TEST(RetrieveLabels, DuplicateProductNames) {
  ClassScheme scheme("s");
  const auto g = RasterGrid::filled(1, 1, 0, 10, 10, -1, 1);
  const ProductRef products[] = {{"p", std::cref(g), std::cref(scheme)},
                                 {"p", std::cref(g), std::cref(scheme)}};
  EXPECT_EQ(code_of([&] { retrieve_labels({}, products); }), ErrorCode::kDuplicate);
}

TEST(RetrievalCsv, TableShapeAndRoundTrip) {
  RetrievalTable t;
  t.products = {"hrl", "glc30"};
  t.rows.push_back({0, 1.5, 2.5,
                    {{92, GeneralClass::kArtificialSurfaces}, {80, GeneralClass::kArtificialSurfaces}}});
  t.rows.push_back({7, 3, 4, {{0, GeneralClass::kOthersUnclassified}, {10, GeneralClass::kAgriculture}}});
  const auto text = write_retrieval_csv(t);
  EXPECT_EQ(text.substr(0, text.find('\n')), "sample_id,x,y,hrl_code,hrl_class,glc30_code,glc30_class");
  EXPECT_EQ(parse_retrieval_csv(text), t);
  EXPECT_EQ(code_of([] { parse_retrieval_csv("sample_id,x,y,a_code\n"); }), ErrorCode::kParse);
}
