#include <gtest/gtest.h>

#include <map>

#include "lcval/error.hpp"
#include "lcval/synth.hpp"
#include "errors.hpp"

using namespace lcval;

namespace {

std::map<int, std::int64_t> histogram(const RasterGrid& g) {
  std::map<int, std::int64_t> h;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) ++h[g.at(r, c)];
  }
  return h;
}

}  // namespace

TEST(Landscape, SingleClassIsUniform) {
  const ClassFraction mix[] = {{311, 1.0}};
  const auto g = generate_landscape(1, 40, 30, 20, mix, 5);
  EXPECT_EQ(g.rows(), 40);
  EXPECT_EQ(g.cols(), 30);
  EXPECT_EQ(histogram(g), (std::map<int, std::int64_t>{{311, 1200}}));
}

TEST(Landscape, FractionsWithinTolerance) {
  const ClassFraction mix[] = {{1, 0.5}, {2, 0.3}, {3, 0.15}, {4, 0.05}};
  const auto g = generate_landscape(42, 500, 500, 10, mix, 20);
  const auto h = histogram(g);
  for (const auto& [code, frac] : mix) {
    EXPECT_NEAR(static_cast<double>(h.at(code)) / 250000.0, frac, 0.02) << code;
  }
}

TEST(Landscape, DeterministicPerSeed) {
  const ClassFraction mix[] = {{1, 0.6}, {2, 0.4}};
  const auto a = generate_landscape(9, 60, 70, 30, mix, 6);
  const auto b = generate_landscape(9, 60, 70, 30, mix, 6);
  const auto c = generate_landscape(10, 60, 70, 30, mix, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Landscape, Errors) {
  const ClassFraction bad_sum[] = {{1, 0.6}, {2, 0.6}};
  EXPECT_EQ(code_of([&] { generate_landscape(1, 5, 5, 1, bad_sum, 2); }), ErrorCode::kInvalidArgument);
  const ClassFraction ok[] = {{1, 1.0}};
  EXPECT_EQ(code_of([&] { generate_landscape(1, 0, 5, 1, ok, 2); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { generate_landscape(1, 5, 5, 1, {}, 2); }), ErrorCode::kInvalidArgument);
}

TEST(Degrade, IdentityCopies) {
  const ClassFraction mix[] = {{1, 0.5}, {2, 0.5}};
  const auto truth = generate_landscape(3, 50, 50, 10, mix, 5);
  const int classes[] = {1, 2};
  EXPECT_EQ(degrade(truth, DegradationSpec::identity(classes), 77), truth);
}

TEST(Degrade, KernelRateOnMillionCells) {
  const ClassFraction mix[] = {{1, 0.4}, {2, 0.3}, {3, 0.3}};
  const auto truth = generate_landscape(5, 1000, 1000, 10, mix, 40);
  const int classes[] = {1, 2, 3};
  const auto map = degrade(truth, DegradationSpec::uniform(classes, 0.9), 11);
  std::int64_t same = 0;
  for (int r = 0; r < truth.rows(); ++r) {
    for (int c = 0; c < truth.cols(); ++c) same += truth.at(r, c) == map.at(r, c);
  }
  EXPECT_NEAR(static_cast<double>(same) / 1e6, 0.9, 0.002);
}

TEST(Degrade, ShiftIsTranslation) {
  const ClassFraction mix[] = {{1, 0.5}, {2, 0.5}};
  const auto truth = generate_landscape(8, 30, 40, 10, mix, 4);
  const int classes[] = {1, 2};
  for (const TileShift shift : {TileShift{1, 0}, TileShift{0, 1}, TileShift{-2, 3}}) {
    auto spec = DegradationSpec::identity(classes);
    spec.shift = shift;
    const auto map = degrade(truth, spec, 1);
    for (int r = 0; r < truth.rows(); ++r) {
      for (int c = 0; c < truth.cols(); ++c) {
        // dx moves content east (higher col), dy moves it north (lower row).
        const CellIndex src{r + shift.dy, c - shift.dx};
        const int want = truth.contains(src) ? truth.at(src) : truth.nodata();
        ASSERT_EQ(map.at(r, c), want);
      }
    }
  }
}

TEST(Degrade, UnclassifiedRateAndUnknownClass) {
  const ClassFraction mix[] = {{1, 1.0}};
  const auto truth = generate_landscape(1, 200, 200, 10, mix, 10);
  const int classes[] = {1};
  auto spec = DegradationSpec::identity(classes);
  spec.unclassified_rate = 0.25;
  const auto h = histogram(degrade(truth, spec, 4));
  EXPECT_NEAR(static_cast<double>(h.at(truth.nodata())) / 40000.0, 0.25, 0.01);
  const int other[] = {2};
  EXPECT_EQ(code_of([&] { degrade(truth, DegradationSpec::identity(other), 1); }), ErrorCode::kNotFound);
}

TEST(DegradationSpec, ValidateAndParse) {
  const auto spec = parse_degradation_spec(
      R"({"classes": [1, 2], "kernel": [[0.9, 0.1], [0.2, 0.8]], "shift": [1, -1], "unclassified_rate": 0.05})");
  EXPECT_EQ(spec.classes, (std::vector<int>{1, 2}));
  EXPECT_DOUBLE_EQ(spec.kernel[1][0], 0.2);
  EXPECT_EQ(spec.shift.dx, 1);
  EXPECT_EQ(spec.shift.dy, -1);
  EXPECT_DOUBLE_EQ(spec.unclassified_rate, 0.05);
  EXPECT_EQ(code_of([] { parse_degradation_spec(R"({"classes": [1], "kernel": [[0.5]]})"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_degradation_spec(R"({"classes": [1, 2], "kernel": [[1, 0]]})"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_degradation_spec("{not json"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { parse_degradation_spec(R"({"classes": [1], "kernel": [[1]], "shift": [1]})"); }),
            ErrorCode::kParse);
  const int classes[] = {1, 2, 3};
  const auto u = DegradationSpec::uniform(classes, 0.7);
  EXPECT_DOUBLE_EQ(u.kernel[0][0], 0.7);
  EXPECT_DOUBLE_EQ(u.kernel[0][2], 0.15);
  EXPECT_NO_THROW(u.validate());
}
