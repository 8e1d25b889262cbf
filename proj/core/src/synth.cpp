#include "lcval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "lcval/error.hpp"
#include "random.hpp"

namespace lcval {

namespace {

std::vector<std::int64_t> apportion(std::span<const ClassFraction> mix, std::int64_t cells) {
  std::vector<std::int64_t> counts(mix.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i].fraction * static_cast<double>(cells);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < cells; ++i, ++assigned) {
    ++counts[remainders[i % remainders.size()].second];
  }
  return counts;
}

}  // namespace

RasterGrid generate_landscape(std::uint64_t seed, int rows, int cols, double cell_size,
                              std::span<const ClassFraction> mix, double blob_scale,
                              int nodata) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::kInvalidArgument, "landscape needs at least one row and column");
  }
  if (!(blob_scale >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "blob_scale must be >= 1");
  }
  if (mix.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "class mix is empty");
  }
  double sum = 0.0;
  std::set<int> codes;
  for (const auto& m : mix) {
    if (!(m.fraction >= 0.0 && m.fraction <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "infeasible fraction for class " +
                                                   std::to_string(m.code));
    }
    if (m.code == nodata || !codes.insert(m.code).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class code " + std::to_string(m.code) + " repeated or equal to nodata");
    }
    sum += m.fraction;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "infeasible fractions: they must sum to 1");
  }

  const std::int64_t n_cells = static_cast<std::int64_t>(rows) * cols;
  const auto targets = apportion(mix, n_cells);
  std::vector<std::int64_t> remaining = targets;
  std::vector<int> values(static_cast<std::size_t>(n_cells), nodata);
  std::vector<bool> claimed(values.size(), false);
  std::vector<std::vector<std::uint32_t>> frontier(mix.size());

  detail::Engine engine(detail::splitmix64(seed));

  // Random visiting order used to place new blob seeds.
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[detail::uniform_below(engine, i)]);
  }
  std::size_t order_pos = 0;

  auto claim = [&](std::size_t k, std::uint32_t cell) {
    claimed[cell] = true;
    values[cell] = mix[k].code;
    --remaining[k];
    const int r = static_cast<int>(cell / static_cast<std::uint32_t>(cols));
    const int c = static_cast<int>(cell % static_cast<std::uint32_t>(cols));
    if (r > 0 && !claimed[cell - cols]) frontier[k].push_back(cell - cols);
    if (r + 1 < rows && !claimed[cell + cols]) frontier[k].push_back(cell + cols);
    if (c > 0 && !claimed[cell - 1]) frontier[k].push_back(cell - 1);
    if (c + 1 < cols && !claimed[cell + 1]) frontier[k].push_back(cell + 1);
  };
  auto plant = [&](std::size_t k) {
    while (claimed[order[order_pos]]) ++order_pos;
    claim(k, order[order_pos]);
  };

  for (std::size_t k = 0; k < mix.size(); ++k) {
    if (targets[k] == 0) continue;
    const double blobs = static_cast<double>(targets[k]) / (blob_scale * blob_scale);
    const auto n_seeds = std::max<std::int64_t>(1, std::llround(blobs));
    for (std::int64_t s = 0; s < n_seeds && remaining[k] > 0; ++s) plant(k);
  }

  std::int64_t left = std::accumulate(remaining.begin(), remaining.end(), std::int64_t{0});
  while (left > 0) {
    // Grow a class chosen in proportion to its outstanding cell count.
    std::uint64_t pick = detail::uniform_below(engine, static_cast<std::uint64_t>(left));
    std::size_t k = 0;
    while (pick >= static_cast<std::uint64_t>(remaining[k])) {
      pick -= static_cast<std::uint64_t>(remaining[k]);
      ++k;
    }
    auto& f = frontier[k];
    bool grown = false;
    while (!f.empty()) {
      const std::size_t i = detail::uniform_below(engine, f.size());
      const std::uint32_t cell = f[i];
      f[i] = f.back();
      f.pop_back();
      if (!claimed[cell]) {
        claim(k, cell);
        grown = true;
        break;
      }
    }
    if (!grown) plant(k);
    --left;
  }

  return RasterGrid(rows, cols, 0.0, rows * cell_size, cell_size, nodata, std::move(values));
}

void DegradationSpec::validate() const {
  if (classes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "degradation spec has no classes");
  }
  if (std::set<int>(classes.begin(), classes.end()).size() != classes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "degradation spec repeats a class");
  }
  if (kernel.size() != classes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "kernel needs one row per class");
  }
  for (std::size_t r = 0; r < kernel.size(); ++r) {
    if (kernel[r].size() != classes.size()) {
      throw Error(ErrorCode::kInvalidArgument, "kernel must be square");
    }
    double sum = 0.0;
    for (double p : kernel[r]) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "kernel probabilities must be in [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "kernel row for class " + std::to_string(classes[r]) + " does not sum to 1");
    }
  }
  if (!(unclassified_rate >= 0.0 && unclassified_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "unclassified_rate must be in [0,1]");
  }
}

DegradationSpec DegradationSpec::identity(std::span<const int> classes) {
  return uniform(classes, 1.0);
}

DegradationSpec DegradationSpec::uniform(std::span<const int> classes, double correct) {
  DegradationSpec spec;
  spec.classes.assign(classes.begin(), classes.end());
  const std::size_t k = classes.size();
  const double off = k > 1 ? (1.0 - correct) / static_cast<double>(k - 1) : 0.0;
  spec.kernel.assign(k, std::vector<double>(k, off));
  for (std::size_t i = 0; i < k; ++i) spec.kernel[i][i] = k > 1 ? correct : 1.0;
  return spec;
}

DegradationSpec parse_degradation_spec(std::string_view text) {
  DegradationSpec spec;
  try {
    const auto doc = nlohmann::json::parse(text);
    spec.classes = doc.at("classes").get<std::vector<int>>();
    spec.kernel = doc.at("kernel").get<std::vector<std::vector<double>>>();
    if (doc.contains("shift")) {
      const auto shift = doc.at("shift").get<std::vector<int>>();
      if (shift.size() != 2) {
        throw Error(ErrorCode::kParse, "shift must be [dx, dy]");
      }
      spec.shift = {shift[0], shift[1]};
    }
    spec.unclassified_rate = doc.value("unclassified_rate", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("degradation spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

RasterGrid degrade(const RasterGrid& truth, const DegradationSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::map<int, std::size_t> row_of;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) row_of[spec.classes[i]] = i;
  for (int v : truth.values()) {
    if (v != truth.nodata() && !row_of.contains(v)) {
      throw Error(ErrorCode::kNotFound,
                  "truth class " + std::to_string(v) + " is absent from the kernel");
    }
  }
  // Cumulative rows; the last positive entry absorbs rounding at the top.
  std::vector<std::vector<double>> cumulative(spec.kernel.size());
  std::vector<std::size_t> last_positive(spec.kernel.size(), 0);
  for (std::size_t r = 0; r < spec.kernel.size(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.kernel[r].size(); ++c) {
      acc += spec.kernel[r][c];
      cumulative[r].push_back(acc);
      if (spec.kernel[r][c] > 0.0) last_positive[r] = c;
    }
  }

  detail::Engine engine(detail::splitmix64(seed ^ 0x5eed5eed5eedULL));
  std::vector<int> out(truth.size(), truth.nodata());
  for (int r = 0; r < truth.rows(); ++r) {
    for (int c = 0; c < truth.cols(); ++c) {
      const CellIndex src{r + spec.shift.dy, c - spec.shift.dx};
      if (!truth.contains(src) || truth.is_nodata(src)) continue;
      if (spec.unclassified_rate > 0.0 &&
          detail::uniform_unit(engine) < spec.unclassified_rate) {
        continue;
      }
      const std::size_t k = row_of.at(truth.at(src));
      const double u = detail::uniform_unit(engine);
      std::size_t pick = last_positive[k];
      for (std::size_t j = 0; j < cumulative[k].size(); ++j) {
        if (u < cumulative[k][j]) {
          pick = j;
          break;
        }
      }
      out[static_cast<std::size_t>(r) * truth.cols() + c] = spec.classes[pick];
    }
  }
  return RasterGrid::from_lower_left(truth.rows(), truth.cols(), truth.origin_x(),
                                     truth.yllcorner(), truth.cell_size(), truth.nodata(),
                                     std::move(out));
}

}  // namespace lcval
