#include "lcval_cli/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"
#include "lcval/metrics.hpp"
#include "lcval/sampling.hpp"

namespace lcval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string num(double v) { return csv::format_double(v); }

FixtureCheck check_sample_size(const json& cases) {
  FixtureCheck c{"sample-size", true, ""};
  std::ostringstream d;
  for (const auto& item : cases) {
    const auto plan = required_sample_size(item.at("z"), item.at("p"), item.at("h"));
    const auto want = item.at("n").get<std::int64_t>();
    d << "h=" << num(plan.half_width) << " n=" << plan.n << " (want " << want << ") ";
    c.passed = c.passed && plan.n == want;
  }
  c.detail = d.str();
  return c;
}

// Compares an allocation against the quota and selection columns stored
// next to the coverages.
bool compare_allocation(const Allocation& got, const Allocation& expected, std::ostream& d) {
  bool ok = got.entries.size() == expected.entries.size();
  for (const auto& e : expected.entries) {
    const auto* g = got.find(e.stratum_id);
    if (!g) {
      d << "missing " << e.stratum_id << "; ";
      ok = false;
      continue;
    }
    if (!near(g->raw_quota, e.raw_quota, 0.1) || g->selected != e.selected) {
      d << e.stratum_id << " quota " << num(g->raw_quota) << " selected " << g->selected
        << " (want " << num(e.raw_quota) << "/" << e.selected << "); ";
      ok = false;
    }
  }
  return ok;
}

std::vector<Stratum> strata_of(const Allocation& a) {
  std::vector<Stratum> strata;
  for (const auto& e : a.entries) strata.push_back({e.stratum_id, e.coverage});
  return strata;
}

FixtureCheck check_max_anchored(const fs::path& dir, const json& spec) {
  FixtureCheck c{"l3-allocation", false, ""};
  const auto expected = parse_allocation_csv(csv::read_file(dir / "clc_l3_allocation.csv"));
  const auto got = allocate_max_anchored(strata_of(expected), spec.at("n_max"), spec.at("n_min"));
  std::ostringstream d;
  bool ok = compare_allocation(got, expected, d);
  std::map<std::string, std::int64_t> sums;
  for (const auto& e : got.entries) {
    sums[std::string(to_string(general_of(l3_to_l1(e.stratum_id))))] += e.selected;
  }
  for (const auto& [name, want] : spec.at("family_sums").items()) {
    d << name << "=" << sums[name] << " ";
    ok = ok && sums[name] == want.get<std::int64_t>();
  }
  d << "total=" << got.total;
  c.passed = ok && got.total == spec.at("total").get<std::int64_t>();
  c.detail = d.str();
  return c;
}

FixtureCheck check_class_anchored(const fs::path& dir, const std::string& name,
                                  const json& spec) {
  FixtureCheck c{name, false, ""};
  const auto expected = parse_allocation_csv(csv::read_file(dir / (name + ".csv")));
  const auto got = allocate_class_anchored(strata_of(expected), spec.at("anchor").get<std::string>(),
                                           spec.at("anchor_n"), spec.at("n_min"));
  std::ostringstream d;
  const bool ok = compare_allocation(got, expected, d);
  for (const auto& e : got.entries) d << e.stratum_id << "=" << e.selected << " ";
  d << "total=" << got.total;
  c.passed = ok && got.total == spec.at("total").get<std::int64_t>();
  c.detail = d.str();
  return c;
}

FixtureCheck check_weights(const json& medians, const json& weights) {
  FixtureCheck c{"confidence-weights", true, ""};
  const auto w = default_weighting();
  std::ostringstream d;
  for (std::size_t i = 0; i < 3; ++i) {
    d << "M" << i + 1 << "=" << num(w.medians[i]) << " w" << i + 1 << "="
      << num(std::round(w.weights[i] * 1000) / 1000) << " ";
    c.passed = c.passed && near(w.medians[i], medians.at(i).get<double>(), 1e-9) &&
               near(w.weights[i], weights.at(i).get<double>(), 0.001);
  }
  c.detail = d.str();
  return c;
}

std::vector<PerLevelAccuracy> per_level(const fs::path& dir, const std::string& file) {
  return parse_per_level_csv(csv::read_file(dir / file));
}

FixtureCheck check_per_level(const fs::path& dir, const json& item) {
  const auto product = item.at("product").get<std::string>();
  FixtureCheck c{"weighted-oa-" + product, false, ""};
  const auto levels = per_level(dir, item.at("file"));
  const double plain = pooled_metric(levels);
  const double weighted = weighted_metric(levels, default_weighting());
  const double delta = weighted - plain;
  std::ostringstream d;
  d << "OA=" << num(plain) << " weighted=" << num(weighted) << " delta=" << num(delta);
  c.passed = near(plain, item.at("overall"), 0.005) &&
             near(weighted, item.at("weighted_overall"), 0.005) && delta >= 0.01 &&
             delta <= 0.03;
  c.detail = d.str();
  return c;
}

ConfusionMatrix read_matrix(const fs::path& path) {
  const auto table = csv::parse(csv::read_file(path));
  std::vector<std::string> header{"truth"};
  for (auto cls : kGeneralClasses) header.emplace_back(to_string(cls));
  csv::require_header(table, header);
  auto m = ConfusionMatrix::general();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto truth = index_of(parse_general_class(table.rows[r][0]));
    for (std::size_t col = 1; col < table.rows[r].size(); ++col) {
      m.add(truth, col - 1, csv::parse_int(table.rows[r][col], table.lines[r]));
    }
  }
  return m;
}

FixtureCheck check_matrix(const fs::path& dir, const json& spec) {
  FixtureCheck c{"level1-matrix", false, ""};
  const auto m = read_matrix(dir / "clc2012_clc_sampling_level1_matrix.csv");
  const double oa = overall_accuracy(m);
  const double k = kappa(m);
  const auto acc = producer_user_accuracy(m);
  bool ok = near(oa, spec.at("overall"), 0.0001) && near(k, spec.at("kappa"), 0.005);
  std::ostringstream d;
  d << "OA=" << num(oa) << " kappa=" << num(k) << " PA=";
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& want_pa = spec.at("producer").at(i);
    const auto& want_ua = spec.at("user").at(i);
    d << format_percent(acc[i].producer) << (i + 1 < acc.size() ? "/" : " UA=");
    ok = ok && acc[i].producer && near(*acc[i].producer, want_pa.get<double>(), 0.005);
    if (want_ua.is_null()) {
      ok = ok && !acc[i].user;
    } else {
      ok = ok && acc[i].user && near(*acc[i].user, want_ua.get<double>(), 0.005);
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    d << format_percent(acc[i].user) << (i + 1 < acc.size() ? "/" : "");
  }
  c.passed = ok;
  c.detail = d.str();
  return c;
}

struct SummaryInputs {
  std::vector<std::string> products;
  std::vector<std::string> sets;
  std::vector<SummaryCell> cells;
};

// Cells with per-level inputs are recomputed; the rest are stored values.
SummaryInputs summary_inputs(const fs::path& dir, const json& expected) {
  SummaryInputs in;
  in.products = expected.at("summary").at("products").get<std::vector<std::string>>();
  in.sets = expected.at("summary").at("sampling_sets").get<std::vector<std::string>>();
  for (const auto& item : expected.at("per_level")) {
    in.cells.push_back({item.at("product"), "clc",
                        weighted_metric(per_level(dir, item.at("file")), default_weighting())});
  }
  const auto published = csv::parse(csv::read_file(dir / "weighted_oa_published.csv"));
  csv::require_header(published, {"product", "sampling_set", "weighted_oa"});
  for (std::size_t i = 0; i < published.rows.size(); ++i) {
    const auto& f = published.rows[i];
    in.cells.push_back({f[0], f[1], csv::parse_double(f[2], published.lines[i])});
  }
  return in;
}

json load_expected(const fs::path& dir) {
  try {
    return json::parse(csv::read_file(dir / "expected.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("expected.json: ") + e.what());
  }
}

FixtureCheck check_summary(const fs::path& dir, const json& expected) {
  FixtureCheck c{"weighted-oa-summary", false, ""};
  const auto in = summary_inputs(dir, expected);
  const auto grid = expected.at("summary").at("grid").get<std::vector<std::vector<double>>>();
  bool ok = true;
  for (std::size_t p = 0; p < in.products.size(); ++p) {
    for (std::size_t s = 0; s < in.sets.size(); ++s) {
      bool found = false;
      for (const auto& cell : in.cells) {
        if (cell.product == in.products[p] && cell.sampling_set == in.sets[s]) {
          found = true;
          ok = ok && near(cell.weighted_overall, grid[p][s], 0.005);
        }
      }
      ok = ok && found;
    }
  }
  const std::string rendered = render_summary_csv(in.cells, in.products, in.sets);
  c.passed = ok;
  c.detail = rendered.substr(rendered.find('\n') + 1);
  std::replace(c.detail.begin(), c.detail.end(), '\n', ' ');
  return c;
}

template <typename Fn>
FixtureCheck guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::string("error: ") + e.what()};
  }
}

}  // namespace

std::vector<FixtureCheck> run_fixture_suite(const fs::path& fixture_dir) {
  const json expected = load_expected(fixture_dir);
  std::vector<FixtureCheck> checks;
  checks.push_back(guarded("sample-size", [&] { return check_sample_size(expected.at("sample_size")); }));
  checks.push_back(guarded("l3-allocation", [&] {
    return check_max_anchored(fixture_dir, expected.at("clc_l3_allocation"));
  }));
  for (const std::string name : {"hrl_general_allocation", "glc30_general_allocation"}) {
    checks.push_back(guarded(name, [&] {
      return check_class_anchored(fixture_dir, name, expected.at(name));
    }));
  }
  checks.push_back(guarded("confidence-weights", [&] {
    return check_weights(expected.at("medians"), expected.at("weights"));
  }));
  for (const auto& item : expected.at("per_level")) {
    checks.push_back(guarded("weighted-oa", [&] { return check_per_level(fixture_dir, item); }));
  }
  checks.push_back(guarded("level1-matrix", [&] {
    return check_matrix(fixture_dir, expected.at("level1_matrix"));
  }));
  checks.push_back(guarded("weighted-oa-summary", [&] { return check_summary(fixture_dir, expected); }));
  return checks;
}

std::string fixture_summary_csv(const fs::path& fixture_dir) {
  const auto in = summary_inputs(fixture_dir, load_expected(fixture_dir));
  return render_summary_csv(in.cells, in.products, in.sets);
}

bool print_fixture_report(const std::vector<FixtureCheck>& checks, std::ostream& out) {
  bool all = true;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.passed;
  }
  return all;
}

}  // namespace lcval::cli
