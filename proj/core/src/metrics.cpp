#include "lcval/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval {

namespace {

void require_non_empty(const ConfusionMatrix& m) {
  if (m.total() <= 0) {
    throw Error(ErrorCode::kUndefined, "empty confusion matrix");
  }
}

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Weighted aggregate that yields nullopt instead of throwing when no
// level is populated.
std::optional<double> weighted_or_none(std::span<const PerLevelAccuracy> levels,
                                       const ConfidenceWeighting& weighting) {
  for (const auto& l : levels) {
    if (l.n > 0) return weighted_metric(levels, weighting);
  }
  return std::nullopt;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

void render_matrix(std::ostringstream& out, const ConfusionMatrix& m) {
  constexpr std::size_t kLabel = 20;
  constexpr std::size_t kCell = 20;
  out << std::string(kLabel, ' ');
  for (const auto& c : m.classes()) out << pad(c, kCell);
  out << pad("Sum", 8) << pad("PA", 6) << "\n";
  const auto acc = producer_user_accuracy(m);
  for (std::size_t r = 0; r < m.size(); ++r) {
    std::string label = m.classes()[r];
    label.resize(kLabel, ' ');
    out << label;
    for (std::size_t c = 0; c < m.size(); ++c) out << pad(std::to_string(m.count(r, c)), kCell);
    out << pad(std::to_string(m.row_sum(r)), 8) << pad(format_percent(acc[r].producer), 6)
        << "\n";
  }
  std::string sum_label = "Sum";
  sum_label.resize(kLabel, ' ');
  out << sum_label;
  for (std::size_t c = 0; c < m.size(); ++c) out << pad(std::to_string(m.col_sum(c)), kCell);
  out << pad(std::to_string(m.total()), 8) << "\n";
  std::string ua_label = "UA";
  ua_label.resize(kLabel, ' ');
  out << ua_label;
  for (std::size_t c = 0; c < m.size(); ++c) out << pad(format_percent(acc[c].user), kCell);
  out << "\n";
}

nlohmann::json rate_json(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
  if (classes_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "confusion matrix needs at least one class");
  }
}

ConfusionMatrix ConfusionMatrix::general() {
  std::vector<std::string> names;
  for (GeneralClass c : kGeneralClasses) names.emplace_back(to_string(c));
  return ConfusionMatrix(std::move(names));
}

void ConfusionMatrix::add(std::size_t truth, std::size_t mapped, std::int64_t n) {
  if (truth >= size() || mapped >= size()) {
    throw Error(ErrorCode::kInvalidArgument, "class index out of range");
  }
  if (n < 0 && counts_[truth * size() + mapped] + n < 0) {
    throw Error(ErrorCode::kInvalidArgument, "counts must stay non-negative");
  }
  counts_[truth * size() + mapped] += n;
  total_ += n;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += count(i, i);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::int64_t s = 0;
  for (std::size_t c = 0; c < size(); ++c) s += count(truth, c);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t mapped) const {
  std::int64_t s = 0;
  for (std::size_t r = 0; r < size(); ++r) s += count(r, mapped);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw Error(ErrorCode::kInvalidArgument, "confusion matrices have different classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

double overall_accuracy(const ConfusionMatrix& m) {
  require_non_empty(m);
  return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

std::vector<ClassAccuracy> producer_user_accuracy(const ConfusionMatrix& m) {
  require_non_empty(m);
  std::vector<ClassAccuracy> out(m.size());
  for (std::size_t c = 0; c < m.size(); ++c) {
    out[c].producer = ratio(m.count(c, c), m.row_sum(c));
    out[c].user = ratio(m.count(c, c), m.col_sum(c));
  }
  return out;
}

double kappa(const ConfusionMatrix& m) {
  require_non_empty(m);
  const double total = static_cast<double>(m.total());
  const double observed = static_cast<double>(m.trace()) / total;
  double expected = 0.0;
  for (std::size_t c = 0; c < m.size(); ++c) {
    expected += static_cast<double>(m.row_sum(c)) * static_cast<double>(m.col_sum(c));
  }
  expected /= total * total;
  if (expected >= 1.0) {
    throw Error(ErrorCode::kUndefined, "kappa undefined: expected agreement is 1");
  }
  return (observed - expected) / (1.0 - expected);
}

double ConfidenceWeighting::weight(int level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return weights[i];
  }
  throw Error(ErrorCode::kNotFound, "no weight for confidence level " + std::to_string(level));
}

ConfidenceWeighting weights_from_levels(std::span<const LevelDefinition> levels) {
  if (levels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty confidence level set");
  }
  ConfidenceWeighting w;
  std::set<int> seen;
  double sum = 0.0;
  for (const auto& def : levels) {
    if (!seen.insert(def.level).second) {
      throw Error(ErrorCode::kDuplicate, "confidence level " + std::to_string(def.level) +
                                             " defined twice");
    }
    const auto& r = def.range;
    if (!(r.lo >= 0.0 && r.lo <= r.hi && r.hi <= 100.0)) {
      throw Error(ErrorCode::kInvalidArgument, "confidence level " +
                                                   std::to_string(def.level) +
                                                   " needs 0 <= lo <= hi <= 100");
    }
    w.levels.push_back(def.level);
    w.medians.push_back(r.midpoint());
    sum += r.midpoint();
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "level medians sum to zero");
  }
  for (double m : w.medians) w.weights.push_back(m / sum);
  return w;
}

ConfidenceWeighting default_weighting() {
  std::vector<LevelDefinition> defs;
  for (ConfidenceLevel level : kConfidenceLevels) {
    defs.push_back({level_number(level), percent_range(level)});
  }
  return weights_from_levels(defs);
}

double weighted_metric(std::span<const PerLevelAccuracy> per_level,
                       const ConfidenceWeighting& weighting) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& l : per_level) {
    if (l.n < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative observation count");
    }
    if (l.n == 0) continue;
    if (!l.value) {
      throw Error(ErrorCode::kInvalidArgument,
                  "level " + std::to_string(l.level) + " has observations but no metric value");
    }
    const double w = weighting.weight(l.level);
    num += w * static_cast<double>(l.n) * *l.value;
    den += w * static_cast<double>(l.n);
  }
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kUndefined, "no populated confidence level");
  }
  return num / den;
}

double pooled_metric(std::span<const PerLevelAccuracy> per_level) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& l : per_level) {
    if (l.n <= 0) continue;
    if (!l.value) {
      throw Error(ErrorCode::kInvalidArgument,
                  "level " + std::to_string(l.level) + " has observations but no metric value");
    }
    num += static_cast<double>(l.n) * *l.value;
    den += static_cast<double>(l.n);
  }
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kUndefined, "no populated confidence level");
  }
  return num / den;
}

std::array<ConfusionMatrix, 3> build_matrices(const GroundTruth& truth,
                                              const RetrievalTable& mapped,
                                              std::string_view product) {
  const std::size_t p = mapped.product_index(product);
  std::map<std::int64_t, GeneralClass> map_labels;
  for (const auto& row : mapped.rows) {
    if (!map_labels.emplace(row.sample_id, row.labels.at(p).general).second) {
      throw Error(ErrorCode::kDuplicate,
                  "sample " + std::to_string(row.sample_id) + " repeated in retrieval table");
    }
  }
  if (map_labels.size() != truth.rows.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample_id mismatch: " + std::to_string(truth.rows.size()) +
                    " ground-truth rows vs " + std::to_string(map_labels.size()) +
                    " retrieval rows");
  }
  std::array<ConfusionMatrix, 3> out{ConfusionMatrix::general(), ConfusionMatrix::general(),
                                     ConfusionMatrix::general()};
  std::set<std::int64_t> seen;
  for (const auto& row : truth.rows) {
    if (!seen.insert(row.sample_id).second) {
      throw Error(ErrorCode::kDuplicate,
                  "sample " + std::to_string(row.sample_id) + " repeated in ground truth");
    }
    auto it = map_labels.find(row.sample_id);
    if (it == map_labels.end()) {
      throw Error(ErrorCode::kInvalidArgument, "sample_id mismatch: sample " +
                                                   std::to_string(row.sample_id) +
                                                   " missing from retrieval table");
    }
    out[level_index(row.confidence)].add(row.label, it->second);
  }
  return out;
}

AccuracyReport evaluate(const GroundTruth& truth, const RetrievalTable& mapped,
                        std::string_view product, const ConfidenceWeighting& weighting,
                        std::string_view sampling_set) {
  const auto matrices = build_matrices(truth, mapped, product);
  AccuracyReport report;
  report.product = std::string(product);
  report.sampling_set = std::string(sampling_set);
  report.weighting = weighting;

  std::vector<PerLevelAccuracy> oa_levels;
  for (ConfidenceLevel level : kConfidenceLevels) {
    const ConfusionMatrix& m = matrices[level_index(level)];
    LevelReport lr;
    lr.level = level_number(level);
    lr.matrix = m;
    if (m.total() > 0) {
      lr.overall = overall_accuracy(m);
      lr.classes = producer_user_accuracy(m);
      try {
        lr.kappa = kappa(m);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefined) throw;
      }
    } else {
      lr.classes.resize(m.size());
    }
    oa_levels.push_back({lr.level, m.total(), lr.overall});
    report.combined += m;
    report.levels.push_back(std::move(lr));
  }

  report.overall = overall_accuracy(report.combined);
  try {
    report.kappa = kappa(report.combined);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefined) throw;
  }
  report.weighted_overall = weighted_metric(oa_levels, weighting);

  const auto combined_acc = producer_user_accuracy(report.combined);
  for (GeneralClass c : kGeneralClasses) {
    const std::size_t ci = index_of(c);
    ClassReport cr;
    cr.cls = c;
    cr.producer = combined_acc[ci].producer;
    cr.user = combined_acc[ci].user;
    std::vector<PerLevelAccuracy> pa_levels;
    std::vector<PerLevelAccuracy> ua_levels;
    for (const auto& lr : report.levels) {
      pa_levels.push_back({lr.level, lr.matrix.row_sum(ci), lr.classes[ci].producer});
      ua_levels.push_back({lr.level, lr.matrix.col_sum(ci), lr.classes[ci].user});
    }
    cr.weighted_producer = weighted_or_none(pa_levels, weighting);
    cr.weighted_user = weighted_or_none(ua_levels, weighting);
    report.classes.push_back(cr);
  }
  return report;
}

std::string format_percent(std::optional<double> rate) {
  if (!rate) return "-";
  const double pct = std::floor(*rate * 100.0 + 0.5 + 1e-9);
  return std::to_string(static_cast<long long>(pct)) + "%";
}

std::string render_report_text(const AccuracyReport& report) {
  std::ostringstream out;
  out << "Accuracy report\n";
  out << "product: " << report.product << "\n";
  if (!report.sampling_set.empty()) out << "sampling set: " << report.sampling_set << "\n";
  out << "\nConfidence weighting\n";
  for (std::size_t i = 0; i < report.weighting.levels.size(); ++i) {
    out << "  level " << report.weighting.levels[i] << ": M = "
        << fixed(report.weighting.medians[i], 2)
        << ", w = " << fixed(report.weighting.weights[i], 3) << "\n";
  }
  for (const auto& lr : report.levels) {
    out << "\nConfidence level " << lr.level << " (N = " << lr.matrix.total() << ")\n";
    if (lr.matrix.total() == 0) {
      out << "  no samples\n";
      continue;
    }
    render_matrix(out, lr.matrix);
    out << "Overall accuracy: " << format_percent(lr.overall) << "\n";
    out << "kappa: " << (lr.kappa ? fixed(*lr.kappa, 2) : std::string("-")) << "\n";
  }
  out << "\nAll levels (N = " << report.combined.total() << ")\n";
  render_matrix(out, report.combined);
  out << "OA: " << format_percent(report.overall) << "\n";
  out << "kappa: " << (report.kappa ? fixed(*report.kappa, 2) : std::string("-")) << "\n";
  out << "Weighted OA: " << format_percent(report.weighted_overall) << "\n";
  out << "\nPer class\n";
  out << "  " << std::string(20, ' ') << pad("PA", 6) << pad("UA", 6) << pad("wPA", 6)
      << pad("wUA", 6) << "\n";
  for (const auto& cr : report.classes) {
    std::string name(to_string(cr.cls));
    name.resize(20, ' ');
    out << "  " << name << pad(format_percent(cr.producer), 6) << pad(format_percent(cr.user), 6)
        << pad(format_percent(cr.weighted_producer), 6)
        << pad(format_percent(cr.weighted_user), 6) << "\n";
  }
  return out.str();
}

std::string render_report_json(const AccuracyReport& report) {
  using nlohmann::json;
  json doc;
  doc["product"] = report.product;
  doc["sampling_set"] = report.sampling_set;
  json weighting = json::array();
  for (std::size_t i = 0; i < report.weighting.levels.size(); ++i) {
    weighting.push_back({{"level", report.weighting.levels[i]},
                         {"median", report.weighting.medians[i]},
                         {"weight", report.weighting.weights[i]}});
  }
  doc["weighting"] = weighting;
  auto matrix_json = [](const ConfusionMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.size(); ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < m.size(); ++c) row.push_back(m.count(r, c));
      rows.push_back(row);
    }
    return json{{"classes", m.classes()}, {"counts", rows}, {"total", m.total()}};
  };
  json levels = json::array();
  for (const auto& lr : report.levels) {
    json classes = json::array();
    for (std::size_t c = 0; c < lr.classes.size(); ++c) {
      classes.push_back({{"class", lr.matrix.classes()[c]},
                         {"pa", rate_json(lr.classes[c].producer)},
                         {"ua", rate_json(lr.classes[c].user)}});
    }
    levels.push_back({{"level", lr.level},
                      {"n", lr.matrix.total()},
                      {"matrix", matrix_json(lr.matrix)},
                      {"oa", rate_json(lr.overall)},
                      {"kappa", rate_json(lr.kappa)},
                      {"classes", classes}});
  }
  doc["levels"] = levels;
  doc["combined"] = matrix_json(report.combined);
  doc["oa"] = report.overall;
  doc["kappa"] = rate_json(report.kappa);
  doc["weighted_oa"] = report.weighted_overall;
  json classes = json::array();
  for (const auto& cr : report.classes) {
    classes.push_back({{"class", std::string(to_string(cr.cls))},
                       {"pa", rate_json(cr.producer)},
                       {"ua", rate_json(cr.user)},
                       {"wpa", rate_json(cr.weighted_producer)},
                       {"wua", rate_json(cr.weighted_user)}});
  }
  doc["classes"] = classes;
  return doc.dump(2) + "\n";
}

std::string render_level_summary_json(const LevelSummary& summary,
                                      const ConfidenceWeighting& weighting) {
  using nlohmann::json;
  json levels = json::array();
  for (const auto& l : summary.levels) {
    json entry{{"level", l.level}, {"n", l.n}, {"oa", rate_json(l.value)}};
    for (std::size_t i = 0; i < weighting.levels.size(); ++i) {
      if (weighting.levels[i] == l.level) {
        entry["median"] = weighting.medians[i];
        entry["weight"] = weighting.weights[i];
      }
    }
    levels.push_back(entry);
  }
  json doc{{"product", summary.product},
           {"sampling_set", summary.sampling_set},
           {"levels", levels},
           {"oa", pooled_metric(summary.levels)},
           {"weighted_oa", weighted_metric(summary.levels, weighting)}};
  return doc.dump(2) + "\n";
}

std::string render_level_summary_text(const LevelSummary& summary,
                                      const ConfidenceWeighting& weighting) {
  std::ostringstream out;
  out << "Accuracy report\n";
  out << "product: " << summary.product << "\n";
  if (!summary.sampling_set.empty()) out << "sampling set: " << summary.sampling_set << "\n";
  out << "\n" << pad("level", 6) << pad("M", 8) << pad("w_i", 8) << pad("N", 8)
      << pad("OA", 6) << "\n";
  std::int64_t total = 0;
  for (const auto& l : summary.levels) {
    std::string median = "-";
    std::string w = "-";
    for (std::size_t i = 0; i < weighting.levels.size(); ++i) {
      if (weighting.levels[i] == l.level) {
        median = fixed(weighting.medians[i], 2);
        w = fixed(weighting.weights[i], 3);
      }
    }
    out << pad(std::to_string(l.level), 6) << pad(median, 8) << pad(w, 8)
        << pad(std::to_string(l.n), 8) << pad(format_percent(l.value), 6) << "\n";
    total += l.n;
  }
  out << "Sum: " << total << "\n";
  out << "OA: " << format_percent(pooled_metric(summary.levels)) << "\n";
  out << "Weighted OA: " << format_percent(weighted_metric(summary.levels, weighting)) << "\n";
  return out.str();
}

std::vector<PerLevelAccuracy> parse_per_level_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"level", "n", "accuracy"});
  std::vector<PerLevelAccuracy> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t line = table.lines[i];
    PerLevelAccuracy l;
    l.level = static_cast<int>(csv::parse_int(f[0], line));
    l.n = csv::parse_int(f[1], line);
    if (f[2] != "-" && !f[2].empty()) {
      const double v = csv::parse_double(f[2], line);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line) + ": accuracy must be in [0,1]");
      }
      l.value = v;
    }
    out.push_back(l);
  }
  return out;
}

std::string render_summary_csv(std::span<const SummaryCell> cells,
                               std::span<const std::string> products,
                               std::span<const std::string> sampling_sets) {
  std::vector<std::string> header{"product"};
  for (const auto& s : sampling_sets) header.push_back(s + "_based");
  std::string out = csv::join(header) + "\n";
  for (const auto& p : products) {
    std::vector<std::string> row{p};
    for (const auto& s : sampling_sets) {
      std::string cell = "-";
      for (const auto& c : cells) {
        if (c.product == p && c.sampling_set == s) {
          cell = format_percent(c.weighted_overall);
          cell.pop_back();  // drop the % sign
        }
      }
      row.push_back(cell);
    }
    out += csv::join(row) + "\n";
  }
  return out;
}

}  // namespace lcval
