#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcval/annotation.hpp"
#include "lcval/nomenclature.hpp"
#include "lcval/retrieval.hpp"

namespace lcval {

// Square count table: rows index the reference (ground truth) class,
// columns the map class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes);
  // The five general classes in canonical order.
  static ConfusionMatrix general();

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }

  std::int64_t count(std::size_t truth, std::size_t mapped) const {
    return counts_[truth * size() + mapped];
  }
  void add(std::size_t truth, std::size_t mapped, std::int64_t n = 1);
  void add(GeneralClass truth, GeneralClass mapped, std::int64_t n = 1) {
    add(index_of(truth), index_of(mapped), n);
  }

  std::int64_t total() const { return total_; }
  std::int64_t trace() const;
  std::int64_t row_sum(std::size_t truth) const;
  std::int64_t col_sum(std::size_t mapped) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> classes_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

// trace / total. Throws kUndefined on an empty matrix.
double overall_accuracy(const ConfusionMatrix& m);

struct ClassAccuracy {
  std::optional<double> producer;  // diagonal / row sum
  std::optional<double> user;      // diagonal / column sum
};

std::vector<ClassAccuracy> producer_user_accuracy(const ConfusionMatrix& m);

// (p_o - p_e) / (1 - p_e). Throws kUndefined on an empty matrix or when
// the expected agreement is 1.
double kappa(const ConfusionMatrix& m);

struct LevelDefinition {
  int level = 0;
  PercentRange range;
};

// Per-level weight from the midpoint (median) of the level's range,
// normalized to sum to 1.
struct ConfidenceWeighting {
  std::vector<int> levels;
  std::vector<double> medians;
  std::vector<double> weights;

  // Throws kNotFound for a level without a weight.
  double weight(int level) const;
};

ConfidenceWeighting weights_from_levels(std::span<const LevelDefinition> levels);
// Levels 1/2/3 with their standard percent ranges.
ConfidenceWeighting default_weighting();

struct PerLevelAccuracy {
  int level = 0;
  std::int64_t n = 0;
  std::optional<double> value;  // absent when n == 0
};

// sum(w_i N_i A_i) / sum(w_i N_i) over levels with N_i > 0.
double weighted_metric(std::span<const PerLevelAccuracy> per_level,
                       const ConfidenceWeighting& weighting);

// Unit-weight aggregate: sum(N_i A_i) / sum(N_i).
double pooled_metric(std::span<const PerLevelAccuracy> per_level);

// One matrix per confidence level (indexed by level_index()); each sample
// lands in its final level's matrix at (truth label, mapped label).
std::array<ConfusionMatrix, 3> build_matrices(const GroundTruth& truth,
                                              const RetrievalTable& mapped,
                                              std::string_view product);

struct LevelReport {
  int level = 0;
  ConfusionMatrix matrix = ConfusionMatrix::general();
  std::optional<double> overall;
  std::optional<double> kappa;
  std::vector<ClassAccuracy> classes;
};

struct ClassReport {
  GeneralClass cls = GeneralClass::kOthersUnclassified;
  std::optional<double> producer;
  std::optional<double> user;
  std::optional<double> weighted_producer;
  std::optional<double> weighted_user;
};

struct AccuracyReport {
  std::string product;
  std::string sampling_set;
  ConfidenceWeighting weighting;
  std::vector<LevelReport> levels;
  ConfusionMatrix combined = ConfusionMatrix::general();
  double overall = 0.0;
  std::optional<double> kappa;
  double weighted_overall = 0.0;
  std::vector<ClassReport> classes;
};

AccuracyReport evaluate(const GroundTruth& truth, const RetrievalTable& mapped,
                        std::string_view product,
                        const ConfidenceWeighting& weighting,
                        std::string_view sampling_set = {});

// Whole percent, half-up; "-" for an undefined rate.
std::string format_percent(std::optional<double> rate);

std::string render_report_text(const AccuracyReport& report);
std::string render_report_json(const AccuracyReport& report);

// Report for inputs that only carry per-level accuracies and counts.
struct LevelSummary {
  std::string product;
  std::string sampling_set;
  std::vector<PerLevelAccuracy> levels;
};

std::string render_level_summary_text(const LevelSummary& summary,
                                      const ConfidenceWeighting& weighting);
std::string render_level_summary_json(const LevelSummary& summary,
                                      const ConfidenceWeighting& weighting);

// level,n,accuracy
std::vector<PerLevelAccuracy> parse_per_level_csv(std::string_view text);

struct SummaryCell {
  std::string product;
  std::string sampling_set;
  double weighted_overall = 0.0;
};

// product,<set>_based,... with whole-percent cells; "-" where a
// (product, set) pair has no entry.
std::string render_summary_csv(std::span<const SummaryCell> cells,
                               std::span<const std::string> products,
                               std::span<const std::string> sampling_sets);

}  // namespace lcval
