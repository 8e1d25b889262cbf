#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcval/grid.hpp"
#include "lcval/nomenclature.hpp"
#include "lcval/retrieval.hpp"
#include "lcval/sampling.hpp"

namespace lcval {

// Interpreter's self-reported certainty for one label.
enum class ConfidenceLevel { kHigh = 1, kMedium = 2, kLow = 3 };

inline constexpr std::array<ConfidenceLevel, 3> kConfidenceLevels{
    ConfidenceLevel::kHigh, ConfidenceLevel::kMedium, ConfidenceLevel::kLow};

constexpr int level_number(ConfidenceLevel level) {
  return static_cast<int>(level);
}
constexpr std::size_t level_index(ConfidenceLevel level) {
  return static_cast<std::size_t>(level) - 1;
}

// Throws kParse unless 1, 2 or 3.
ConfidenceLevel confidence_from_number(std::int64_t number);

// Interval of certainty percentages.
struct PercentRange {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_inclusive = true;
  bool hi_inclusive = true;

  double midpoint() const { return (lo + hi) / 2.0; }
  bool contains(double percent) const;
};

// Level 1: (75,100]; level 2: [25,75]; level 3: [0,25).
PercentRange percent_range(ConfidenceLevel level);
// Throws kInvalidArgument outside [0,100].
ConfidenceLevel confidence_from_percent(double percent);

inline constexpr std::string_view kConsensusExpert = "consensus";

struct AnnotationRecord {
  std::int64_t sample_id = 0;
  std::string expert_id;
  GeneralClass label = GeneralClass::kOthersUnclassified;
  ConfidenceLevel confidence = ConfidenceLevel::kHigh;
  int round = 1;  // 1 independent, 2 consensus
  std::string timestamp;

  bool operator==(const AnnotationRecord&) const = default;
};

enum class WorkflowState {
  kPending,
  kPartiallyAnnotated,
  kNeedsReview,
  kFinalized,
};

std::string_view to_string(WorkflowState state);
std::optional<WorkflowState> try_parse_workflow_state(std::string_view name);

enum class Provenance { kAgreedRound1, kConsensusRound2 };

std::string_view to_string(Provenance provenance);

struct GroundTruthRow {
  std::int64_t sample_id = 0;
  GeneralClass label = GeneralClass::kOthersUnclassified;
  ConfidenceLevel confidence = ConfidenceLevel::kHigh;
  Provenance provenance = Provenance::kAgreedRound1;

  bool operator==(const GroundTruthRow&) const = default;
};

struct GroundTruth {
  std::vector<GroundTruthRow> rows;  // ascending sample_id

  // Samples per confidence level, indexed by level_index().
  std::array<std::int64_t, 3> level_counts() const;
};

// sample_id,label,confidence,provenance
std::string write_ground_truth_csv(const GroundTruth& truth);
GroundTruth parse_ground_truth_csv(std::string_view text);

struct SampleStatus {
  std::int64_t sample_id = 0;
  WorkflowState state = WorkflowState::kPending;
  std::vector<AnnotationRecord> round1;
  std::optional<AnnotationRecord> round2;
  std::optional<GroundTruthRow> final;
};

// Dual-expert ground-truth store. State is a fold over the append-only
// record log: a sample is finalized when both experts agree at level 1 or
// once a consensus record exists; it needs review when the two round-1
// records disagree or either is below level 1.
class AnnotationStore {
 public:
  // Exactly two distinct experts, neither named kConsensusExpert.
  AnnotationStore(std::vector<std::int64_t> sample_ids,
                  std::vector<std::string> experts);

  static AnnotationStore replay(std::vector<std::int64_t> sample_ids,
                                std::vector<std::string> experts,
                                std::span<const AnnotationRecord> log);

  // Round 1 from a roster expert, or round 2 from kConsensusExpert (same
  // rules as record_consensus).
  void record_annotation(const AnnotationRecord& record);
  void record_consensus(std::int64_t sample_id, GeneralClass label,
                        ConfidenceLevel confidence, std::string timestamp);

  const SampleStatus& status(std::int64_t sample_id) const;
  WorkflowState state(std::int64_t sample_id) const {
    return status(sample_id).state;
  }
  bool contains(std::int64_t sample_id) const {
    return samples_.contains(sample_id);
  }

  std::vector<std::int64_t> review_queue() const;
  std::vector<SampleStatus> samples(
      std::optional<WorkflowState> filter = std::nullopt) const;
  std::size_t sample_count() const { return samples_.size(); }

  const std::vector<std::string>& experts() const { return experts_; }
  const std::vector<AnnotationRecord>& log() const { return log_; }

  // Throws kUnfinalized when any sample is open, unless allow_partial.
  GroundTruth export_ground_truth(bool allow_partial = false) const;

 private:
  SampleStatus& mutable_status(std::int64_t sample_id);
  void refold(SampleStatus& status) const;

  std::vector<std::string> experts_;
  std::map<std::int64_t, SampleStatus> samples_;
  std::vector<AnnotationRecord> log_;
};

// sample_id,expert_id,label,confidence,round,timestamp
std::string write_annotation_log_csv(std::span<const AnnotationRecord> log);
std::string annotation_log_header();
std::string annotation_log_line(const AnnotationRecord& record);
std::vector<AnnotationRecord> parse_annotation_log_csv(std::string_view text);

// Single-writer, many-reader wrapper. Every accepted mutation is appended
// to the log file, when one is configured, before the lock is released.
class ConcurrentAnnotationStore {
 public:
  explicit ConcurrentAnnotationStore(
      AnnotationStore store, std::optional<std::filesystem::path> log_path = {});

  template <typename Fn>
  auto read(Fn&& fn) const {
    std::shared_lock lock(mutex_);
    return std::forward<Fn>(fn)(static_cast<const AnnotationStore&>(store_));
  }

  void record_annotation(const AnnotationRecord& record);
  void record_consensus(std::int64_t sample_id, GeneralClass label,
                        ConfidenceLevel confidence, std::string timestamp);

 private:
  void append_last();

  mutable std::shared_mutex mutex_;
  AnnotationStore store_;
  std::optional<std::filesystem::path> log_path_;
};

inline constexpr double kPatchExtentMeters = 60.0;

// Odd window side covering at least `extent` meters, never below 3.
int patch_side(double cell_size, double extent = kPatchExtentMeters);

struct LegendEntry {
  int code = 0;
  std::string label;
  GeneralClass general = GeneralClass::kOthersUnclassified;
};

struct PatchWindow {
  std::string product;
  double cell_size = 0.0;
  int side = 0;
  int nodata = 0;
  CellIndex center;          // sample cell in product grid coordinates
  bool in_extent = true;
  std::vector<int> values;   // side x side, row-major
  std::vector<LegendEntry> legend;  // codes present in the window
};

struct ContextPatch {
  std::int64_t sample_id = 0;
  std::vector<PatchWindow> windows;
};

// Per product, the odd-sided window centered on the sample cell; cells off
// the grid read as nodata. Under kUnclassified an out-of-extent sample gets
// an all-nodata window.
ContextPatch extract_patch(std::span<const ProductRef> products,
                           const SamplePoint& sample,
                           ExtentPolicy policy = ExtentPolicy::kStrict);

}  // namespace lcval
