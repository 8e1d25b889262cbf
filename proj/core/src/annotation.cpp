#include "lcval/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include "lcval/csv.hpp"
#include "lcval/error.hpp"

namespace lcval {

namespace {

constexpr std::string_view kStateNames[] = {"pending", "partially-annotated",
                                            "needs-review", "finalized"};

std::string sample_text(std::int64_t id) { return "sample " + std::to_string(id); }

}  // namespace

ConfidenceLevel confidence_from_number(std::int64_t number) {
  if (number < 1 || number > 3) {
    throw Error(ErrorCode::kParse,
                "confidence level must be 1, 2 or 3, got " + std::to_string(number));
  }
  return static_cast<ConfidenceLevel>(number);
}

bool PercentRange::contains(double percent) const {
  const bool above = lo_inclusive ? percent >= lo : percent > lo;
  const bool below = hi_inclusive ? percent <= hi : percent < hi;
  return above && below;
}

PercentRange percent_range(ConfidenceLevel level) {
  switch (level) {
    case ConfidenceLevel::kHigh: return {75.0, 100.0, false, true};
    case ConfidenceLevel::kMedium: return {25.0, 75.0, true, true};
    case ConfidenceLevel::kLow: return {0.0, 25.0, true, false};
  }
  return {};
}

ConfidenceLevel confidence_from_percent(double percent) {
  for (ConfidenceLevel level : kConfidenceLevels) {
    if (percent_range(level).contains(percent)) return level;
  }
  throw Error(ErrorCode::kInvalidArgument, "confidence percentage outside [0,100]");
}

std::string_view to_string(WorkflowState state) {
  return kStateNames[static_cast<std::size_t>(state)];
}

std::optional<WorkflowState> try_parse_workflow_state(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kStateNames); ++i) {
    if (kStateNames[i] == name) return static_cast<WorkflowState>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kAgreedRound1 ? "agreed-round-1" : "consensus-round-2";
}

std::array<std::int64_t, 3> GroundTruth::level_counts() const {
  std::array<std::int64_t, 3> counts{};
  for (const auto& row : rows) ++counts[level_index(row.confidence)];
  return counts;
}

std::string write_ground_truth_csv(const GroundTruth& truth) {
  std::string out = "sample_id,label,confidence,provenance\n";
  for (const auto& row : truth.rows) {
    out += csv::join({std::to_string(row.sample_id), std::string(to_string(row.label)),
                      std::to_string(level_number(row.confidence)),
                      std::string(to_string(row.provenance))});
    out += '\n';
  }
  return out;
}

GroundTruth parse_ground_truth_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, {"sample_id", "label", "confidence", "provenance"});
  GroundTruth truth;
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t line = table.lines[i];
    GroundTruthRow row;
    row.sample_id = csv::parse_int(f[0], line);
    if (!ids.insert(row.sample_id).second) {
      throw Error(ErrorCode::kDuplicate,
                  "line " + std::to_string(line) + ": duplicate " + sample_text(row.sample_id));
    }
    row.label = parse_general_class(f[1]);
    row.confidence = confidence_from_number(csv::parse_int(f[2], line));
    if (f[3] == to_string(Provenance::kAgreedRound1)) {
      row.provenance = Provenance::kAgreedRound1;
    } else if (f[3] == to_string(Provenance::kConsensusRound2)) {
      row.provenance = Provenance::kConsensusRound2;
    } else {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line) + ": unknown provenance '" + f[3] + "'");
    }
    truth.rows.push_back(row);
  }
  std::sort(truth.rows.begin(), truth.rows.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return truth;
}

AnnotationStore::AnnotationStore(std::vector<std::int64_t> sample_ids,
                                 std::vector<std::string> experts)
    : experts_(std::move(experts)) {
  if (experts_.size() != 2 || experts_[0] == experts_[1]) {
    throw Error(ErrorCode::kInvalidArgument, "exactly two distinct experts are required");
  }
  for (const auto& e : experts_) {
    if (e.empty() || e == kConsensusExpert) {
      throw Error(ErrorCode::kInvalidArgument, "invalid expert id '" + e + "'");
    }
  }
  for (std::int64_t id : sample_ids) {
    if (!samples_.emplace(id, SampleStatus{id, WorkflowState::kPending, {}, {}, {}}).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate " + sample_text(id));
    }
  }
}

AnnotationStore AnnotationStore::replay(std::vector<std::int64_t> sample_ids,
                                        std::vector<std::string> experts,
                                        std::span<const AnnotationRecord> log) {
  AnnotationStore store(std::move(sample_ids), std::move(experts));
  for (std::size_t i = 0; i < log.size(); ++i) {
    try {
      store.record_annotation(log[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "log record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return store;
}

const SampleStatus& AnnotationStore::status(std::int64_t sample_id) const {
  auto it = samples_.find(sample_id);
  if (it == samples_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown " + sample_text(sample_id));
  }
  return it->second;
}

SampleStatus& AnnotationStore::mutable_status(std::int64_t sample_id) {
  return const_cast<SampleStatus&>(std::as_const(*this).status(sample_id));
}

void AnnotationStore::refold(SampleStatus& s) const {
  s.final.reset();
  if (s.round2) {
    s.state = WorkflowState::kFinalized;
    s.final = GroundTruthRow{s.sample_id, s.round2->label, s.round2->confidence,
                             Provenance::kConsensusRound2};
  } else if (s.round1.size() == 2) {
    const auto& a = s.round1[0];
    const auto& b = s.round1[1];
    if (a.label == b.label && a.confidence == ConfidenceLevel::kHigh &&
        b.confidence == ConfidenceLevel::kHigh) {
      s.state = WorkflowState::kFinalized;
      s.final = GroundTruthRow{s.sample_id, a.label, ConfidenceLevel::kHigh,
                               Provenance::kAgreedRound1};
    } else {
      s.state = WorkflowState::kNeedsReview;
    }
  } else if (s.round1.size() == 1) {
    s.state = WorkflowState::kPartiallyAnnotated;
  } else {
    s.state = WorkflowState::kPending;
  }
}

void AnnotationStore::record_annotation(const AnnotationRecord& record) {
  SampleStatus& s = mutable_status(record.sample_id);
  if (record.round == 1) {
    if (std::find(experts_.begin(), experts_.end(), record.expert_id) == experts_.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expert '" + record.expert_id + "' is not on the roster");
    }
    for (const auto& r : s.round1) {
      if (r.expert_id == record.expert_id) {
        throw Error(ErrorCode::kDuplicate, "expert '" + record.expert_id +
                                               "' already annotated " +
                                               sample_text(record.sample_id));
      }
    }
    s.round1.push_back(record);
  } else if (record.round == 2) {
    if (record.expert_id != kConsensusExpert) {
      throw Error(ErrorCode::kInvalidArgument, "consensus records must use expert id '" +
                                                   std::string(kConsensusExpert) + "'");
    }
    if (s.state == WorkflowState::kFinalized) {
      throw Error(ErrorCode::kAlreadyFinalized,
                  sample_text(record.sample_id) + " is already finalized");
    }
    if (s.state != WorkflowState::kNeedsReview) {
      throw Error(ErrorCode::kNotReviewable,
                  sample_text(record.sample_id) + " is not in the review queue");
    }
    s.round2 = record;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "round must be 1 or 2");
  }
  refold(s);
  log_.push_back(record);
}

void AnnotationStore::record_consensus(std::int64_t sample_id, GeneralClass label,
                                       ConfidenceLevel confidence, std::string timestamp) {
  record_annotation({sample_id, std::string(kConsensusExpert), label, confidence, 2,
                     std::move(timestamp)});
}

std::vector<std::int64_t> AnnotationStore::review_queue() const {
  std::vector<std::int64_t> out;
  for (const auto& [id, s] : samples_) {
    if (s.state == WorkflowState::kNeedsReview) out.push_back(id);
  }
  return out;
}

std::vector<SampleStatus> AnnotationStore::samples(std::optional<WorkflowState> filter) const {
  std::vector<SampleStatus> out;
  for (const auto& [id, s] : samples_) {
    if (!filter || s.state == *filter) out.push_back(s);
  }
  return out;
}

GroundTruth AnnotationStore::export_ground_truth(bool allow_partial) const {
  GroundTruth truth;
  std::int64_t open = 0;
  for (const auto& [id, s] : samples_) {
    if (s.final) {
      truth.rows.push_back(*s.final);
    } else {
      ++open;
    }
  }
  if (open > 0 && !allow_partial) {
    throw Error(ErrorCode::kUnfinalized,
                std::to_string(open) + " samples are not finalized");
  }
  return truth;
}

std::string annotation_log_header() {
  return "sample_id,expert_id,label,confidence,round,timestamp\n";
}

std::string annotation_log_line(const AnnotationRecord& r) {
  return csv::join({std::to_string(r.sample_id), r.expert_id, std::string(to_string(r.label)),
                    std::to_string(level_number(r.confidence)), std::to_string(r.round),
                    r.timestamp}) +
         "\n";
}

std::string write_annotation_log_csv(std::span<const AnnotationRecord> log) {
  std::string out = annotation_log_header();
  for (const auto& r : log) out += annotation_log_line(r);
  return out;
}

std::vector<AnnotationRecord> parse_annotation_log_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table,
                      {"sample_id", "expert_id", "label", "confidence", "round", "timestamp"});
  std::vector<AnnotationRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t line = table.lines[i];
    AnnotationRecord r;
    r.sample_id = csv::parse_int(f[0], line);
    r.expert_id = f[1];
    r.label = parse_general_class(f[2]);
    r.confidence = confidence_from_number(csv::parse_int(f[3], line));
    const auto round = csv::parse_int(f[4], line);
    if (round != 1 && round != 2) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": round must be 1 or 2");
    }
    r.round = static_cast<int>(round);
    r.timestamp = f[5];
    out.push_back(std::move(r));
  }
  return out;
}

ConcurrentAnnotationStore::ConcurrentAnnotationStore(
    AnnotationStore store, std::optional<std::filesystem::path> log_path)
    : store_(std::move(store)), log_path_(std::move(log_path)) {
  if (log_path_) {
    std::error_code ec;
    const bool exists = std::filesystem::exists(*log_path_, ec);
    if (!exists || std::filesystem::file_size(*log_path_, ec) == 0) {
      csv::write_file(*log_path_, write_annotation_log_csv(store_.log()));
    }
  }
}

void ConcurrentAnnotationStore::append_last() {
  if (!log_path_) return;
  std::ofstream out(*log_path_, std::ios::binary | std::ios::app);
  out << annotation_log_line(store_.log().back());
  out.flush();
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot append to " + log_path_->string());
  }
}

void ConcurrentAnnotationStore::record_annotation(const AnnotationRecord& record) {
  std::unique_lock lock(mutex_);
  store_.record_annotation(record);
  append_last();
}

void ConcurrentAnnotationStore::record_consensus(std::int64_t sample_id, GeneralClass label,
                                                 ConfidenceLevel confidence,
                                                 std::string timestamp) {
  std::unique_lock lock(mutex_);
  store_.record_consensus(sample_id, label, confidence, std::move(timestamp));
  append_last();
}

int patch_side(double cell_size, double extent) {
  if (!(cell_size > 0.0) || !(extent > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cell size and extent must be positive");
  }
  int side = static_cast<int>(std::ceil(extent / cell_size - 1e-9));
  if (side % 2 == 0) ++side;
  return std::max(side, 3);
}

ContextPatch extract_patch(std::span<const ProductRef> products, const SamplePoint& sample,
                           ExtentPolicy policy) {
  ContextPatch patch{sample.sample_id, {}};
  for (const auto& p : products) {
    const RasterGrid& grid = p.grid;
    const ClassScheme& scheme = p.scheme;
    PatchWindow w;
    w.product = p.name;
    w.cell_size = grid.cell_size();
    w.side = patch_side(grid.cell_size());
    w.nodata = grid.nodata();
    w.values.assign(static_cast<std::size_t>(w.side) * w.side, grid.nodata());
    if (!grid.lookup_bounds().contains(sample.x, sample.y)) {
      if (policy == ExtentPolicy::kStrict) {
        throw Error(ErrorCode::kOutOfExtent, sample_text(sample.sample_id) +
                                                 " outside product '" + p.name + "'");
      }
      w.in_extent = false;
      patch.windows.push_back(std::move(w));
      continue;
    }
    w.center = world_to_cell(grid, sample.x, sample.y);
    const int half = w.side / 2;
    std::set<int> present;
    for (int dr = -half; dr <= half; ++dr) {
      for (int dc = -half; dc <= half; ++dc) {
        const CellIndex idx{w.center.row + dr, w.center.col + dc};
        if (!grid.contains(idx)) continue;
        const int v = grid.at(idx);
        w.values[static_cast<std::size_t>((dr + half) * w.side + dc + half)] = v;
        if (v != grid.nodata()) present.insert(v);
      }
    }
    for (int code : present) {
      const SchemeEntry* entry = scheme.find(code);
      w.legend.push_back({code, entry ? entry->label : "unknown code",
                          harmonize(scheme, code)});
    }
    patch.windows.push_back(std::move(w));
  }
  return patch;
}

}  // namespace lcval
