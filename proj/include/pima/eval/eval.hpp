#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pima/alignment/alignment.hpp"
#include "pima/data/dataset.hpp"
#include "pima/model/model.hpp"

namespace pima::eval {

/// 2tp / (2tp + fp + fn), with 0/0 taken as 1.
double f1(std::size_t tp, std::size_t fp, std::size_t fn);

struct TaskCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const TaskCounts&) const = default;
};

/// What happened to one pill.
enum class Outcome {
  Correct,      // prescribed, matched to a box of its class
  WrongBox,     // prescribed, matched to another box
  Missed,       // prescribed, flagged
  FalseMatch,   // not prescribed, matched
  Rejected,     // not prescribed, flagged
};
inline constexpr std::size_t kOutcomeCount = 5;
std::string_view to_string(Outcome o);

struct ConfusionCounts {
  TaskCounts cor;  // a wrong-box match is both an FP and an FN here
  TaskCounts mis;  // exactly one of tp/fp/fn/tn per pill
  std::size_t outcomes[kOutcomeCount] = {};
  std::size_t pills = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

Outcome classify_outcome(const alignment::MatchDecision& decision, const data::Prescription& p);

/// Counts for one prescription; decisions must cover each pill exactly once.
ConfusionCounts confusion_counts(std::span<const alignment::MatchDecision> decisions, const data::Prescription& p);

struct PillDecision {
  int pill_id = 0;
  std::optional<int> box;
  double max_similarity = 0.0;
  Outcome outcome = Outcome::Correct;
};

struct PrescriptionReport {
  int prescription_id = 0;
  std::vector<PillDecision> pills;
};

struct MatchReport {
  std::vector<PrescriptionReport> prescriptions;
  ConfusionCounts counts;
  double f1_cor = 1.0;
  double f1_mis = 1.0;
  double f1_avg = 1.0;

  /// Recomputes the F1 fields from `counts`.
  void finalize();
  std::string to_json() const;
  /// One row per pill decision.
  std::string to_csv() const;
};

enum class Execution { Serial, Parallel };

/// Matches every pill of every prescription and pools the counts.
MatchReport evaluate(const model::Model& model, const std::vector<data::Prescription>& prescriptions,
                     const alignment::LossConfig& loss, Execution execution = Execution::Parallel);

/// Report assembled from decisions computed elsewhere, in prescription order.
MatchReport build_report(const std::vector<data::Prescription>& prescriptions,
                         const std::vector<std::vector<alignment::MatchDecision>>& decisions);

}  // namespace pima::eval
