#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "hbmeta/errors.hpp"

namespace hbmeta {

/// One study's 2x2 table: (intervention, control) x (event, non-event).
/// Counts stay integers end to end so observed-minus-expected arithmetic
/// is exact for zero-event studies.
struct StudyRecord {
  std::string id;
  std::string label;
  std::int64_t intervention_events = 0;
  std::int64_t intervention_nonevents = 0;
  std::int64_t control_events = 0;
  std::int64_t control_nonevents = 0;

  std::int64_t intervention_total() const { return intervention_events + intervention_nonevents; }
  std::int64_t control_total() const { return control_events + control_nonevents; }
  std::int64_t total() const { return intervention_total() + control_total(); }
  std::int64_t total_events() const { return intervention_events + control_events; }

  bool operator==(const StudyRecord&) const = default;
};

/// An ordered collection of studies; order is input order and is preserved
/// by every operation.
struct MetaDataset {
  std::vector<StudyRecord> studies;
  std::string outcome_name;
  std::string intervention_name;
  std::string control_name;

  bool operator==(const MetaDataset&) const = default;
};

enum class Measure { LogRelativeRisk, PetoLogOddsRatio };

/// Per-study contribution to a pooled estimate. The RR path fills
/// (point, se, weight); the Peto path fills (o_minus_e, v) and derives
/// point/se from them when v > 0.
struct StudyContribution {
  std::string id;
  double point = 0.0;
  double se = 0.0;
  double weight = 0.0;
  double o_minus_e = 0.0;
  double v = 0.0;
  bool usable = true;
};

/// Pooled classical result on the log scale.
struct EffectEstimate {
  Measure measure = Measure::LogRelativeRisk;
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double confidence_level = 0.95;
  std::vector<StudyContribution> per_study;
  double q_statistic = 0.0;
  int q_df = 0;
  double q_p_value = 1.0;
  double i_squared = 0.0;
};

/// Checks every StudyRecord invariant and returns the dataset unchanged.
/// Idempotent by construction.
inline MetaDataset validate_dataset(const MetaDataset& raw) {
  if (raw.studies.empty()) {
    throw DataError("dataset must contain at least one study");
  }
  std::unordered_set<std::string> seen;
  for (const auto& s : raw.studies) {
    if (s.intervention_events < 0 || s.intervention_nonevents < 0 || s.control_events < 0 ||
        s.control_nonevents < 0) {
      throw NegativeCount("study '" + s.id + "' has a negative count");
    }
    if (s.intervention_total() < 1) {
      throw EmptyArm("study '" + s.id + "' has an empty intervention arm");
    }
    if (s.control_total() < 1) {
      throw EmptyArm("study '" + s.id + "' has an empty control arm");
    }
    if (!seen.insert(s.id).second) {
      throw DuplicateStudyId("study id '" + s.id + "' appears more than once");
    }
  }
  return raw;
}

}  // namespace hbmeta
