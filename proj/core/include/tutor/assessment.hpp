#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tutor/profile.hpp"

namespace tutor {

enum class Dimension { cognitive, behavioral, emotional, metacognitive, contextual };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::cognitive, Dimension::behavioral, Dimension::emotional, Dimension::metacognitive,
    Dimension::contextual};

std::string_view to_string(Dimension d);

using DimensionWeights = std::map<Dimension, double>;

DimensionWeights equal_weights();
// Nonnegative, one entry per dimension, summing to 1 within 1e-9. Throws PreconditionError.
void validate_weights(const DimensionWeights& weights);

struct AssessmentOptions {
  DimensionWeights weights = equal_weights();
  // session_count at which the behavioral score saturates at 1.
  double behavioral_saturation_sessions = 20.0;
};

struct AssessmentReport {
  std::map<Dimension, double> per_dimension;
  DimensionWeights weights;
  double overall = 0.0;
  Timestamp generated_at{};
};

void to_json(nlohmann::json& j, const AssessmentReport& r);

// Per-dimension scoring is implementation-defined:
//   cognitive     = (mean knowledge_tracing, 1 if none + bloom ordinal / 6) / 2
//   behavioral    = min(1, session_count / saturation)
//   emotional     = (self_efficacy + motivation) / 2
//   metacognitive = (self_regulation + reflection_ability) / 2
//   contextual    = 1 when grade and learning goal are set, else 0.5
AssessmentReport assess_profile(const LearnerProfile& profile, const AssessmentOptions& options,
                                Timestamp now);
AssessmentReport assess_profile(const LearnerProfile& profile,
                                const DimensionWeights& weights = equal_weights());

// Fixed-width text table for terminals.
std::string render_report_table(const AssessmentReport& report);

}  // namespace tutor
