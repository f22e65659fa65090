#include "tutor/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kDimensionNames[] = {"cognitive", "behavioral", "emotional",
                                                "metacognitive", "contextual"};

double cognitive_score(const LearnerProfile& p) {
  const auto& kt = p.cognitive.knowledge_tracing;
  double mastery = 1.0;
  if (!kt.empty()) {
    double sum = 0.0;
    for (const auto& [topic, trait] : kt) sum += trait.value();
    mastery = sum / static_cast<double>(kt.size());
  }
  const double bloom = ordinal(p.cognitive.bloom_level) / 6.0;
  return (mastery + bloom) / 2.0;
}

}  // namespace

std::string_view to_string(Dimension d) { return kDimensionNames[static_cast<std::size_t>(d)]; }

DimensionWeights equal_weights() {
  DimensionWeights w;
  for (auto d : kAllDimensions) w[d] = 0.2;
  return w;
}

void validate_weights(const DimensionWeights& weights) {
  double sum = 0.0;
  for (auto d : kAllDimensions) {
    auto it = weights.find(d);
    if (it == weights.end()) {
      throw PreconditionError("missing weight for dimension " + std::string(to_string(d)));
    }
    if (!(it->second >= 0.0)) {
      throw PreconditionError("negative weight for dimension " + std::string(to_string(d)));
    }
    sum += it->second;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw PreconditionError("dimension weights must sum to 1, got " + std::to_string(sum));
  }
}

void to_json(json& j, const AssessmentReport& r) {
  json dims = json::object();
  json weights = json::object();
  for (auto d : kAllDimensions) {
    dims[std::string(to_string(d))] = r.per_dimension.at(d);
    weights[std::string(to_string(d))] = r.weights.at(d);
  }
  j = json{{"per_dimension", dims},
           {"weights", weights},
           {"overall", r.overall},
           {"generated_at", to_millis(r.generated_at)}};
}

AssessmentReport assess_profile(const LearnerProfile& p, const AssessmentOptions& options,
                                Timestamp now) {
  validate_weights(options.weights);
  if (!(options.behavioral_saturation_sessions > 0.0)) {
    throw PreconditionError("behavioral saturation must be positive");
  }

  AssessmentReport r;
  r.weights = options.weights;
  r.generated_at = now;
  r.per_dimension[Dimension::cognitive] = cognitive_score(p);
  r.per_dimension[Dimension::behavioral] =
      std::min(1.0, static_cast<double>(p.behavioral.session_count) /
                        options.behavioral_saturation_sessions);
  r.per_dimension[Dimension::emotional] =
      (p.emotional.self_efficacy.value() + p.emotional.motivation.value()) / 2.0;
  r.per_dimension[Dimension::metacognitive] =
      (p.metacognitive.self_regulation.value() + p.metacognitive.reflection_ability.value()) / 2.0;
  const bool context_set = p.contextual.grade >= kMinGrade && p.contextual.grade <= kMaxGrade &&
                           !p.contextual.learning_goal.empty();
  r.per_dimension[Dimension::contextual] = context_set ? 1.0 : 0.5;

  r.overall = 0.0;
  for (auto d : kAllDimensions) r.overall += r.weights.at(d) * r.per_dimension.at(d);
  r.overall = std::clamp(r.overall, 0.0, 1.0);
  return r;
}

AssessmentReport assess_profile(const LearnerProfile& profile, const DimensionWeights& weights) {
  return assess_profile(profile, AssessmentOptions{weights}, profile.updated_at);
}

std::string render_report_table(const AssessmentReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "dimension" << std::right << std::setw(8) << "score"
      << std::setw(9) << "weight" << '\n';
  out << std::string(33, '-') << '\n';
  out << std::fixed << std::setprecision(3);
  for (auto d : kAllDimensions) {
    out << std::left << std::setw(16) << to_string(d) << std::right << std::setw(8)
        << report.per_dimension.at(d) << std::setw(9) << report.weights.at(d) << '\n';
  }
  out << std::string(33, '-') << '\n';
  out << std::left << std::setw(16) << "overall" << std::right << std::setw(8) << report.overall
      << '\n';
  return out.str();
}

}  // namespace tutor
