#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tutor/profile.hpp"
#include "tutor/sensory.hpp"
#include "tutor/strategy.hpp"

namespace tutor {

// The seven behavioral constraints every composed prompt carries verbatim.
std::span<const std::string_view> heads_constraints();

enum class HeadsSubject { base, math, chinese, science, general };

std::string_view to_string(HeadsSubject subject);
// emotional, writing and reading share the general extension plus a one-line note.
HeadsSubject heads_subject_for(IntentCategory category);

struct PromptOptions {
  std::string teaching_style = "balanced";
  std::string detail_level = "standard";
};

// Base template with named anchors ({{teaching_style}}, {{detail_level}},
// {{subject_extension}}, {{profile_summary}}, {{strategy_block}}), one extension per
// subject, and the phrasing variants the anchors select from.
struct TemplateSet {
  std::string base;
  std::map<HeadsSubject, std::string> extensions;
  std::map<std::string, std::string> teaching_styles;
  std::map<std::string, std::string> detail_levels;
  std::map<IntentCategory, std::string> category_notes;

  // Throws ConfigError if anchors are missing or out of order, or a constraint is absent.
  void validate() const;
};

const TemplateSet& default_templates();
// Reads base.txt, math.txt, chinese.txt, science.txt, general.txt and variants.json.
TemplateSet load_templates(const std::filesystem::path& dir);

enum class PromptSection { heads, profile_summary, strategy_block };

struct PromptBundle {
  std::string system_prompt;
  std::vector<std::pair<PromptSection, std::string>> sections;

  const std::string* section(PromptSection which) const;
};

std::string render_learner_summary(const LearnerProfile& profile);

class PromptAssembler {
public:
  PromptAssembler();
  explicit PromptAssembler(TemplateSet templates, PromptOptions options = {});

  PromptBundle compose(IntentCategory subject, const LearnerProfile& profile,
                       const StrategyBlock& strategy) const;

  const PromptOptions& options() const noexcept { return options_; }

private:
  TemplateSet templates_;
  PromptOptions options_;
};

PromptBundle compose_system_prompt(IntentCategory subject, const LearnerProfile& profile,
                                   const StrategyBlock& strategy);

}  // namespace tutor
