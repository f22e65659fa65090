#include "tutor/prompt.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "embedded_data.hpp"
#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kConstraints[] = {
    "Never give direct answers. Use Socratic questioning to guide self-discovery.",
    "Proceed step by step, confirming understanding at each stage.",
    "Praise specific efforts, not generic traits. Respond to mistakes with effort validation.",
    "Adjust language and examples based on the learner's grade and profile.",
    "Only discuss learning-related topics.",
    "Prompt reflection on the learner's own thinking processes.",
    "Help the learner develop skills for collaborating with AI, not dependency on AI.",
};

constexpr std::string_view kSubjectNames[] = {"base", "math", "chinese", "science", "general"};

constexpr std::string_view kStyleAnchor = "{{teaching_style}}";
constexpr std::string_view kDetailAnchor = "{{detail_level}}";
constexpr std::string_view kExtensionAnchor = "{{subject_extension}}";
constexpr std::string_view kSummaryAnchor = "{{profile_summary}}";
constexpr std::string_view kStrategyAnchor = "{{strategy_block}}";

std::string trim_trailing(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r')) s.pop_back();
  return s;
}

void replace_once(std::string& text, std::string_view anchor, std::string_view value) {
  const auto pos = text.find(anchor);
  if (pos != std::string::npos) text.replace(pos, anchor.size(), value);
}

// Drops the whole line holding `anchor` (used when a section is empty).
void remove_anchor_line(std::string& text, std::string_view anchor) {
  const auto pos = text.find(anchor);
  if (pos == std::string::npos) return;
  const auto begin = text.rfind('\n', pos);
  const auto end = text.find('\n', pos);
  const auto from = begin == std::string::npos ? 0 : begin;
  const auto to = end == std::string::npos ? text.size() : end;
  text.erase(from, to - from);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open template " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TemplateSet parse_templates(std::string base, std::map<HeadsSubject, std::string> extensions,
                            const json& variants) {
  TemplateSet t;
  t.base = std::move(base);
  for (auto& [subject, text] : extensions) text = trim_trailing(std::move(text));
  t.extensions = std::move(extensions);
  t.teaching_styles = variants.at("teaching_style").get<std::map<std::string, std::string>>();
  t.detail_levels = variants.at("detail_level").get<std::map<std::string, std::string>>();
  const json notes = variants.value("category_notes", json::object());
  for (const auto& [name, note] : notes.items()) {
    auto category = parse_intent(name);
    if (!category) throw ConfigError("template variants: unknown category " + name);
    t.category_notes[*category] = note.get<std::string>();
  }
  t.validate();
  return t;
}

std::string fixed2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

template <typename Range>
std::string join(const Range& items, std::string_view sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

}  // namespace

std::span<const std::string_view> heads_constraints() { return kConstraints; }

std::string_view to_string(HeadsSubject subject) {
  return kSubjectNames[static_cast<std::size_t>(subject)];
}

HeadsSubject heads_subject_for(IntentCategory category) {
  switch (category) {
    case IntentCategory::math:
      return HeadsSubject::math;
    case IntentCategory::chinese:
      return HeadsSubject::chinese;
    case IntentCategory::science:
      return HeadsSubject::science;
    case IntentCategory::writing:
    case IntentCategory::reading:
    case IntentCategory::emotional:
    case IntentCategory::general:
      break;
  }
  return HeadsSubject::general;
}

void TemplateSet::validate() const {
  for (auto constraint : kConstraints) {
    if (base.find(constraint) == std::string::npos) {
      throw ConfigError("base template lacks constraint: " + std::string(constraint));
    }
  }
  std::size_t last = 0;
  for (auto anchor : {kExtensionAnchor, kSummaryAnchor, kStrategyAnchor}) {
    const auto pos = base.find(anchor);
    if (pos == std::string::npos || pos < last) {
      throw ConfigError("base template: anchor " + std::string(anchor) + " missing or out of order");
    }
    last = pos;
  }
  for (auto subject : {HeadsSubject::math, HeadsSubject::chinese, HeadsSubject::science,
                       HeadsSubject::general}) {
    if (!extensions.contains(subject)) {
      throw ConfigError("missing subject template: " + std::string(to_string(subject)));
    }
  }
}

const TemplateSet& default_templates() {
  static const TemplateSet templates = [] {
    std::map<HeadsSubject, std::string> ext;
    for (auto subject : {HeadsSubject::math, HeadsSubject::chinese, HeadsSubject::science,
                         HeadsSubject::general}) {
      ext[subject] = std::string(
          detail::embedded_file("templates/heads/" + std::string(to_string(subject)) + ".txt"));
    }
    return parse_templates(std::string(detail::embedded_file("templates/heads/base.txt")),
                           std::move(ext),
                           json::parse(detail::embedded_file("templates/heads/variants.json")));
  }();
  return templates;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  std::map<HeadsSubject, std::string> ext;
  for (auto subject : {HeadsSubject::math, HeadsSubject::chinese, HeadsSubject::science,
                       HeadsSubject::general}) {
    ext[subject] = read_file(dir / (std::string(to_string(subject)) + ".txt"));
  }
  try {
    return parse_templates(read_file(dir / "base.txt"), std::move(ext),
                           json::parse(read_file(dir / "variants.json")));
  } catch (const json::exception& e) {
    throw ConfigError("malformed template variants in " + dir.string() + ": " + e.what());
  }
}

const std::string* PromptBundle::section(PromptSection which) const {
  for (const auto& [kind, text] : sections) {
    if (kind == which) return &text;
  }
  return nullptr;
}

std::string render_learner_summary(const LearnerProfile& p) {
  std::ostringstream out;
  out << "Grade: " << p.contextual.grade << '\n';
  out << "Subject focus: "
      << (p.contextual.subject_focus.empty() ? "none" : join(p.contextual.subject_focus, ", "))
      << '\n';
  out << "Learning goal: "
      << (p.contextual.learning_goal.empty() ? "not set" : p.contextual.learning_goal) << '\n';
  out << "Bloom level: " << to_string(p.cognitive.bloom_level) << '\n';
  out << "Current mood: " << to_string(p.emotional.current_mood) << '\n';
  out << "Self-efficacy: " << fixed2(p.emotional.self_efficacy.value()) << '\n';
  out << "Motivation: " << fixed2(p.emotional.motivation.value()) << '\n';
  out << "Frustration count: " << p.emotional.frustration_count << '\n';
  out << "Weak topics: "
      << (p.cognitive.weak_topics.empty() ? "none" : join(p.cognitive.weak_topics, ", ")) << '\n';
  out << "Preferred strategy: " << to_string(p.metacognitive.preferred_strategy) << '\n';
  out << "Sessions so far: " << p.behavioral.session_count << '\n';
  return out.str();
}

PromptAssembler::PromptAssembler() : PromptAssembler(default_templates()) {}

PromptAssembler::PromptAssembler(TemplateSet templates, PromptOptions options)
    : templates_(std::move(templates)), options_(std::move(options)) {
  templates_.validate();
  if (!templates_.teaching_styles.contains(options_.teaching_style)) {
    throw ConfigError("unknown teaching style: " + options_.teaching_style);
  }
  if (!templates_.detail_levels.contains(options_.detail_level)) {
    throw ConfigError("unknown detail level: " + options_.detail_level);
  }
}

PromptBundle PromptAssembler::compose(IntentCategory subject, const LearnerProfile& profile,
                                      const StrategyBlock& strategy) const {
  std::string extension = templates_.extensions.at(heads_subject_for(subject));
  if (auto it = templates_.category_notes.find(subject); it != templates_.category_notes.end()) {
    extension += '\n';
    extension += it->second;
  }

  std::string text = templates_.base;
  replace_once(text, kStyleAnchor, templates_.teaching_styles.at(options_.teaching_style));
  replace_once(text, kDetailAnchor, templates_.detail_levels.at(options_.detail_level));
  replace_once(text, kExtensionAnchor, extension);

  const auto summary = trim_trailing(render_learner_summary(profile));
  const auto summary_at = text.find(kSummaryAnchor);
  const auto heads = trim_trailing(text.substr(0, summary_at));

  replace_once(text, kSummaryAnchor, summary);
  const auto block = trim_trailing(strategy.rendered);
  if (block.empty()) {
    remove_anchor_line(text, kStrategyAnchor);
  } else {
    replace_once(text, kStrategyAnchor, block);
  }

  PromptBundle bundle;
  bundle.system_prompt = trim_trailing(std::move(text)) + '\n';
  bundle.sections.emplace_back(PromptSection::heads, heads);
  bundle.sections.emplace_back(PromptSection::profile_summary, summary);
  if (!block.empty()) bundle.sections.emplace_back(PromptSection::strategy_block, block);
  return bundle;
}

PromptBundle compose_system_prompt(IntentCategory subject, const LearnerProfile& profile,
                                   const StrategyBlock& strategy) {
  static const PromptAssembler assembler;
  return assembler.compose(subject, profile, strategy);
}

}  // namespace tutor
