#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutor {

struct KnowledgeEntry {
  std::string id;
  std::string title;
  std::string text;
  std::vector<std::string> keywords;
  int grade_min = 1;
  int grade_max = 12;
};

// Read-only, curated corpus (JSON lines: id, title, keywords, grade_band [min, max], text).
class KnowledgeBase {
public:
  static KnowledgeBase from_jsonl(std::string_view text);
  static KnowledgeBase load(const std::filesystem::path& path);
  static const KnowledgeBase& bundled();

  // Entries with a keyword occurring in the query and a grade band covering `grade`.
  std::vector<KnowledgeEntry> lookup(std::string_view query, int grade) const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<KnowledgeEntry>& entries() const noexcept { return entries_; }

private:
  std::vector<KnowledgeEntry> entries_;
};

using ToolHandler = std::function<std::string(const nlohmann::json& args)>;

struct ToolSpec {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON-schema style description of `args`
  ToolHandler handler;
};

// Fixed set of handlers, registered at startup. Output is cut to `max_output_chars`.
class ToolRegistry {
public:
  explicit ToolRegistry(std::size_t max_output_chars = 1000);

  void add(ToolSpec spec);
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
  const ToolSpec& spec(std::string_view name) const;

  // Throws ToolError for an unknown tool or bad arguments.
  std::string dispatch(std::string_view name, const nlohmann::json& args) const;

  std::size_t max_output_chars() const noexcept { return max_output_chars_; }

private:
  std::size_t max_output_chars_;
  std::map<std::string, ToolSpec, std::less<>> tools_;
};

// calculator, knowledge_base, unit_converter, times_table.
ToolRegistry builtin_tools(std::shared_ptr<const KnowledgeBase> kb, std::size_t max_output_chars = 1000);

// Converts between metric length, mass and volume units and time units.
double convert_units(double value, std::string_view from, std::string_view to);

}  // namespace tutor
