#include "tutor/tools.hpp"

#include <fstream>
#include <sstream>

#include "embedded_data.hpp"
#include "tutor/calculator.hpp"
#include "tutor/errors.hpp"
#include "tutor/sensory.hpp"

namespace tutor {

using nlohmann::json;

KnowledgeBase KnowledgeBase::from_jsonl(std::string_view text) {
  KnowledgeBase kb;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = json::parse(line);
      KnowledgeEntry e;
      e.id = doc.at("id").get<std::string>();
      e.title = doc.value("title", e.id);
      e.text = doc.at("text").get<std::string>();
      for (const auto& kw : doc.at("keywords")) e.keywords.push_back(normalize_text(kw.get<std::string>()));
      const auto band = doc.at("grade_band").get<std::vector<int>>();
      if (band.size() != 2 || band[0] > band[1]) throw ConfigError("bad grade_band");
      e.grade_min = band[0];
      e.grade_max = band[1];
      kb.entries_.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw ConfigError("knowledge corpus line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open knowledge corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

const KnowledgeBase& KnowledgeBase::bundled() {
  static const KnowledgeBase kb = from_jsonl(detail::embedded_file("knowledge/corpus.jsonl"));
  return kb;
}

std::vector<KnowledgeEntry> KnowledgeBase::lookup(std::string_view query, int grade) const {
  if (grade < 1 || grade > 12) throw PreconditionError("grade must be within 1-12");
  const auto q = normalize_text(query);
  std::vector<KnowledgeEntry> out;
  if (q.empty()) return out;
  for (const auto& e : entries_) {
    if (grade < e.grade_min || grade > e.grade_max) continue;
    for (const auto& kw : e.keywords) {
      if (q.find(kw) != std::string::npos) {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

ToolRegistry::ToolRegistry(std::size_t max_output_chars) : max_output_chars_(max_output_chars) {}

void ToolRegistry::add(ToolSpec spec) {
  if (spec.name.empty() || !spec.handler) throw ConfigError("tool spec needs a name and a handler");
  const auto name = spec.name;
  if (!tools_.emplace(name, std::move(spec)).second) {
    throw ConfigError("tool registered twice: " + name);
  }
}

bool ToolRegistry::contains(std::string_view name) const { return tools_.find(name) != tools_.end(); }

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, spec] : tools_) out.push_back(name);
  return out;
}

const ToolSpec& ToolRegistry::spec(std::string_view name) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) throw ToolError("unknown tool: " + std::string(name));
  return it->second;
}

std::string ToolRegistry::dispatch(std::string_view name, const json& args) const {
  const auto& tool = spec(name);
  std::string out;
  try {
    out = tool.handler(args);
  } catch (const json::exception& e) {
    throw ToolError("bad arguments for " + tool.name + ": " + e.what());
  }
  if (out.size() > max_output_chars_) {
    out.resize(max_output_chars_);
    // don't leave a split UTF-8 sequence at the cut
    std::size_t lead = out.size();
    while (lead > 0 && (static_cast<unsigned char>(out[lead - 1]) & 0xC0) == 0x80) --lead;
    if (lead > 0) {
      const auto c = static_cast<unsigned char>(out[lead - 1]);
      const std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      if (out.size() - (lead - 1) < len) out.resize(lead - 1);
    }
  }
  return out;
}

namespace {

struct Unit {
  std::string_view name;
  std::string_view quantity;
  double to_base;
};

constexpr Unit kUnits[] = {
    {"mm", "length", 0.001}, {"cm", "length", 0.01},  {"m", "length", 1.0},
    {"km", "length", 1000.0}, {"g", "mass", 1.0},     {"kg", "mass", 1000.0},
    {"ml", "volume", 0.001}, {"l", "volume", 1.0},    {"s", "time", 1.0},
    {"min", "time", 60.0},   {"h", "time", 3600.0},
};

const Unit& find_unit(std::string_view name) {
  for (const auto& u : kUnits) {
    if (u.name == name) return u;
  }
  throw ToolError("unknown unit: " + std::string(name));
}

json object_schema(json properties, std::vector<std::string> required) {
  return json{{"type", "object"}, {"properties", std::move(properties)}, {"required", std::move(required)}};
}

}  // namespace

double convert_units(double value, std::string_view from, std::string_view to) {
  const auto& a = find_unit(from);
  const auto& b = find_unit(to);
  if (a.quantity != b.quantity) {
    throw ToolError("cannot convert " + std::string(a.quantity) + " to " + std::string(b.quantity));
  }
  return value * a.to_base / b.to_base;
}

ToolRegistry builtin_tools(std::shared_ptr<const KnowledgeBase> kb, std::size_t max_output_chars) {
  ToolRegistry reg(max_output_chars);

  reg.add({"calculator", "Evaluates +, -, *, / arithmetic with parentheses.",
           object_schema({{"expression", {{"type", "string"}}}}, {"expression"}),
           [](const json& args) {
             return format_number(eval_expression(args.at("expression").get<std::string>()));
           }});

  reg.add({"knowledge_base", "Looks up curated, grade-appropriate explanations.",
           object_schema({{"query", {{"type", "string"}}}, {"grade", {{"type", "integer"}}}},
                         {"query", "grade"}),
           [kb = std::move(kb)](const json& args) {
             const auto hits = kb->lookup(args.at("query").get<std::string>(), args.at("grade").get<int>());
             if (hits.empty()) return std::string("No entries found.");
             std::string out;
             for (const auto& e : hits) {
               if (!out.empty()) out += "\n\n";
               out += e.title + ": " + e.text;
             }
             return out;
           }});

  reg.add({"unit_converter", "Converts metric length, mass, volume and time units.",
           object_schema({{"value", {{"type", "number"}}},
                          {"from", {{"type", "string"}}},
                          {"to", {{"type", "string"}}}},
                         {"value", "from", "to"}),
           [](const json& args) {
             const auto from = args.at("from").get<std::string>();
             const auto to = args.at("to").get<std::string>();
             const double value = args.at("value").get<double>();
             return format_number(value) + " " + from + " = " +
                    format_number(convert_units(value, from, to)) + " " + to;
           }});

  reg.add({"times_table", "Prints a multiplication table drill.",
           object_schema({{"number", {{"type", "integer"}}}, {"up_to", {{"type", "integer"}}}},
                         {"number"}),
           [](const json& args) {
             const int n = args.at("number").get<int>();
             const int up_to = args.value("up_to", 10);
             if (n < 1 || n > 12 || up_to < 1 || up_to > 12) {
               throw ToolError("times_table takes numbers between 1 and 12");
             }
             std::string out;
             for (int i = 1; i <= up_to; ++i) {
               out += std::to_string(n) + " x " + std::to_string(i) + " = " + std::to_string(n * i) + '\n';
             }
             return out;
           }});

  return reg;
}

}  // namespace tutor
