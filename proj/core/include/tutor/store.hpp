#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tutor/profile.hpp"

namespace tutor {

enum class MemoryCategory { student_profile, learning_progress, session_summary, skill_memory };

std::string_view to_string(MemoryCategory category);
std::optional<MemoryCategory> parse_memory_category(std::string_view text);

struct MemoryRecord {
  std::string student_id;
  MemoryCategory category = MemoryCategory::session_summary;
  std::string content;
  Timestamp created_at{};

  friend bool operator==(const MemoryRecord&, const MemoryRecord&) = default;
};

// A profile row: the five dimension documents as stored.
struct ProfileRow {
  std::string student_id;
  std::string cognitive;
  std::string behavioral;
  std::string emotional;
  std::string metacognitive;
  std::string contextual;
  std::int64_t updated_at = 0;
};

ProfileRow to_row(const LearnerProfile& profile);
LearnerProfile from_row(const ProfileRow& row);

// Two logical tables: one learner-profile row per student, and an append-only
// four-category memory log. Implementations serialize writes internally.
class Store {
public:
  virtual ~Store() = default;

  // Upsert by student_id.
  virtual void save_profile(const LearnerProfile& profile) = 0;
  virtual std::optional<LearnerProfile> load_profile(const std::string& student_id) const = 0;
  virtual std::vector<std::string> student_ids() const = 0;

  virtual void append_memory(const MemoryRecord& record) = 0;
  // Newest first.
  virtual std::vector<MemoryRecord> list_memories(const std::string& student_id,
                                                  MemoryCategory category) const = 0;
};

class InMemoryStore final : public Store {
public:
  void save_profile(const LearnerProfile& profile) override;
  std::optional<LearnerProfile> load_profile(const std::string& student_id) const override;
  std::vector<std::string> student_ids() const override;
  void append_memory(const MemoryRecord& record) override;
  std::vector<MemoryRecord> list_memories(const std::string& student_id,
                                          MemoryCategory category) const override;

  // Direct row access, for tests that plant rows written by other versions.
  void put_row(ProfileRow row);

private:
  mutable std::mutex mutex_;
  std::map<std::string, ProfileRow> profiles_;
  std::vector<MemoryRecord> memories_;
};

// Single-file SQLite database with tables `learner_profile` and `memories`.
class SqliteStore final : public Store {
public:
  explicit SqliteStore(const std::filesystem::path& path);
  ~SqliteStore() override;
  SqliteStore(const SqliteStore&) = delete;
  SqliteStore& operator=(const SqliteStore&) = delete;

  void save_profile(const LearnerProfile& profile) override;
  std::optional<LearnerProfile> load_profile(const std::string& student_id) const override;
  std::vector<std::string> student_ids() const override;
  void append_memory(const MemoryRecord& record) override;
  std::vector<MemoryRecord> list_memories(const std::string& student_id,
                                          MemoryCategory category) const override;

  void put_row(const ProfileRow& row);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ":memory:" opens an in-memory store; anything else a SQLite file.
std::shared_ptr<Store> open_store(const std::string& location);

}  // namespace tutor
