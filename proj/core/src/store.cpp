#include "tutor/store.hpp"

#include <algorithm>

#include <sqlite3.h>

#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kCategoryNames[] = {"student_profile", "learning_progress",
                                               "session_summary", "skill_memory"};

void check_record(const MemoryRecord& record) {
  if (record.student_id.empty()) throw PreconditionError("memory record without student_id");
  if (record.content.empty()) throw PreconditionError("memory record with empty content");
}

json parse_document(const std::string& text, const char* column) {
  if (text.empty()) return json::object();
  try {
    auto doc = json::parse(text);
    if (!doc.is_object()) throw StorageError(std::string("column ") + column + " is not an object");
    return doc;
  } catch (const json::exception& e) {
    throw StorageError(std::string("corrupt ") + column + " document: " + e.what());
  }
}

}  // namespace

std::string_view to_string(MemoryCategory category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<MemoryCategory> parse_memory_category(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kCategoryNames); ++i) {
    if (kCategoryNames[i] == text) return static_cast<MemoryCategory>(i);
  }
  return std::nullopt;
}

ProfileRow to_row(const LearnerProfile& p) {
  validate(p);
  return {p.student_id,
          json(p.cognitive).dump(),
          json(p.behavioral).dump(),
          json(p.emotional).dump(),
          json(p.metacognitive).dump(),
          json(p.contextual).dump(),
          to_millis(p.updated_at)};
}

LearnerProfile from_row(const ProfileRow& row) {
  LearnerProfile p;
  p.student_id = row.student_id;
  try {
    p.cognitive = parse_document(row.cognitive, "cognitive").get<CognitiveDim>();
    p.behavioral = parse_document(row.behavioral, "behavioral").get<BehavioralDim>();
    p.emotional = parse_document(row.emotional, "emotional").get<EmotionalDim>();
    p.metacognitive = parse_document(row.metacognitive, "metacognitive").get<MetacognitiveDim>();
    p.contextual = parse_document(row.contextual, "contextual").get<ContextualDim>();
  } catch (const json::exception& e) {
    throw StorageError("profile row for " + row.student_id + " has a bad field: " + e.what());
  } catch (const PreconditionError& e) {
    throw StorageError("profile row for " + row.student_id + ": " + e.what());
  }
  p.updated_at = from_millis(row.updated_at);
  return p;
}

// --- in-memory -------------------------------------------------------------------------

void InMemoryStore::save_profile(const LearnerProfile& profile) {
  auto row = to_row(profile);
  std::lock_guard lock(mutex_);
  profiles_[row.student_id] = std::move(row);
}

std::optional<LearnerProfile> InMemoryStore::load_profile(const std::string& student_id) const {
  std::lock_guard lock(mutex_);
  auto it = profiles_.find(student_id);
  if (it == profiles_.end()) return std::nullopt;
  return from_row(it->second);
}

std::vector<std::string> InMemoryStore::student_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, row] : profiles_) ids.push_back(id);
  return ids;
}

void InMemoryStore::append_memory(const MemoryRecord& record) {
  check_record(record);
  std::lock_guard lock(mutex_);
  memories_.push_back(record);
}

std::vector<MemoryRecord> InMemoryStore::list_memories(const std::string& student_id,
                                                       MemoryCategory category) const {
  std::lock_guard lock(mutex_);
  std::vector<MemoryRecord> out;
  for (auto it = memories_.rbegin(); it != memories_.rend(); ++it) {
    if (it->student_id == student_id && it->category == category) out.push_back(*it);
  }
  std::stable_sort(out.begin(), out.end(), [](const MemoryRecord& a, const MemoryRecord& b) {
    return a.created_at > b.created_at;
  });
  return out;
}

void InMemoryStore::put_row(ProfileRow row) {
  std::lock_guard lock(mutex_);
  profiles_[row.student_id] = std::move(row);
}

// --- sqlite ----------------------------------------------------------------------------

namespace {

struct DbCloser {
  void operator()(sqlite3* db) const { sqlite3_close(db); }
};

class Statement {
public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw StorageError(std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int index, const std::string& value) {
    check(sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int index, std::int64_t value) {
    check(sqlite3_bind_int64(stmt_, index, value));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw StorageError(std::string("sqlite step failed: ") + sqlite3_errmsg(db_));
  }

  std::string text(int column) const {
    const auto* p = sqlite3_column_text(stmt_, column);
    if (p == nullptr) return {};
    return {reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, column))};
  }
  std::int64_t int64(int column) const { return sqlite3_column_int64(stmt_, column); }

private:
  void check(int rc) const {
    if (rc != SQLITE_OK) throw StorageError(std::string("sqlite bind failed: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : "unknown error";
    sqlite3_free(err);
    throw StorageError("sqlite: " + message);
  }
}

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS learner_profile (
  student_id    TEXT PRIMARY KEY,
  cognitive     TEXT NOT NULL DEFAULT '{}',
  behavioral    TEXT NOT NULL DEFAULT '{}',
  emotional     TEXT NOT NULL DEFAULT '{}',
  metacognitive TEXT NOT NULL DEFAULT '{}',
  contextual    TEXT NOT NULL DEFAULT '{}',
  updated_at    INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS memories (
  id         INTEGER PRIMARY KEY AUTOINCREMENT,
  student_id TEXT NOT NULL,
  category   TEXT NOT NULL CHECK (category IN
               ('student_profile', 'learning_progress', 'session_summary', 'skill_memory')),
  content    TEXT NOT NULL,
  created_at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS memories_by_student ON memories (student_id, category, created_at);
)sql";

}  // namespace

struct SqliteStore::Impl {
  std::unique_ptr<sqlite3, DbCloser> db;
  mutable std::mutex mutex;
};

SqliteStore::SqliteStore(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &raw,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                                 nullptr);
  impl_->db.reset(raw);
  if (rc != SQLITE_OK) {
    throw StorageError("cannot open store " + path.string() + ": " +
                       (raw ? sqlite3_errmsg(raw) : "out of memory"));
  }
  sqlite3_busy_timeout(raw, 5000);
  exec(raw, kSchema);
}

SqliteStore::~SqliteStore() = default;

void SqliteStore::put_row(const ProfileRow& row) {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db.get(),
               "INSERT INTO learner_profile (student_id, cognitive, behavioral, emotional, "
               "metacognitive, contextual, updated_at) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7) "
               "ON CONFLICT(student_id) DO UPDATE SET cognitive = excluded.cognitive, "
               "behavioral = excluded.behavioral, emotional = excluded.emotional, "
               "metacognitive = excluded.metacognitive, contextual = excluded.contextual, "
               "updated_at = excluded.updated_at");
  st.bind(1, row.student_id)
      .bind(2, row.cognitive)
      .bind(3, row.behavioral)
      .bind(4, row.emotional)
      .bind(5, row.metacognitive)
      .bind(6, row.contextual)
      .bind(7, row.updated_at);
  st.step();
}

void SqliteStore::save_profile(const LearnerProfile& profile) { put_row(to_row(profile)); }

std::optional<LearnerProfile> SqliteStore::load_profile(const std::string& student_id) const {
  ProfileRow row;
  {
    std::lock_guard lock(impl_->mutex);
    Statement st(impl_->db.get(),
                 "SELECT student_id, cognitive, behavioral, emotional, metacognitive, contextual, "
                 "updated_at FROM learner_profile WHERE student_id = ?1");
    st.bind(1, student_id);
    if (!st.step()) return std::nullopt;
    row = {st.text(0), st.text(1), st.text(2), st.text(3), st.text(4), st.text(5), st.int64(6)};
  }
  return from_row(row);
}

std::vector<std::string> SqliteStore::student_ids() const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db.get(), "SELECT student_id FROM learner_profile ORDER BY student_id");
  std::vector<std::string> ids;
  while (st.step()) ids.push_back(st.text(0));
  return ids;
}

void SqliteStore::append_memory(const MemoryRecord& record) {
  check_record(record);
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db.get(),
               "INSERT INTO memories (student_id, category, content, created_at) "
               "VALUES (?1, ?2, ?3, ?4)");
  st.bind(1, record.student_id)
      .bind(2, std::string(to_string(record.category)))
      .bind(3, record.content)
      .bind(4, to_millis(record.created_at));
  st.step();
}

std::vector<MemoryRecord> SqliteStore::list_memories(const std::string& student_id,
                                                     MemoryCategory category) const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db.get(),
               "SELECT content, created_at FROM memories WHERE student_id = ?1 AND category = ?2 "
               "ORDER BY created_at DESC, id DESC");
  st.bind(1, student_id).bind(2, std::string(to_string(category)));
  std::vector<MemoryRecord> out;
  while (st.step()) out.push_back({student_id, category, st.text(0), from_millis(st.int64(1))});
  return out;
}

std::shared_ptr<Store> open_store(const std::string& location) {
  if (location.empty() || location == ":memory:") return std::make_shared<InMemoryStore>();
  return std::make_shared<SqliteStore>(location);
}

}  // namespace tutor
