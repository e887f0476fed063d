#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptgrade/clock.hpp"
#include "promptgrade/submission.hpp"

namespace promptgrade {

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StorageFull : public StorageError {
 public:
  using StorageError::StorageError;
};

class WriteFailure : public StorageError {
 public:
  using StorageError::StorageError;
};

class UnknownUser : public StorageError {
 public:
  explicit UnknownUser(const std::string& user_id) : StorageError("unknown user: " + user_id) {}
};

enum class Role { Student, Instructor };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct UserRecord {
  std::string user_id;
  std::string display_name;
  Role role = Role::Student;
  /// SHA-256 hex of the login secret.
  std::string auth_token_hash;

  bool operator==(const UserRecord&) const = default;
};

/// One robustness evaluation. Kept apart from the student submission log.
struct RobustnessRecord {
  std::string course_id;
  std::string problem_id;
  std::string prompt_hash;
  int word_count = 0;
  int k = 0;
  int passes = 0;
  Timestamp recorded_at{};

  bool operator==(const RobustnessRecord&) const = default;
};

struct SubmissionFilter {
  std::optional<std::string> course_id;
  std::optional<std::string> problem_id;
  std::optional<std::string> user_id;
};

struct StoreOptions {
  /// fsync after every append and snapshot write.
  bool durable = true;
};

/// Data directory layout:
///   submissions-<course_id>.jsonl   one Submission record per line
///   robustness-<course_id>.jsonl    one RobustnessRecord per line
///   users.json, progress.json       snapshots, replaced atomically
///
/// Appends are serialized by an internal lock; logs are never rewritten.
class Store {
 public:
  explicit Store(std::filesystem::path data_dir, StoreOptions options = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& data_dir() const { return dir_; }

  /// Throws WriteFailure if the id is taken.
  void add_user(const UserRecord& user);
  std::optional<UserRecord> find_user(std::string_view user_id) const;
  std::vector<UserRecord> users() const;

  /// Durable before returning. Throws WriteFailure (duplicate id, I/O error)
  /// or StorageFull.
  std::string append_submission(const Submission& submission);

  /// Ordered by submitted_at, then submission_id.
  std::vector<Submission> query_submissions(const SubmissionFilter& filter = {}) const;
  std::size_t count_attempts(std::string_view user_id, std::string_view course_id, std::string_view problem_id) const;
  bool has_log(std::string_view course_id) const;

  /// Fresh state for users without progress. Throws UnknownUser.
  ProgressState load_progress(std::string_view user_id, std::string_view course_id) const;
  void save_progress(const ProgressState& state);

  void append_robustness(const RobustnessRecord& record);
  std::vector<RobustnessRecord> robustness_runs(std::string_view course_id) const;

  /// Problems found while replaying logs (skipped lines).
  std::vector<std::string> warnings() const;

 private:
  struct CourseLog;

  void load_all();
  CourseLog& log_for(const std::string& course_id, std::string_view prefix,
                     std::map<std::string, CourseLog, std::less<>>& logs);
  void append_line(CourseLog& log, const std::string& line);
  void write_snapshot(const std::filesystem::path& path, const Json& doc);
  void save_users_locked();

  std::filesystem::path dir_;
  StoreOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, UserRecord, std::less<>> users_;
  std::map<std::string, ProgressState> progress_;
  std::map<std::string, CourseLog, std::less<>> submission_logs_;
  std::map<std::string, CourseLog, std::less<>> robustness_logs_;
  std::vector<Submission> submissions_;
  std::map<std::string, std::size_t, std::less<>> submission_ids_;
  std::vector<RobustnessRecord> robustness_;
  std::vector<std::string> warnings_;
};

}  // namespace promptgrade
