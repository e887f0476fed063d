#include "promptgrade/persistence.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace promptgrade {

namespace fs = std::filesystem;

struct Store::CourseLog {
  fs::path path;
  int fd = -1;
  bool needs_newline = false;
};

namespace {

constexpr std::string_view kSubmissionsPrefix = "submissions-";
constexpr std::string_view kRobustnessPrefix = "robustness-";
constexpr std::string_view kLogSuffix = ".jsonl";

std::string progress_key(std::string_view user_id, std::string_view course_id) {
  return std::string(user_id) + '\x1f' + std::string(course_id);
}

[[noreturn]] void throw_io(const std::string& what, int err) {
  if (err == ENOSPC || err == EDQUOT) throw StorageFull(what + ": " + std::strerror(err));
  throw WriteFailure(what + ": " + std::strerror(err));
}

Json to_json(const UserRecord& u) {
  return {{"user_id", u.user_id},
          {"display_name", u.display_name},
          {"role", to_string(u.role)},
          {"auth_token_hash", u.auth_token_hash}};
}

UserRecord user_from_json(const Json& j) {
  return UserRecord{j.at("user_id").get<std::string>(), j.value("display_name", ""),
                    role_from_string(j.at("role").get<std::string>()), j.at("auth_token_hash").get<std::string>()};
}

Json to_json(const RobustnessRecord& r) {
  return {{"schema_version", kSubmissionSchemaVersion},
          {"course_id", r.course_id},
          {"problem_id", r.problem_id},
          {"prompt_hash", r.prompt_hash},
          {"word_count", r.word_count},
          {"k", r.k},
          {"passes", r.passes},
          {"recorded_at", format_timestamp(r.recorded_at)}};
}

RobustnessRecord robustness_from_json(const Json& j) {
  return RobustnessRecord{j.at("course_id").get<std::string>(),
                          j.at("problem_id").get<std::string>(),
                          j.at("prompt_hash").get<std::string>(),
                          j.at("word_count").get<int>(),
                          j.at("k").get<int>(),
                          j.at("passes").get<int>(),
                          parse_timestamp(j.at("recorded_at").get<std::string>())};
}

/// Parse a JSONL file; calls `on_record` for each good line. Returns whether
/// the file ends without a trailing newline.
template <typename F>
bool replay_lines(const fs::path& path, std::vector<std::string>& warnings, F on_record) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < data.size()) {
    ++line_no;
    const auto nl = data.find('\n', start);
    const bool last_unterminated = nl == std::string::npos;
    const auto line = data.substr(start, last_unterminated ? std::string::npos : nl - start);
    start = last_unterminated ? data.size() : nl + 1;
    if (line.empty()) continue;
    try {
      on_record(Json::parse(line));
    } catch (const std::exception& e) {
      std::string msg = path.filename().string() + ":" + std::to_string(line_no) + ": ";
      msg += last_unterminated ? "truncated final line skipped" : std::string("unreadable line skipped (") + e.what() + ")";
      warnings.push_back(msg);
      std::cerr << "warning: " << msg << "\n";
    }
  }
  return !data.empty() && data.back() != '\n';
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::Instructor ? "instructor" : "student"; }

Role role_from_string(std::string_view text) {
  if (text == "instructor") return Role::Instructor;
  if (text == "student") return Role::Student;
  throw std::invalid_argument("unknown role: " + std::string(text));
}

Store::Store(fs::path data_dir, StoreOptions options) : dir_(std::move(data_dir)), options_(options) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw WriteFailure("cannot create data directory " + dir_.string() + ": " + ec.message());
  load_all();
}

Store::~Store() {
  for (auto* logs : {&submission_logs_, &robustness_logs_}) {
    for (auto& [id, log] : *logs) {
      if (log.fd >= 0) ::close(log.fd);
    }
  }
}

void Store::load_all() {
  if (fs::exists(dir_ / "users.json")) {
    std::ifstream in(dir_ / "users.json");
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw WriteFailure("users.json is not valid JSON");
    for (const auto& u : doc.at("users")) {
      auto user = user_from_json(u);
      users_[user.user_id] = std::move(user);
    }
  }
  if (fs::exists(dir_ / "progress.json")) {
    std::ifstream in(dir_ / "progress.json");
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw WriteFailure("progress.json is not valid JSON");
    for (const auto& p : doc.at("progress")) {
      auto state = progress_from_json(p);
      progress_[progress_key(state.user_id, state.course_id)] = std::move(state);
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == kLogSuffix) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto name = path.filename().string();
    const auto stem = name.substr(0, name.size() - kLogSuffix.size());
    if (stem.rfind(kSubmissionsPrefix, 0) == 0) {
      auto& log = log_for(stem.substr(kSubmissionsPrefix.size()), kSubmissionsPrefix, submission_logs_);
      log.needs_newline = replay_lines(path, warnings_, [this, &path](const Json& j) {
        auto s = submission_from_json(j);
        if (submission_ids_.contains(s.submission_id)) {
          throw std::invalid_argument("duplicate submission_id " + s.submission_id + " in " + path.string());
        }
        submission_ids_[s.submission_id] = submissions_.size();
        submissions_.push_back(std::move(s));
      });
    } else if (stem.rfind(kRobustnessPrefix, 0) == 0) {
      auto& log = log_for(stem.substr(kRobustnessPrefix.size()), kRobustnessPrefix, robustness_logs_);
      log.needs_newline = replay_lines(path, warnings_, [this](const Json& j) {
        robustness_.push_back(robustness_from_json(j));
      });
    }
  }
}

Store::CourseLog& Store::log_for(const std::string& course_id, std::string_view prefix,
                                 std::map<std::string, CourseLog, std::less<>>& logs) {
  auto it = logs.find(course_id);
  if (it == logs.end()) {
    CourseLog log;
    log.path = dir_ / (std::string(prefix) + course_id + std::string(kLogSuffix));
    it = logs.emplace(course_id, std::move(log)).first;
  }
  return it->second;
}

void Store::append_line(CourseLog& log, const std::string& line) {
  if (log.fd < 0) {
    log.fd = ::open(log.path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (log.fd < 0) throw_io("cannot open " + log.path.string(), errno);
  }
  std::string data;
  if (log.needs_newline) data.push_back('\n');
  data += line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const auto w = ::write(log.fd, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      // A torn write leaves a partial line; start the next record fresh.
      log.needs_newline = off > 0 || log.needs_newline;
      throw_io("append to " + log.path.string() + " failed", err);
    }
    off += static_cast<std::size_t>(w);
  }
  log.needs_newline = false;
  if (options_.durable && ::fsync(log.fd) != 0) throw_io("fsync " + log.path.string() + " failed", errno);
}

void Store::write_snapshot(const fs::path& path, const Json& doc) {
  const auto tmp = fs::path(path.string() + ".tmp");
  const auto text = doc.dump(2) + "\n";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_io("cannot write " + tmp.string(), errno);
  std::size_t off = 0;
  while (off < text.size()) {
    const auto w = ::write(fd, text.data() + off, text.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw_io("cannot write " + tmp.string(), err);
    }
    off += static_cast<std::size_t>(w);
  }
  if (options_.durable) ::fsync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw WriteFailure("cannot replace " + path.string() + ": " + ec.message());
}

void Store::save_users_locked() {
  Json users = Json::array();
  for (const auto& [id, u] : users_) users.push_back(to_json(u));
  write_snapshot(dir_ / "users.json", {{"schema_version", kSubmissionSchemaVersion}, {"users", std::move(users)}});
}

void Store::add_user(const UserRecord& user) {
  if (user.user_id.empty()) throw WriteFailure("user_id must not be empty");
  std::lock_guard lock(mutex_);
  if (users_.contains(user.user_id)) throw WriteFailure("user already exists: " + user.user_id);
  users_[user.user_id] = user;
  try {
    save_users_locked();
  } catch (...) {
    users_.erase(user.user_id);
    throw;
  }
}

std::optional<UserRecord> Store::find_user(std::string_view user_id) const {
  std::lock_guard lock(mutex_);
  const auto it = users_.find(user_id);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

std::vector<UserRecord> Store::users() const {
  std::lock_guard lock(mutex_);
  std::vector<UserRecord> out;
  for (const auto& [id, u] : users_) out.push_back(u);
  return out;
}

std::string Store::append_submission(const Submission& submission) {
  if (submission.submission_id.empty() || submission.course_id.empty()) {
    throw WriteFailure("submission needs submission_id and course_id");
  }
  const auto line = to_json(submission).dump();
  std::lock_guard lock(mutex_);
  if (submission_ids_.contains(submission.submission_id)) {
    throw WriteFailure("duplicate submission_id: " + submission.submission_id);
  }
  append_line(log_for(submission.course_id, kSubmissionsPrefix, submission_logs_), line);
  submission_ids_[submission.submission_id] = submissions_.size();
  submissions_.push_back(submission);
  return submission.submission_id;
}

std::vector<Submission> Store::query_submissions(const SubmissionFilter& filter) const {
  std::vector<Submission> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& s : submissions_) {
      if (filter.course_id && s.course_id != *filter.course_id) continue;
      if (filter.problem_id && s.problem_id != *filter.problem_id) continue;
      if (filter.user_id && s.user_id != *filter.user_id) continue;
      out.push_back(s);
    }
  }
  std::sort(out.begin(), out.end(), [](const Submission& a, const Submission& b) {
    if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
    return a.submission_id < b.submission_id;
  });
  return out;
}

std::size_t Store::count_attempts(std::string_view user_id, std::string_view course_id,
                                  std::string_view problem_id) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(submissions_.begin(), submissions_.end(), [&](const Submission& s) {
    return s.user_id == user_id && s.course_id == course_id && s.problem_id == problem_id;
  }));
}

bool Store::has_log(std::string_view course_id) const {
  std::lock_guard lock(mutex_);
  const auto it = submission_logs_.find(course_id);
  return it != submission_logs_.end() && fs::exists(it->second.path);
}

ProgressState Store::load_progress(std::string_view user_id, std::string_view course_id) const {
  std::lock_guard lock(mutex_);
  if (!users_.contains(user_id)) throw UnknownUser(std::string(user_id));
  const auto it = progress_.find(progress_key(user_id, course_id));
  if (it != progress_.end()) return it->second;
  ProgressState fresh;
  fresh.user_id = std::string(user_id);
  fresh.course_id = std::string(course_id);
  return fresh;
}

void Store::save_progress(const ProgressState& state) {
  std::lock_guard lock(mutex_);
  if (!users_.contains(state.user_id)) throw UnknownUser(state.user_id);
  const auto key = progress_key(state.user_id, state.course_id);
  const auto previous = progress_.find(key);
  std::optional<ProgressState> backup;
  if (previous != progress_.end()) backup = previous->second;
  progress_[key] = state;

  Json all = Json::array();
  for (const auto& [k, p] : progress_) all.push_back(to_json(p));
  try {
    write_snapshot(dir_ / "progress.json", {{"schema_version", kSubmissionSchemaVersion}, {"progress", std::move(all)}});
  } catch (...) {
    if (backup) {
      progress_[key] = *backup;
    } else {
      progress_.erase(key);
    }
    throw;
  }
}

void Store::append_robustness(const RobustnessRecord& record) {
  const auto line = to_json(record).dump();
  std::lock_guard lock(mutex_);
  append_line(log_for(record.course_id, kRobustnessPrefix, robustness_logs_), line);
  robustness_.push_back(record);
}

std::vector<RobustnessRecord> Store::robustness_runs(std::string_view course_id) const {
  std::lock_guard lock(mutex_);
  std::vector<RobustnessRecord> out;
  for (const auto& r : robustness_) {
    if (r.course_id == course_id) out.push_back(r);
  }
  return out;
}

std::vector<std::string> Store::warnings() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

}  // namespace promptgrade
