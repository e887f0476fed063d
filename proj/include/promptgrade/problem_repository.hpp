#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptgrade/problem.hpp"
#include "promptgrade/sandbox.hpp"

namespace promptgrade {

class RepositoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestMissing : public RepositoryError {
 public:
  explicit ManifestMissing(const std::filesystem::path& path)
      : RepositoryError("course manifest not found: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ManifestMalformed : public RepositoryError {
 public:
  ManifestMalformed(std::string field, std::string reason)
      : RepositoryError("malformed manifest field '" + field + "': " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class AssetMissing : public RepositoryError {
 public:
  explicit AssetMissing(const std::filesystem::path& path)
      : RepositoryError("asset not found: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class DuplicateProblemId : public RepositoryError {
 public:
  explicit DuplicateProblemId(const std::string& id) : RepositoryError("duplicate problem id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class IndexOutOfRange : public std::out_of_range {
 public:
  IndexOutOfRange(long long index, std::size_t size)
      : std::out_of_range("problem index " + std::to_string(index) + " out of range (course has " +
                          std::to_string(size) + " problems)") {}
};

class SandboxUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kManifestName = "course.json";

/// Parse a manifest document. Asset existence is checked against `root`.
Course parse_course(std::string_view manifest_text, const std::filesystem::path& root);

/// Load `<root>/course.json`.
Course load_course(const std::filesystem::path& root);

const PromptProblem& get_problem(const Course& course, long long index);

struct ReferenceSolution {
  std::string source_code;
};

/// Reads `<root>/solutions/<problem_id>.py`; nullopt if absent.
std::optional<ReferenceSolution> load_reference_solution(const Course& course, const PromptProblem& problem);

struct ValidationReport {
  std::vector<std::string> failing_test_ids;
  /// Outcome per failing test, for diagnostics.
  std::vector<TestOutcome> failures;

  bool ok() const { return failing_test_ids.empty(); }
};

/// Run the reference solution through the sandbox; empty report iff every
/// test passes. Throws SandboxUnavailable.
ValidationReport validate_problem(const PromptProblem& problem, const ReferenceSolution& reference,
                                  Sandbox& sandbox, const ExecutionLimits& limits = {});

/// Loaded courses by id. Each course is immutable; reload swaps it whole.
class CourseCatalog {
 public:
  CourseCatalog() = default;

  /// Load a course directory and register it (replacing any course with the
  /// same id). Returns the course id.
  std::string add(const std::filesystem::path& root);
  void add(Course course);

  /// Reload a registered course from its root directory.
  void reload(const std::string& course_id);

  std::shared_ptr<const Course> find(std::string_view course_id) const;
  /// Throws std::out_of_range for unknown ids.
  std::shared_ptr<const Course> get(std::string_view course_id) const;
  std::vector<std::shared_ptr<const Course>> all() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Course>, std::less<>> courses_;
};

}  // namespace promptgrade
