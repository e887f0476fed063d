#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/problem_repository.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace promptgrade;

inline fs::path source_dir() { return fs::path(PROMPTGRADE_SOURCE_DIR); }
inline fs::path fixture_course_dir() { return source_dir() / "courses" / "table1"; }
inline fs::path mutant_path(const std::string& problem_id) {
  return source_dir() / "tests" / "fixtures" / "mutants" / (problem_id + ".py");
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class TempDir {
 public:
  TempDir() {
    std::string templ = (fs::temp_directory_path() / "pgtest-XXXXXX").string();
    path_ = ::mkdtemp(templ.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline const Course& fixture_course() {
  static const Course course = load_course(fixture_course_dir());
  return course;
}

inline const PromptProblem& fixture_problem(const std::string& id) {
  const auto& c = fixture_course();
  return c.problems.at(*c.index_of(id));
}

inline std::string reference_code(const std::string& id) {
  return read_file(fixture_course_dir() / "solutions" / (id + ".py"));
}

inline std::string mutant_code(const std::string& id) { return read_file(mutant_path(id)); }

/// Wrap code the way a chat model typically answers.
inline std::string fenced(const std::string& code) { return "```python\n" + code + "```\n"; }

inline MockEntry canned(const std::string& code) { return MockEntry{fenced(code), std::nullopt, std::nullopt}; }

inline MockEntry stochastic(const std::string& good, const std::string& bad, double p) {
  return MockEntry{fenced(good), fenced(bad), p};
}

}  // namespace testsupport
