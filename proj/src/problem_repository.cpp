#include "promptgrade/problem_repository.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace promptgrade {

namespace fs = std::filesystem;

std::string_view to_string(ProblemKind kind) { return kind == ProblemKind::Function ? "function" : "program"; }

std::optional<std::size_t> Course::index_of(std::string_view problem_id) const {
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (problems[i].problem_id == problem_id) return i;
  }
  return std::nullopt;
}

namespace {

const std::regex& slug_pattern() {
  static const std::regex re("^[A-Za-z0-9][A-Za-z0-9_.-]*$");
  return re;
}

const std::regex& identifier_pattern() {
  static const std::regex re("^[A-Za-z_][A-Za-z0-9_]*$");
  return re;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ManifestMalformed(where + key, "missing");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where, bool non_empty = true) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw ManifestMalformed(where + key, "must be a string");
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) throw ManifestMalformed(where + key, "must not be empty");
  return s;
}

std::string require_slug(const Json& obj, const char* key, const std::string& where) {
  auto s = require_string(obj, key, where);
  if (!std::regex_match(s, slug_pattern())) {
    throw ManifestMalformed(where + key, "must be a slug ([A-Za-z0-9][A-Za-z0-9_.-]*)");
  }
  return s;
}

bool is_safe_relative(const fs::path& p) {
  if (p.empty() || p.is_absolute()) return false;
  for (const auto& part : p) {
    if (part == "..") return false;
  }
  return true;
}

TestCase parse_test(const Json& t, ProblemKind kind, const std::string& where) {
  if (!t.is_object()) throw ManifestMalformed(where.substr(0, where.size() - 1), "must be an object");
  TestCase test;
  test.test_id = require_string(t, "test_id", where);
  const bool has_program = t.contains("stdin") || t.contains("expected_stdout");
  const bool has_function = t.contains("arguments") || t.contains("expected_return");
  if (kind == ProblemKind::Program) {
    if (has_function) throw ManifestMalformed(where + "arguments", "not allowed on a program test");
    ProgramCase io;
    if (t.contains("stdin")) io.stdin_text = require_string(t, "stdin", where, false);
    io.expected_stdout = require_string(t, "expected_stdout", where, false);
    test.io = std::move(io);
  } else {
    if (has_program) throw ManifestMalformed(where + "stdin", "not allowed on a function test");
    FunctionCase io;
    io.arguments = require(t, "arguments", where);
    if (!io.arguments.is_array()) throw ManifestMalformed(where + "arguments", "must be an array");
    io.expected_return = require(t, "expected_return", where);
    test.io = std::move(io);
  }
  return test;
}

PromptProblem parse_problem(const Json& p, const std::string& where, const fs::path& root) {
  if (!p.is_object()) throw ManifestMalformed(where.substr(0, where.size() - 1), "must be an object");
  PromptProblem problem;
  problem.problem_id = require_slug(p, "problem_id", where);

  const auto kind = require_string(p, "kind", where);
  if (kind == "program") {
    problem.kind = ProblemKind::Program;
  } else if (kind == "function") {
    problem.kind = ProblemKind::Function;
  } else {
    throw ManifestMalformed(where + "kind", "must be \"program\" or \"function\"");
  }

  problem.prompt_prefix = require_string(p, "prompt_prefix", where);

  if (problem.kind == ProblemKind::Function) {
    auto name = require_string(p, "function_name", where);
    if (!std::regex_match(name, identifier_pattern())) {
      throw ManifestMalformed(where + "function_name", "must be an identifier");
    }
    problem.function_name = std::move(name);
  } else if (p.contains("function_name") && !p["function_name"].is_null()) {
    throw ManifestMalformed(where + "function_name", "only allowed on function problems");
  }

  problem.image_asset = require_string(p, "image", where);
  if (!is_safe_relative(problem.image_asset)) {
    throw ManifestMalformed(where + "image", "must be a relative path inside assets/");
  }
  const auto asset = root / "assets" / problem.image_asset;
  if (!fs::is_regular_file(asset)) throw AssetMissing(asset);

  if (p.contains("max_prompt_words") && !p["max_prompt_words"].is_null()) {
    const auto& m = p["max_prompt_words"];
    if (!m.is_number_integer() || m.get<long long>() < 1 || m.get<long long>() > 1'000'000) {
      throw ManifestMalformed(where + "max_prompt_words", "must be a positive integer");
    }
    problem.max_prompt_words = m.get<int>();
  }

  if (p.contains("runtime")) problem.runtime = require_string(p, "runtime", where);

  const auto& tests = require(p, "tests", where);
  if (!tests.is_array()) throw ManifestMalformed(where + "tests", "must be an array");
  if (tests.empty()) throw ManifestMalformed(where + "tests", "must contain at least one test");
  std::set<std::string> test_ids;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    auto test = parse_test(tests[i], problem.kind, where + "tests[" + std::to_string(i) + "].");
    if (!test_ids.insert(test.test_id).second) {
      throw ManifestMalformed(where + "tests[" + std::to_string(i) + "].test_id", "duplicate test id " + test.test_id);
    }
    problem.tests.push_back(std::move(test));
  }
  return problem;
}

}  // namespace

Course parse_course(std::string_view manifest_text, const fs::path& root) {
  const auto doc = Json::parse(manifest_text, nullptr, false);
  if (doc.is_discarded()) throw ManifestMalformed("<document>", "not valid JSON");
  if (!doc.is_object()) throw ManifestMalformed("<document>", "must be a JSON object");

  Course course;
  course.root = root;
  course.course_id = require_slug(doc, "course_id", "");
  course.title = require_string(doc, "title", "");
  const auto& problems = require(doc, "problems", "");
  if (!problems.is_array()) throw ManifestMalformed("problems", "must be an array");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    auto problem = parse_problem(problems[i], "problems[" + std::to_string(i) + "].", root);
    if (!ids.insert(problem.problem_id).second) throw DuplicateProblemId(problem.problem_id);
    course.problems.push_back(std::move(problem));
  }
  return course;
}

Course load_course(const fs::path& root) {
  const auto manifest = root / kManifestName;
  if (!fs::is_regular_file(manifest)) throw ManifestMissing(manifest);
  return parse_course(read_file(manifest), root);
}

const PromptProblem& get_problem(const Course& course, long long index) {
  if (index < 0 || static_cast<std::size_t>(index) >= course.problems.size()) {
    throw IndexOutOfRange(index, course.problems.size());
  }
  return course.problems[static_cast<std::size_t>(index)];
}

std::optional<ReferenceSolution> load_reference_solution(const Course& course, const PromptProblem& problem) {
  const auto path = course.solutions_dir() / (problem.problem_id + ".py");
  if (!fs::is_regular_file(path)) return std::nullopt;
  return ReferenceSolution{read_file(path)};
}

ValidationReport validate_problem(const PromptProblem& problem, const ReferenceSolution& reference,
                                  Sandbox& sandbox, const ExecutionLimits& limits) {
  EvaluationResult result;
  try {
    result = sandbox.evaluate(problem, reference.source_code, limits);
  } catch (const SandboxSetupFailure& e) {
    throw SandboxUnavailable(e.what());
  }
  ValidationReport report;
  for (const auto& o : result.outcomes) {
    if (o.status != TestStatus::Pass) {
      report.failing_test_ids.push_back(o.test_id);
      report.failures.push_back(o);
    }
  }
  return report;
}

std::string CourseCatalog::add(const fs::path& root) {
  auto course = load_course(root);
  auto id = course.course_id;
  add(std::move(course));
  return id;
}

void CourseCatalog::add(Course course) {
  auto ptr = std::make_shared<const Course>(std::move(course));
  std::lock_guard lock(mutex_);
  courses_[ptr->course_id] = std::move(ptr);
}

void CourseCatalog::reload(const std::string& course_id) {
  const auto current = get(course_id);
  auto fresh = load_course(current->root);
  if (fresh.course_id != course_id) {
    throw ManifestMalformed("course_id", "changed from " + course_id + " to " + fresh.course_id + " on reload");
  }
  add(std::move(fresh));
}

std::shared_ptr<const Course> CourseCatalog::find(std::string_view course_id) const {
  std::lock_guard lock(mutex_);
  const auto it = courses_.find(course_id);
  return it == courses_.end() ? nullptr : it->second;
}

std::shared_ptr<const Course> CourseCatalog::get(std::string_view course_id) const {
  auto c = find(course_id);
  if (!c) throw std::out_of_range("unknown course: " + std::string(course_id));
  return c;
}

std::vector<std::shared_ptr<const Course>> CourseCatalog::all() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<const Course>> out;
  for (const auto& [id, c] : courses_) out.push_back(c);
  return out;
}

}  // namespace promptgrade
