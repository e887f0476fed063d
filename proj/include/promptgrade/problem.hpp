#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "promptgrade/json_value.hpp"

namespace promptgrade {

enum class ProblemKind { Program, Function };

std::string_view to_string(ProblemKind kind);

/// stdin -> stdout test for a whole program.
struct ProgramCase {
  std::string stdin_text;
  std::string expected_stdout;

  bool operator==(const ProgramCase&) const = default;
};

/// Call `function_name(*arguments)` and compare the return value.
struct FunctionCase {
  Json arguments = Json::array();
  Json expected_return;

  bool operator==(const FunctionCase& other) const {
    return arguments == other.arguments && expected_return == other.expected_return;
  }
};

struct TestCase {
  std::string test_id;
  std::variant<ProgramCase, FunctionCase> io;

  bool is_program() const { return std::holds_alternative<ProgramCase>(io); }
  const ProgramCase& program() const { return std::get<ProgramCase>(io); }
  const FunctionCase& function() const { return std::get<FunctionCase>(io); }

  bool operator==(const TestCase&) const = default;
};

inline constexpr std::string_view kDefaultRuntime = "python3 -I -S {script}";

struct PromptProblem {
  std::string problem_id;
  ProblemKind kind = ProblemKind::Program;
  std::string prompt_prefix;
  std::optional<std::string> function_name;
  /// Path relative to the course's assets/ directory.
  std::string image_asset;
  std::vector<TestCase> tests;
  std::optional<int> max_prompt_words;
  /// Interpreter command template; `{script}` is replaced by the script path.
  std::string runtime{kDefaultRuntime};

  bool operator==(const PromptProblem&) const = default;
};

struct Course {
  std::string course_id;
  std::string title;
  std::filesystem::path root;
  /// Progression order.
  std::vector<PromptProblem> problems;

  std::filesystem::path assets_dir() const { return root / "assets"; }
  std::filesystem::path solutions_dir() const { return root / "solutions"; }

  /// Index of `problem_id`, or nullopt.
  std::optional<std::size_t> index_of(std::string_view problem_id) const;

  bool operator==(const Course&) const = default;
};

}  // namespace promptgrade
