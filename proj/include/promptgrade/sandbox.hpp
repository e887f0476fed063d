#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptgrade/problem.hpp"

namespace promptgrade {

/// Temp dir or interpreter could not be set up.
class SandboxSetupFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExecutionLimits {
  std::chrono::milliseconds wall_clock_timeout{10'000};
  std::size_t max_stdout_bytes = 64 * 1024;
  int max_processes = 1;
  std::size_t max_file_bytes = 16 * 1024 * 1024;
  std::size_t max_address_space_bytes = std::size_t{1} << 30;

  /// Throws std::invalid_argument unless every limit is positive.
  void validate() const;
};

enum class TestStatus { Pass, WrongOutput, RuntimeError, Timeout, OutputOverflow };
enum class Verdict { Pass, Fail, GenerationError, ExecutionError };

std::string_view to_string(TestStatus status);
std::string_view to_string(Verdict verdict);
TestStatus test_status_from_string(std::string_view text);
Verdict verdict_from_string(std::string_view text);

struct TestOutcome {
  std::string test_id;
  TestStatus status = TestStatus::Pass;
  std::string input_display;
  std::string expected_display;
  std::string actual_display;

  bool operator==(const TestOutcome&) const = default;
};

struct EvaluationResult {
  Verdict verdict = Verdict::Fail;
  /// Same order as the problem's test suite.
  std::vector<TestOutcome> outcomes;
  /// Present iff verdict == Fail.
  std::optional<TestOutcome> first_failure;

  /// Pass iff every outcome passed (and there is at least one), else Fail.
  static EvaluationResult from_outcomes(std::vector<TestOutcome> outcomes);
  /// A result with no outcomes (GenerationError / ExecutionError).
  static EvaluationResult without_run(Verdict verdict);

  bool operator==(const EvaluationResult&) const = default;
};

/// Strip trailing whitespace per line and trailing blank lines; CRLF/CR -> LF.
std::string normalize_output(std::string_view text);

/// What one interpreter process did.
struct ProcessResult {
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  bool stdout_overflow = false;
  std::string stdout_text;
  std::string stderr_text;
  std::chrono::milliseconds elapsed{0};

  bool clean_exit() const { return !timed_out && !stdout_overflow && term_signal == 0 && exit_code == 0; }
};

/// Runs untrusted scripts in subprocesses: one fresh temp dir per run,
/// scrubbed environment, rlimits, wall-clock kill of the whole process group,
/// and a stdout cap. At most `pool_size` runs are in flight at once.
///
/// Isolation is process-level only. There is no network namespace or
/// filesystem jail; treat it as weaker than a container.
class Sandbox {
 public:
  explicit Sandbox(std::size_t pool_size = 4);

  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;

  /// Write `files` into a fresh directory and run `runtime` with `{script}`
  /// bound to `script_name`. Throws SandboxSetupFailure.
  ProcessResult run_script(const std::map<std::string, std::string>& files, const std::string& script_name,
                           std::string_view runtime, std::string_view stdin_text, const ExecutionLimits& limits);

  /// One fresh process per test with stdin piped in. All tests run.
  EvaluationResult run_program_tests(std::string_view code, std::span<const TestCase> tests,
                                     const ExecutionLimits& limits, std::string_view runtime);

  /// One harness process calls `function_name(*arguments)` for every test and
  /// prints canonical JSON results. All tests run.
  EvaluationResult run_function_tests(std::string_view code, std::string_view function_name,
                                      std::span<const TestCase> tests, const ExecutionLimits& limits,
                                      std::string_view runtime);

  /// Dispatch on problem kind.
  EvaluationResult evaluate(const PromptProblem& problem, std::string_view code, const ExecutionLimits& limits);

  std::size_t pool_size() const { return pool_size_; }

 private:
  std::size_t pool_size_;
  std::counting_semaphore<256> slots_;
};

/// Turns (problem, generated code) into a verdict. The grading engine only
/// sees this interface.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual EvaluationResult evaluate(const PromptProblem& problem, std::string_view code) = 0;
};

class SandboxJudge final : public Judge {
 public:
  SandboxJudge(Sandbox& sandbox, ExecutionLimits limits = {});
  EvaluationResult evaluate(const PromptProblem& problem, std::string_view code) override;

 private:
  Sandbox& sandbox_;
  ExecutionLimits limits_;
};

/// Python source for the function-test harness (exposed for tests).
std::string build_function_harness(std::string_view function_name, std::span<const TestCase> tests,
                                   std::string_view marker);

}  // namespace promptgrade
