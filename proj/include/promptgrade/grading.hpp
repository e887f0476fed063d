#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

#include "promptgrade/clock.hpp"
#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/persistence.hpp"
#include "promptgrade/problem_repository.hpp"
#include "promptgrade/sandbox.hpp"
#include "promptgrade/submission.hpp"

namespace promptgrade {

class LockedProblem : public std::runtime_error {
 public:
  LockedProblem(const std::string& course_id, long long index)
      : std::runtime_error("problem " + std::to_string(index) + " of " + course_id +
                           " is locked until the previous problem is solved") {}
};

class PromptTooLong : public std::runtime_error {
 public:
  PromptTooLong(int limit, int actual)
      : std::runtime_error("prompt has " + std::to_string(actual) + " words; the limit is " + std::to_string(limit)),
        limit_(limit),
        actual_(actual) {}
  int limit() const { return limit_; }
  int actual() const { return actual_; }

 private:
  int limit_;
  int actual_;
};

/// Number of maximal runs of non-whitespace characters.
int word_count(std::string_view text);

inline constexpr std::string_view kSuccessMessage = "Success — continue to the next problem.";
inline constexpr std::string_view kGenerationErrorMessage = "The model did not return code — revise your prompt.";
inline constexpr std::string_view kExecutionErrorMessage =
    "The generated code could not be run right now — please submit again.";

/// Student-facing message. A failure shows the first failing test and
/// nothing about any other test.
std::string feedback_for(const EvaluationResult& result);

/// Progress implied by a set of solved problems: the unlocked index is the
/// length of the solved prefix, capped at the last problem.
ProgressState progress_from_solved(const Course& course, std::string user_id, std::set<std::string> solved);

struct RobustnessReport {
  int k = 0;
  int passes = 0;
  double fraction() const { return k == 0 ? 0.0 : static_cast<double>(passes) / k; }
};

/// k independent generations (nonces first_nonce .. first_nonce+k-1) of one
/// full prompt, each judged; provider errors count as non-pass. Runs up to
/// `parallelism` generations at a time. Touches no persistent state.
RobustnessReport measure_robustness(const PromptProblem& problem, const std::string& full_prompt, int k,
                                    Provider& provider, Judge& judge, std::size_t parallelism = 4,
                                    std::uint64_t first_nonce = 0);

/// prompt -> generation -> sandbox -> verdict, with sequential gating.
class GradingEngine {
 public:
  GradingEngine(const CourseCatalog& catalog, Provider& provider, Judge& judge, Store& store, const Clock& clock,
                std::size_t parallelism = 4);

  /// Throws IndexOutOfRange, std::out_of_range (unknown course), UnknownUser,
  /// LockedProblem, EmptyStudentText, PromptTooLong. Provider and sandbox
  /// failures are recorded as attempts, not thrown.
  Submission submit(const std::string& user_id, const std::string& course_id, long long problem_index,
                    std::string_view student_text);

  bool can_access(const std::string& user_id, const std::string& course_id, long long problem_index) const;

  ProgressState progress(const std::string& user_id, const std::string& course_id) const;

  /// Robustness of a student continuation (prefix is prepended). Logged to the
  /// robustness log only.
  RobustnessReport robustness(const std::string& course_id, long long problem_index, std::string_view student_text,
                              int k);

  /// Same, for a complete prompt body that already carries its own opening.
  RobustnessReport robustness_of_body(const std::string& course_id, long long problem_index, std::string_view body,
                                      int k);

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& key);
  RobustnessReport run_robustness(const Course& course, const PromptProblem& problem, const std::string& full_prompt,
                                  int words, int k);

  const CourseCatalog& catalog_;
  Provider& provider_;
  Judge& judge_;
  Store& store_;
  const Clock& clock_;
  std::size_t parallelism_;

  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex progress_mutex_;
};

}  // namespace promptgrade
