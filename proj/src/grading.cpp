#include "promptgrade/grading.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <thread>
#include <vector>

namespace promptgrade {

namespace {

std::string status_phrase(TestStatus status) {
  switch (status) {
    case TestStatus::Pass: return "passed";
    case TestStatus::WrongOutput: return "wrong output";
    case TestStatus::RuntimeError: return "runtime error";
    case TestStatus::Timeout: return "time limit exceeded";
    case TestStatus::OutputOverflow: return "too much output";
  }
  return "failed";
}

std::string submission_id_for(const std::string& course_id, const std::string& user_id, const std::string& problem_id,
                              int attempt) {
  char num[16];
  std::snprintf(num, sizeof num, "%06d", attempt);
  return course_id + "/" + user_id + "/" + problem_id + "/" + num;
}

}  // namespace

int word_count(std::string_view text) {
  int count = 0;
  bool in_word = false;
  for (const unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string feedback_for(const EvaluationResult& result) {
  switch (result.verdict) {
    case Verdict::Pass: return std::string(kSuccessMessage);
    case Verdict::GenerationError: return std::string(kGenerationErrorMessage);
    case Verdict::ExecutionError: return std::string(kExecutionErrorMessage);
    case Verdict::Fail: break;
  }
  if (!result.first_failure) return "The generated code did not pass the tests.";
  const auto& f = *result.first_failure;
  std::string msg = "The generated code failed test " + f.test_id + " (" + status_phrase(f.status) + ").\n";
  msg += "Input:\n" + f.input_display + "\n";
  msg += "Expected:\n" + f.expected_display + "\n";
  msg += "Actual:\n" + f.actual_display;
  return msg;
}

ProgressState progress_from_solved(const Course& course, std::string user_id, std::set<std::string> solved) {
  ProgressState state;
  state.user_id = std::move(user_id);
  state.course_id = course.course_id;
  std::size_t prefix = 0;
  while (prefix < course.problems.size() && solved.contains(course.problems[prefix].problem_id)) ++prefix;
  const auto last = course.problems.empty() ? 0 : course.problems.size() - 1;
  state.highest_unlocked_index = static_cast<int>(std::min(prefix, last));
  state.solved = std::move(solved);
  return state;
}

RobustnessReport measure_robustness(const PromptProblem& problem, const std::string& full_prompt, int k,
                                    Provider& provider, Judge& judge, std::size_t parallelism,
                                    std::uint64_t first_nonce) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  std::atomic<int> next{0};
  std::atomic<int> passes{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < k; i = next.fetch_add(1)) {
      try {
        GenerationRequest req{full_prompt, problem.problem_id, first_nonce + static_cast<std::uint64_t>(i)};
        const auto program = request_generation(req, provider);
        if (judge.evaluate(problem, program.source_code).verdict == Verdict::Pass) passes.fetch_add(1);
      } catch (const std::exception&) {
        // Counted as non-pass.
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(parallelism, 1, static_cast<std::size_t>(k));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return RobustnessReport{k, passes.load()};
}

GradingEngine::GradingEngine(const CourseCatalog& catalog, Provider& provider, Judge& judge, Store& store,
                             const Clock& clock, std::size_t parallelism)
    : catalog_(catalog), provider_(provider), judge_(judge), store_(store), clock_(clock), parallelism_(parallelism) {}

std::shared_ptr<std::mutex> GradingEngine::lock_for(const std::string& key) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

bool GradingEngine::can_access(const std::string& user_id, const std::string& course_id,
                               long long problem_index) const {
  const auto course = catalog_.get(course_id);
  (void)get_problem(*course, problem_index);
  if (problem_index == 0) return true;
  return store_.load_progress(user_id, course_id).highest_unlocked_index >= problem_index;
}

ProgressState GradingEngine::progress(const std::string& user_id, const std::string& course_id) const {
  return store_.load_progress(user_id, course_id);
}

Submission GradingEngine::submit(const std::string& user_id, const std::string& course_id, long long problem_index,
                                 std::string_view student_text) {
  const auto course = catalog_.get(course_id);
  const auto& problem = get_problem(*course, problem_index);
  if (!store_.find_user(user_id)) throw UnknownUser(user_id);
  if (!can_access(user_id, course_id, problem_index)) throw LockedProblem(course_id, problem_index);

  const auto body = prompt_body(problem, student_text);
  const int words = word_count(body);
  if (problem.max_prompt_words && words > *problem.max_prompt_words) {
    throw PromptTooLong(*problem.max_prompt_words, words);
  }

  const auto guard_ptr = lock_for(user_id + '\x1f' + course_id + '\x1f' + problem.problem_id);
  std::lock_guard serial(*guard_ptr);

  Submission s;
  s.user_id = user_id;
  s.course_id = course_id;
  s.problem_id = problem.problem_id;
  s.problem_index = static_cast<int>(problem_index);
  s.attempt_number = static_cast<int>(store_.count_attempts(user_id, course_id, problem.problem_id)) + 1;
  s.submission_id = submission_id_for(course_id, user_id, problem.problem_id, s.attempt_number);
  s.student_text = std::string(student_text);
  s.full_prompt = body + "\n" + guardrail_for(problem);
  s.word_count = words;

  try {
    GenerationRequest req{s.full_prompt, problem.problem_id, static_cast<std::uint64_t>(s.attempt_number)};
    s.generated = request_generation(req, provider_);
  } catch (const NoCodeInResponse& e) {
    s.generation_failure = GenerationFailure{"no_code", e.what(), e.raw_response()};
  } catch (const ProviderTimeout& e) {
    s.generation_failure = GenerationFailure{"provider_timeout", e.what(), {}};
  } catch (const ProviderRejected& e) {
    s.generation_failure = GenerationFailure{"provider_rejected", e.what(), {}};
  } catch (const std::exception& e) {
    s.generation_failure = GenerationFailure{"provider_error", e.what(), {}};
  }

  if (s.generated) {
    try {
      s.result = judge_.evaluate(problem, s.generated->source_code);
    } catch (const SandboxSetupFailure&) {
      s.result = EvaluationResult::without_run(Verdict::ExecutionError);
    }
  } else {
    s.result = EvaluationResult::without_run(Verdict::GenerationError);
  }
  s.submitted_at = clock_.now();

  store_.append_submission(s);

  if (s.passed()) {
    std::lock_guard progress_guard(progress_mutex_);
    auto state = store_.load_progress(user_id, course_id);
    if (!state.solved.contains(problem.problem_id)) {
      state.solved.insert(problem.problem_id);
      store_.save_progress(progress_from_solved(*course, user_id, std::move(state.solved)));
    }
  }
  return s;
}

RobustnessReport GradingEngine::run_robustness(const Course& course, const PromptProblem& problem,
                                               const std::string& full_prompt, int words, int k) {
  const auto report = measure_robustness(problem, full_prompt, k, provider_, judge_, parallelism_);
  store_.append_robustness(RobustnessRecord{course.course_id, problem.problem_id, prompt_hash(full_prompt), words, k,
                                            report.passes, clock_.now()});
  return report;
}

RobustnessReport GradingEngine::robustness(const std::string& course_id, long long problem_index,
                                           std::string_view student_text, int k) {
  const auto course = catalog_.get(course_id);
  const auto& problem = get_problem(*course, problem_index);
  const auto body = prompt_body(problem, student_text);
  return run_robustness(*course, problem, body + "\n" + guardrail_for(problem), word_count(body), k);
}

RobustnessReport GradingEngine::robustness_of_body(const std::string& course_id, long long problem_index,
                                                   std::string_view body, int k) {
  const auto course = catalog_.get(course_id);
  const auto& problem = get_problem(*course, problem_index);
  return run_robustness(*course, problem, full_prompt_from_body(problem, body), word_count(body), k);
}

}  // namespace promptgrade
