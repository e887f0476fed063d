#pragma once

#include <optional>
#include <set>
#include <string>

#include "promptgrade/clock.hpp"
#include "promptgrade/json_value.hpp"
#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/sandbox.hpp"

namespace promptgrade {

inline constexpr int kSubmissionSchemaVersion = 1;

/// Why generation produced no program ("no_code", "provider_timeout",
/// "provider_rejected", "provider_error").
struct GenerationFailure {
  std::string kind;
  std::string message;
  /// Model reply, when one arrived.
  std::string raw_response;

  bool operator==(const GenerationFailure&) const = default;
};

/// One student attempt. Persisted verbatim as a log record.
struct Submission {
  std::string submission_id;
  std::string user_id;
  std::string course_id;
  std::string problem_id;
  int problem_index = 0;
  /// 1-based per (user, course, problem), no gaps.
  int attempt_number = 1;
  std::string student_text;
  /// Exactly what was sent to the provider (prompt body + guardrail).
  std::string full_prompt;
  /// Words in the prompt body (prefix + student text), guardrail excluded.
  int word_count = 0;
  std::optional<GeneratedProgram> generated;
  std::optional<GenerationFailure> generation_failure;
  EvaluationResult result;
  Timestamp submitted_at{};

  bool passed() const { return result.verdict == Verdict::Pass; }
  bool operator==(const Submission&) const = default;
};

struct ProgressState {
  std::string user_id;
  std::string course_id;
  int highest_unlocked_index = 0;
  std::set<std::string> solved;

  bool operator==(const ProgressState&) const = default;
};

Json to_json(const TestOutcome& o);
TestOutcome test_outcome_from_json(const Json& j);
Json to_json(const EvaluationResult& r);
EvaluationResult evaluation_result_from_json(const Json& j);

/// Flattened record including schema_version.
Json to_json(const Submission& s);
/// Throws std::invalid_argument on malformed records.
Submission submission_from_json(const Json& j);

Json to_json(const ProgressState& p);
ProgressState progress_from_json(const Json& j);

}  // namespace promptgrade
