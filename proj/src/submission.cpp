#include "promptgrade/submission.hpp"

#include <stdexcept>

namespace promptgrade {

Json to_json(const TestOutcome& o) {
  return {{"test_id", o.test_id},
          {"status", to_string(o.status)},
          {"input_display", o.input_display},
          {"expected_display", o.expected_display},
          {"actual_display", o.actual_display}};
}

TestOutcome test_outcome_from_json(const Json& j) {
  TestOutcome o;
  o.test_id = j.at("test_id").get<std::string>();
  o.status = test_status_from_string(j.at("status").get<std::string>());
  o.input_display = j.value("input_display", "");
  o.expected_display = j.value("expected_display", "");
  o.actual_display = j.value("actual_display", "");
  return o;
}

Json to_json(const EvaluationResult& r) {
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
  return {{"verdict", to_string(r.verdict)},
          {"outcomes", std::move(outcomes)},
          {"first_failure", r.first_failure ? to_json(*r.first_failure) : Json(nullptr)}};
}

EvaluationResult evaluation_result_from_json(const Json& j) {
  EvaluationResult r;
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  for (const auto& o : j.at("outcomes")) r.outcomes.push_back(test_outcome_from_json(o));
  if (j.contains("first_failure") && !j.at("first_failure").is_null()) {
    r.first_failure = test_outcome_from_json(j.at("first_failure"));
  }
  return r;
}

Json to_json(const Submission& s) {
  Json generated = nullptr;
  if (s.generated) {
    generated = {{"source_code", s.generated->source_code},
                 {"raw_response", s.generated->raw_response},
                 {"provider_metadata", s.generated->provider_metadata}};
  }
  Json failure = nullptr;
  if (s.generation_failure) {
    failure = {{"kind", s.generation_failure->kind},
               {"message", s.generation_failure->message},
               {"raw_response", s.generation_failure->raw_response}};
  }
  return {{"schema_version", kSubmissionSchemaVersion},
          {"submission_id", s.submission_id},
          {"user_id", s.user_id},
          {"course_id", s.course_id},
          {"problem_id", s.problem_id},
          {"problem_index", s.problem_index},
          {"attempt_number", s.attempt_number},
          {"student_text", s.student_text},
          {"full_prompt", s.full_prompt},
          {"word_count", s.word_count},
          {"generated", std::move(generated)},
          {"generation_failure", std::move(failure)},
          {"result", to_json(s.result)},
          {"submitted_at", format_timestamp(s.submitted_at)}};
}

Submission submission_from_json(const Json& j) {
  try {
    const auto version = j.at("schema_version").get<int>();
    if (version != kSubmissionSchemaVersion) {
      throw std::invalid_argument("unsupported schema_version " + std::to_string(version));
    }
    Submission s;
    s.submission_id = j.at("submission_id").get<std::string>();
    s.user_id = j.at("user_id").get<std::string>();
    s.course_id = j.at("course_id").get<std::string>();
    s.problem_id = j.at("problem_id").get<std::string>();
    s.problem_index = j.at("problem_index").get<int>();
    s.attempt_number = j.at("attempt_number").get<int>();
    s.student_text = j.at("student_text").get<std::string>();
    s.full_prompt = j.at("full_prompt").get<std::string>();
    s.word_count = j.at("word_count").get<int>();
    if (const auto& g = j.at("generated"); !g.is_null()) {
      GeneratedProgram p;
      p.source_code = g.at("source_code").get<std::string>();
      p.raw_response = g.at("raw_response").get<std::string>();
      p.provider_metadata = g.value("provider_metadata", std::map<std::string, std::string>{});
      s.generated = std::move(p);
    }
    if (const auto& f = j.at("generation_failure"); !f.is_null()) {
      s.generation_failure = GenerationFailure{f.at("kind").get<std::string>(), f.at("message").get<std::string>(),
                                               f.value("raw_response", "")};
    }
    s.result = evaluation_result_from_json(j.at("result"));
    s.submitted_at = parse_timestamp(j.at("submitted_at").get<std::string>());
    return s;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed submission record: ") + e.what());
  }
}

Json to_json(const ProgressState& p) {
  return {{"user_id", p.user_id},
          {"course_id", p.course_id},
          {"highest_unlocked_index", p.highest_unlocked_index},
          {"solved", p.solved}};
}

ProgressState progress_from_json(const Json& j) {
  ProgressState p;
  p.user_id = j.at("user_id").get<std::string>();
  p.course_id = j.at("course_id").get<std::string>();
  p.highest_unlocked_index = j.at("highest_unlocked_index").get<int>();
  p.solved = j.at("solved").get<std::set<std::string>>();
  return p;
}

}  // namespace promptgrade
