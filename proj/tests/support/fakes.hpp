#pragma once

#include <atomic>
#include <string>

#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/sandbox.hpp"

namespace testsupport {

using namespace promptgrade;

/// Replies "# pass" when the prompt contains GOOD, "# fail" otherwise, and
/// prose when it contains PROSE.
class KeywordProvider final : public Provider {
 public:
  ProviderReply complete(const GenerationRequest& request) override {
    ++calls;
    ProviderReply r;
    if (request.full_prompt.find("PROSE") != std::string::npos) {
      r.raw_response = "I am not able to write that.";
    } else {
      r.raw_response = request.full_prompt.find("GOOD") != std::string::npos ? "# pass" : "# fail";
    }
    return r;
  }
  std::atomic<int> calls{0};
};

/// Pass iff the code is "# pass"; otherwise every test fails with WrongOutput.
class MarkerJudge final : public Judge {
 public:
  EvaluationResult evaluate(const PromptProblem& problem, std::string_view code) override {
    ++calls;
    std::vector<TestOutcome> outcomes;
    for (const auto& t : problem.tests) {
      outcomes.push_back(TestOutcome{t.test_id, code == "# pass" ? TestStatus::Pass : TestStatus::WrongOutput,
                                     "in-" + t.test_id, "exp-" + t.test_id, "act-" + t.test_id});
    }
    return EvaluationResult::from_outcomes(std::move(outcomes));
  }
  std::atomic<int> calls{0};
};

class BrokenJudge final : public Judge {
 public:
  EvaluationResult evaluate(const PromptProblem&, std::string_view) override {
    throw SandboxSetupFailure("no interpreter");
  }
};

}  // namespace testsupport
