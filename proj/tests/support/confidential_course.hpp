#pragma once

// A course whose hidden test data is made of distinctive tokens, so any leak
// shows up in a plain substring scan.

#include <string>
#include <vector>

#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/problem.hpp"
#include "test_support.hpp"

namespace testsupport {

inline constexpr int kSecretTests = 6;

inline std::string secret_in(int k) { return "QIN" + std::to_string(k) + "X"; }
inline std::string secret_out(int k) { return "QOUT" + std::to_string(k) + "X"; }
inline std::string secret_arg(int k) { return "FARG" + std::to_string(k) + "Y"; }
inline std::string secret_ret(int k) { return "FRET" + std::to_string(k) + "Y"; }

/// Writes the course to `root` and returns it loaded.
inline Course write_confidential_course(const fs::path& root) {
  Json echo_tests = Json::array();
  Json fn_tests = Json::array();
  for (int k = 0; k < kSecretTests; ++k) {
    echo_tests.push_back(
        {{"test_id", "e" + std::to_string(k)}, {"stdin", secret_in(k) + "\n"}, {"expected_stdout", secret_out(k) + "\n"}});
    fn_tests.push_back({{"test_id", "f" + std::to_string(k)},
                        {"arguments", Json::array({secret_arg(k)})},
                        {"expected_return", secret_ret(k)}});
  }
  const Json doc = {
      {"course_id", "secret"},
      {"title", "Confidential"},
      {"problems",
       Json::array({{{"problem_id", "echo"},
                     {"kind", "program"},
                     {"prompt_prefix", "Write a Python program that"},
                     {"image", "echo.svg"},
                     {"tests", echo_tests}},
                    {{"problem_id", "swap"},
                     {"kind", "function"},
                     {"function_name", "swap"},
                     {"prompt_prefix", "Write a Python function called"},
                     {"image", "swap.svg"},
                     {"tests", fn_tests}}})}};
  write_file(root / "assets" / "echo.svg", "<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
  write_file(root / "assets" / "swap.svg", "<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
  write_file(root / "course.json", doc.dump(2));
  return load_course(root);
}

/// Every hidden input and expected value in the course.
inline std::vector<std::string> all_secrets() {
  std::vector<std::string> out;
  for (int k = 0; k < kSecretTests; ++k) {
    for (const auto& s : {secret_in(k), secret_out(k), secret_arg(k), secret_ret(k)}) out.push_back(s);
  }
  return out;
}

/// Secrets that a failure on test `k` may legitimately show.
inline std::vector<std::string> secrets_of_test(const std::string& problem_id, int k) {
  if (problem_id == "echo") return {secret_in(k), secret_out(k)};
  return {secret_arg(k), secret_ret(k)};
}

/// Chooses generated code from a keyword in the student text:
///   "good"      correct for every test
///   "failfrom<j>" correct below test j, wrong from j on
///   "crash", "loop", "prose", "chatty" (echoes its own input back)
class ConfidentialProvider final : public Provider {
 public:
  ProviderReply complete(const GenerationRequest& req) override {
    const bool fn = req.full_prompt.find("function named swap") != std::string::npos;
    const auto& p = req.full_prompt;
    ProviderReply r;
    auto body = [&](const std::string& value_expr) {
      if (fn) return "def swap(s):\n    n = int(s[4:-1])\n    return " + value_expr + "\n";
      return "s = input()\nn = int(s[3:-1])\nprint(" + value_expr + ")\n";
    };
    const std::string good = fn ? "'FRET' + str(n) + 'Y'" : "'QOUT' + str(n) + 'X'";
    if (p.find("prose") != std::string::npos) {
      r.raw_response = "I would rather explain the idea in words.";
    } else if (p.find("crash") != std::string::npos) {
      r.raw_response = body("1 / 0");
    } else if (p.find("loop") != std::string::npos) {
      r.raw_response = fn ? "def swap(s):\n    while True:\n        pass\n" : "while True:\n    pass\n";
    } else if (p.find("chatty") != std::string::npos) {
      r.raw_response = body("s");
    } else if (const auto at = p.find("failfrom"); at != std::string::npos) {
      const int j = p[at + 8] - '0';
      r.raw_response = body("(" + good + ") if n < " + std::to_string(j) + " else 'nope'");
    } else {
      r.raw_response = body(good);
    }
    return r;
  }
};

}  // namespace testsupport
