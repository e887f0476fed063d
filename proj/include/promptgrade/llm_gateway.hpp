#pragma once

#include <chrono>
#include <filesystem>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "promptgrade/json_value.hpp"
#include "promptgrade/problem.hpp"

namespace promptgrade {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyStudentText : public GatewayError {
 public:
  EmptyStudentText() : GatewayError("prompt text is empty") {}
};

class ProviderTimeout : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class ProviderRejected : public GatewayError {
 public:
  ProviderRejected(int status, std::string body_excerpt)
      : GatewayError("provider rejected request (status " + std::to_string(status) + "): " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class NoCodeInResponse : public GatewayError {
 public:
  explicit NoCodeInResponse(std::string raw_response = {})
      : GatewayError("response contains no code"), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

class UnknownPrompt : public GatewayError {
 public:
  explicit UnknownPrompt(const std::string& hash) : GatewayError("mock provider has no entry for prompt " + hash) {}
};

class InvalidProviderConfig : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// Appended to every prompt; bump the version whenever the wording changes.
inline constexpr int kGuardrailVersion = 1;
inline constexpr std::string_view kGuardrail =
    "Respond with only the code. Do not include explanations, comments about usage, or any text outside the code.";

/// Full guardrail for a problem; function problems also name the function.
std::string guardrail_for(const PromptProblem& problem);

/// The student-visible prompt: prefix, one space, trimmed student text.
/// Throws EmptyStudentText.
std::string prompt_body(const PromptProblem& problem, std::string_view student_text);

/// body + "\n" + guardrail. Throws EmptyStudentText.
std::string build_full_prompt(const PromptProblem& problem, std::string_view student_text);

/// Wrap an already-complete prompt body (as replayed by batch evaluation).
std::string full_prompt_from_body(const PromptProblem& problem, std::string_view body);

/// Strip the guardrail suffix from a full prompt, if present.
std::string_view strip_guardrail(const PromptProblem& problem, std::string_view full_prompt);

/// Pull runnable source out of a model reply. Rules, in order:
///  E1. fenced ``` blocks exist: their contents, concatenated, minus the
///      language tag on the opening fence line;
///  E2. no fences and the first non-blank line looks like code: the whole
///      reply, trimmed;
///  E3. otherwise NoCodeInResponse.
std::string extract_code(std::string_view raw_response);

/// Heuristic used by rule E2.
bool looks_like_code_line(std::string_view line);

/// Key used by the mock provider table.
std::string prompt_hash(std::string_view full_prompt);

enum class ProviderKind { HttpChat, Mock };

struct MockEntry {
  /// Canned reply (treated as a raw model response).
  std::string response;
  /// Reply used when the seeded draw says "incorrect".
  std::optional<std::string> incorrect_response;
  /// Absent: always `response`.
  std::optional<double> pass_probability;
};

struct ProviderConfig {
  ProviderKind provider_kind = ProviderKind::Mock;
  std::string endpoint_url;
  std::string model_name = "gpt-4o-mini";
  double temperature = 0.7;
  std::string api_key_env = "PROMPTGRADE_API_KEY";
  std::chrono::milliseconds request_timeout{60'000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  /// JSON pointer to the completion text in the provider's reply.
  std::string response_pointer = "/choices/0/message/content";
  /// Mock only: prompt hash -> entry.
  std::map<std::string, MockEntry> mock_table;
  std::uint64_t seed = 0;

  /// Throws InvalidProviderConfig.
  void validate() const;
  static ProviderConfig from_json(const Json& j);
  static ProviderConfig load(const std::filesystem::path& path);
};

struct GenerationRequest {
  std::string full_prompt;
  std::string problem_id;
  /// Distinguishes repeated generations of the same prompt.
  std::uint64_t attempt_nonce = 0;
};

struct ProviderReply {
  std::string raw_response;
  std::map<std::string, std::string> metadata;
};

struct GeneratedProgram {
  std::string source_code;
  std::string raw_response;
  std::map<std::string, std::string> provider_metadata;

  bool operator==(const GeneratedProgram&) const = default;
};

/// A model endpoint. Implementations must be safe to call concurrently.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply complete(const GenerationRequest& request) = 0;
};

class MockProvider final : public Provider {
 public:
  /// Throws InvalidProviderConfig if a probability is outside [0,1] or a
  /// stochastic entry lacks an incorrect variant.
  static std::unique_ptr<MockProvider> configure(std::map<std::string, MockEntry> table, std::uint64_t seed = 0);

  ProviderReply complete(const GenerationRequest& request) override;

 private:
  MockProvider(std::map<std::string, MockEntry> table, std::uint64_t seed);

  std::map<std::string, MockEntry> table_;
  std::uint64_t seed_;
};

/// Chat-completion style JSON over HTTP(S): {model, temperature, messages}.
/// Retries transport failures, 429 and 5xx with exponential backoff.
class HttpChatProvider final : public Provider {
 public:
  explicit HttpChatProvider(ProviderConfig config);
  ProviderReply complete(const GenerationRequest& request) override;

 private:
  ProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

/// Ask the provider and extract code. NoCodeInResponse carries the raw reply.
GeneratedProgram request_generation(const GenerationRequest& request, Provider& provider);

}  // namespace promptgrade
