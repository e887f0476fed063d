#include "promptgrade/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <vector>

#include "promptgrade/hash.hpp"

namespace promptgrade {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    auto line = s.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool is_fence(std::string_view line) {
  const auto t = line.substr(std::min(line.size(), line.find_first_not_of(" \t")));
  return t.rfind("```", 0) == 0;
}

bool starts_with_keyword(std::string_view line) {
  static const std::regex re(
      R"(^(def|class|import|from|for|while|if|elif|else|try|except|finally|with|return|async|await|lambda|print|raise|assert|global|nonlocal|pass|yield|del|match)\b)");
  return std::regex_search(line.begin(), line.end(), re);
}

bool assignment_or_call_shape(std::string_view line) {
  // name = ..., name += ..., obj.attr[i] = ..., a, b = ..., name(...)
  static const std::regex assign(R"(^[A-Za-z_][\w.\[\]'", ]*\s*([-+*/%&|^@]|//|\*\*|<<|>>)?=[^=])");
  static const std::regex call(R"(^[A-Za-z_][\w.]*\()");
  return std::regex_search(line.begin(), line.end(), assign) || std::regex_search(line.begin(), line.end(), call);
}

}  // namespace

std::string guardrail_for(const PromptProblem& problem) {
  std::string g(kGuardrail);
  if (problem.kind == ProblemKind::Function && problem.function_name) {
    g += " The code must define a function named " + *problem.function_name + ".";
  }
  return g;
}

std::string prompt_body(const PromptProblem& problem, std::string_view student_text) {
  const auto text = trim(student_text);
  if (text.empty()) throw EmptyStudentText();
  return problem.prompt_prefix + " " + std::string(text);
}

std::string build_full_prompt(const PromptProblem& problem, std::string_view student_text) {
  return prompt_body(problem, student_text) + "\n" + guardrail_for(problem);
}

std::string full_prompt_from_body(const PromptProblem& problem, std::string_view body) {
  const auto text = trim(body);
  if (text.empty()) throw EmptyStudentText();
  return std::string(text) + "\n" + guardrail_for(problem);
}

std::string_view strip_guardrail(const PromptProblem& problem, std::string_view full_prompt) {
  const auto suffix = "\n" + guardrail_for(problem);
  if (full_prompt.size() >= suffix.size() && full_prompt.substr(full_prompt.size() - suffix.size()) == suffix) {
    full_prompt.remove_suffix(suffix.size());
  }
  return full_prompt;
}

bool looks_like_code_line(std::string_view line) {
  line = trim(line);
  if (line.empty()) return false;
  if (line.front() == '#' || line.front() == '@') return true;
  if (starts_with_keyword(line) || assignment_or_call_shape(line)) return true;
  if (line.back() == '.') return false;
  const auto alpha_space = std::count_if(line.begin(), line.end(), [](unsigned char c) {
    return std::isalpha(c) || c == ' ';
  });
  return static_cast<double>(alpha_space) <= 0.6 * static_cast<double>(line.size());
}

std::string extract_code(std::string_view raw_response) {
  const auto lines = split_lines(raw_response);

  // E1
  if (std::any_of(lines.begin(), lines.end(), is_fence)) {
    std::string code;
    bool inside = false;
    bool first_block_line = true;
    for (const auto line : lines) {
      if (is_fence(line)) {
        inside = !inside;
        continue;
      }
      if (!inside) continue;
      if (!first_block_line) code.push_back('\n');
      code.append(line);
      first_block_line = false;
    }
    const auto trimmed = trim(code);
    if (trimmed.empty()) throw NoCodeInResponse(std::string(raw_response));
    return std::string(trimmed);
  }

  // E2
  const auto first = std::find_if(lines.begin(), lines.end(), [](auto l) { return !trim(l).empty(); });
  if (first != lines.end() && looks_like_code_line(*first)) return std::string(trim(raw_response));

  // E3
  throw NoCodeInResponse(std::string(raw_response));
}

std::string prompt_hash(std::string_view full_prompt) { return sha256_hex(full_prompt); }

void ProviderConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw InvalidProviderConfig("temperature must be in [0, 2]");
  if (request_timeout.count() <= 0) throw InvalidProviderConfig("request_timeout must be positive");
  if (max_retries < 0 || max_retries > 10) throw InvalidProviderConfig("max_retries must be in [0, 10]");
  if (initial_backoff.count() < 0) throw InvalidProviderConfig("initial_backoff must not be negative");
  if (provider_kind == ProviderKind::HttpChat) {
    if (endpoint_url.rfind("http://", 0) != 0 && endpoint_url.rfind("https://", 0) != 0) {
      throw InvalidProviderConfig("endpoint_url must be an http(s) URL");
    }
    if (model_name.empty()) throw InvalidProviderConfig("model_name must not be empty");
    try {
      (void)Json::json_pointer(response_pointer);
    } catch (const Json::exception&) {
      throw InvalidProviderConfig("response_pointer is not a JSON pointer: " + response_pointer);
    }
  }
  for (const auto& [hash, entry] : mock_table) {
    if (entry.pass_probability) {
      const double p = *entry.pass_probability;
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidProviderConfig("pass_probability must be in [0, 1] for " + hash);
      if (!entry.incorrect_response) {
        throw InvalidProviderConfig("stochastic mock entry " + hash + " needs an incorrect_response");
      }
    }
  }
}

ProviderConfig ProviderConfig::from_json(const Json& j) {
  if (!j.is_object()) throw InvalidProviderConfig("provider config must be a JSON object");
  ProviderConfig c;
  try {
    const auto kind = j.value("provider_kind", std::string("mock"));
    if (kind == "http" || kind == "HttpChatProvider") {
      c.provider_kind = ProviderKind::HttpChat;
    } else if (kind == "mock" || kind == "MockProvider") {
      c.provider_kind = ProviderKind::Mock;
    } else {
      throw InvalidProviderConfig("unknown provider_kind: " + kind);
    }
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_name = j.value("model_name", c.model_name);
    c.temperature = j.value("temperature", c.temperature);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    if (j.contains("request_timeout")) {
      c.request_timeout = std::chrono::milliseconds(
          static_cast<long long>(j.at("request_timeout").get<double>() * 1000.0));
    }
    c.max_retries = j.value("max_retries", c.max_retries);
    if (j.contains("initial_backoff_ms")) {
      c.initial_backoff = std::chrono::milliseconds(j.at("initial_backoff_ms").get<long long>());
    }
    c.response_pointer = j.value("response_pointer", c.response_pointer);
    c.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("mock_table")) {
      const auto& table = j.at("mock_table");
      if (!table.is_array()) throw InvalidProviderConfig("mock_table must be an array");
      for (const auto& e : table) {
        std::string hash;
        if (e.contains("prompt_hash")) {
          hash = e.at("prompt_hash").get<std::string>();
        } else if (e.contains("full_prompt")) {
          hash = prompt_hash(e.at("full_prompt").get<std::string>());
        } else {
          throw InvalidProviderConfig("mock_table entry needs prompt_hash or full_prompt");
        }
        MockEntry entry;
        entry.response = e.at("response").get<std::string>();
        if (e.contains("incorrect_response")) entry.incorrect_response = e.at("incorrect_response").get<std::string>();
        if (e.contains("pass_probability")) entry.pass_probability = e.at("pass_probability").get<double>();
        c.mock_table[hash] = std::move(entry);
      }
    }
  } catch (const Json::exception& e) {
    throw InvalidProviderConfig(std::string("provider config: ") + e.what());
  }
  c.validate();
  return c;
}

ProviderConfig ProviderConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidProviderConfig("cannot read provider config " + path.string());
  const auto j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InvalidProviderConfig("provider config is not valid JSON: " + path.string());
  return from_json(j);
}

std::unique_ptr<MockProvider> MockProvider::configure(std::map<std::string, MockEntry> table, std::uint64_t seed) {
  ProviderConfig check;
  check.mock_table = table;
  check.validate();
  return std::unique_ptr<MockProvider>(new MockProvider(std::move(table), seed));
}

MockProvider::MockProvider(std::map<std::string, MockEntry> table, std::uint64_t seed)
    : table_(std::move(table)), seed_(seed) {}

ProviderReply MockProvider::complete(const GenerationRequest& request) {
  const auto hash = prompt_hash(request.full_prompt);
  const auto it = table_.find(hash);
  if (it == table_.end()) throw UnknownPrompt(hash);
  const auto& entry = it->second;

  ProviderReply reply;
  reply.metadata["model"] = "mock";
  reply.metadata["prompt_hash"] = hash;
  if (!entry.pass_probability) {
    reply.raw_response = entry.response;
    return reply;
  }
  const auto hash_bits = std::stoull(hash.substr(0, 8), nullptr, 16);
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(request.attempt_nonce),
                    static_cast<std::uint32_t>(request.attempt_nonce >> 32), static_cast<std::uint32_t>(hash_bits)};
  std::mt19937_64 rng(seq);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  const bool correct = u < *entry.pass_probability;
  reply.raw_response = correct ? entry.response : *entry.incorrect_response;
  reply.metadata["variant"] = correct ? "correct" : "incorrect";
  return reply;
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.provider_kind == ProviderKind::HttpChat) return std::make_unique<HttpChatProvider>(config);
  return MockProvider::configure(config.mock_table, config.seed);
}

GeneratedProgram request_generation(const GenerationRequest& request, Provider& provider) {
  if (request.full_prompt.empty()) throw std::invalid_argument("full_prompt must not be empty");
  auto reply = provider.complete(request);
  GeneratedProgram out;
  out.source_code = extract_code(reply.raw_response);
  out.raw_response = std::move(reply.raw_response);
  out.provider_metadata = std::move(reply.metadata);
  return out;
}

}  // namespace promptgrade
