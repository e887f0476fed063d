#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "promptgrade/llm_gateway.hpp"

namespace promptgrade {

namespace {

constexpr std::size_t kExcerptBytes = 300;

std::string excerpt(const std::string& body) {
  return body.size() <= kExcerptBytes ? body : body.substr(0, kExcerptBytes) + "...";
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.endpoint_url.find("://");
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint_url.substr(path_start);
}

ProviderReply HttpChatProvider::complete(const GenerationRequest& request) {
  const Json body = {
      {"model", config_.model_name},
      {"temperature", config_.temperature},
      {"messages", Json::array({{{"role", "user"}, {"content", request.full_prompt}}})},
  };
  const auto payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto timeout = config_.request_timeout;
  auto backoff = config_.initial_backoff;
  std::string last_transport_error;
  int last_status = 0;
  std::string last_body;

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_transport_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (retryable_status(res->status)) {
      last_status = res->status;
      last_body = res->body;
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw ProviderRejected(res->status, excerpt(res->body));

    const auto parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw ProviderRejected(res->status, "reply is not JSON: " + excerpt(res->body));
    const Json::json_pointer ptr(config_.response_pointer);
    if (!parsed.contains(ptr) || !parsed.at(ptr).is_string()) {
      throw ProviderRejected(res->status, "no completion text at " + config_.response_pointer);
    }
    ProviderReply reply;
    reply.raw_response = parsed.at(ptr).get<std::string>();
    reply.metadata["model"] = parsed.value("model", config_.model_name);
    if (const auto usage = parsed.find("usage"); usage != parsed.end() && usage->is_object()) {
      for (auto it = usage->begin(); it != usage->end(); ++it) {
        if (it.value().is_number_integer()) reply.metadata["usage." + it.key()] = std::to_string(it.value().get<long long>());
      }
    }
    return reply;
  }

  if (last_status != 0) throw ProviderRejected(last_status, excerpt(last_body));
  throw ProviderTimeout("provider unreachable after " + std::to_string(config_.max_retries + 1) +
                        " attempts: " + last_transport_error);
}

}  // namespace promptgrade
