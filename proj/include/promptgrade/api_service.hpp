#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "promptgrade/clock.hpp"
#include "promptgrade/grading.hpp"
#include "promptgrade/persistence.hpp"
#include "promptgrade/problem_repository.hpp"

namespace httplib {
class Server;
}

namespace promptgrade {

/// Transport-neutral request; header names are lowercase.
struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct SessionToken {
  std::string token;
  std::string user_id;
  Timestamp expiry{};
};

struct ApiOptions {
  std::chrono::milliseconds token_ttl{std::chrono::hours(8)};
};

/// JSON API under /api/ plus static problem images under /assets/.
///
///   POST /api/login                                   {user_id, secret} -> {token, expires_at}
///   GET  /api/courses
///   GET  /api/courses/{c}/problems/{i}
///   POST /api/courses/{c}/problems/{i}/submissions    {student_text}
///   GET  /api/courses/{c}/analytics?kind=summary|timeline[&format=csv|json]   instructors only
///   GET  /assets/{c}/{file}
class ApiService {
 public:
  ApiService(const CourseCatalog& catalog, GradingEngine& engine, Store& store, const Clock& clock,
             ApiOptions options = {});

  HttpResponse handle(const HttpRequest& request);

  /// Route every GET/POST on `server` through handle().
  void mount(httplib::Server& server);

  /// Issue a token directly (used by tests and tooling).
  SessionToken issue_token(const std::string& user_id);

 private:
  std::optional<SessionToken> authenticate(const HttpRequest& request);

  HttpResponse login(const HttpRequest& request);
  HttpResponse list_courses();
  HttpResponse problem_view(const SessionToken& session, const std::string& course_id, const std::string& index);
  HttpResponse submit(const SessionToken& session, const std::string& course_id, const std::string& index,
                      const HttpRequest& request);
  HttpResponse analytics(const SessionToken& session, const std::string& course_id, const HttpRequest& request);
  HttpResponse asset(const std::string& course_id, const std::string& relative);

  const CourseCatalog& catalog_;
  GradingEngine& engine_;
  Store& store_;
  const Clock& clock_;
  ApiOptions options_;

  std::mutex tokens_mutex_;
  std::map<std::string, SessionToken> tokens_;
};

}  // namespace promptgrade
