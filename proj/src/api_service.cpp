#include "promptgrade/api_service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "httplib.h"
#include "promptgrade/analytics.hpp"
#include "promptgrade/hash.hpp"

namespace promptgrade {

namespace fs = std::filesystem;

namespace {

HttpResponse json_response(int status, const Json& body) { return HttpResponse{status, "application/json", body.dump()}; }

HttpResponse error_response(int status, std::string_view message) {
  return json_response(status, {{"error", std::string(message)}});
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    const auto slash = path.find('/', start);
    const auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::optional<long long> parse_index(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string content_type_for(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

ApiService::ApiService(const CourseCatalog& catalog, GradingEngine& engine, Store& store, const Clock& clock,
                       ApiOptions options)
    : catalog_(catalog), engine_(engine), store_(store), clock_(clock), options_(options) {}

SessionToken ApiService::issue_token(const std::string& user_id) {
  SessionToken t{random_hex(24), user_id, clock_.now() + options_.token_ttl};
  std::lock_guard lock(tokens_mutex_);
  tokens_[t.token] = t;
  return t;
}

std::optional<SessionToken> ApiService::authenticate(const HttpRequest& request) {
  const auto it = request.headers.find("authorization");
  if (it == request.headers.end()) return std::nullopt;
  constexpr std::string_view kBearer = "Bearer ";
  if (it->second.rfind(kBearer, 0) != 0) return std::nullopt;
  const auto token = it->second.substr(kBearer.size());
  std::lock_guard lock(tokens_mutex_);
  const auto found = tokens_.find(token);
  if (found == tokens_.end()) return std::nullopt;
  if (clock_.now() >= found->second.expiry) {
    tokens_.erase(found);
    return std::nullopt;
  }
  return found->second;
}

HttpResponse ApiService::handle(const HttpRequest& request) {
  const auto parts = split_path(request.path);
  try {
    if (parts.size() >= 3 && parts[0] == "assets" && request.method == "GET") {
      std::string rel;
      for (std::size_t i = 2; i < parts.size(); ++i) rel += (i > 2 ? "/" : "") + parts[i];
      return asset(parts[1], rel);
    }
    if (parts.empty() || parts[0] != "api") return error_response(404, "not found");

    if (parts.size() == 2 && parts[1] == "login") {
      if (request.method != "POST") return error_response(405, "method not allowed");
      return login(request);
    }

    const auto session = authenticate(request);
    if (!session) return error_response(401, "missing, invalid or expired token");

    if (parts.size() == 2 && parts[1] == "courses" && request.method == "GET") return list_courses();
    if (parts.size() == 5 && parts[1] == "courses" && parts[3] == "problems" && request.method == "GET") {
      return problem_view(*session, parts[2], parts[4]);
    }
    if (parts.size() == 6 && parts[1] == "courses" && parts[3] == "problems" && parts[5] == "submissions" &&
        request.method == "POST") {
      return submit(*session, parts[2], parts[4], request);
    }
    if (parts.size() == 4 && parts[1] == "courses" && parts[3] == "analytics" && request.method == "GET") {
      return analytics(*session, parts[2], request);
    }
    return error_response(404, "not found");
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse ApiService::login(const HttpRequest& request) {
  const auto body = Json::parse(request.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("user_id") || !body.contains("secret") ||
      !body["user_id"].is_string() || !body["secret"].is_string()) {
    return error_response(400, "expected {user_id, secret}");
  }
  const auto user = store_.find_user(body["user_id"].get<std::string>());
  if (!user || user->auth_token_hash != sha256_hex(body["secret"].get<std::string>())) {
    return error_response(401, "bad credentials");
  }
  const auto token = issue_token(user->user_id);
  return json_response(200, {{"token", token.token},
                             {"user_id", user->user_id},
                             {"role", to_string(user->role)},
                             {"expires_at", format_timestamp(token.expiry)}});
}

HttpResponse ApiService::list_courses() {
  Json courses = Json::array();
  for (const auto& c : catalog_.all()) {
    courses.push_back({{"course_id", c->course_id}, {"title", c->title}, {"problem_count", c->problems.size()}});
  }
  return json_response(200, {{"courses", std::move(courses)}});
}

HttpResponse ApiService::problem_view(const SessionToken& session, const std::string& course_id,
                                      const std::string& index_text) {
  const auto course = catalog_.find(course_id);
  const auto index = parse_index(index_text);
  if (!course || !index || *index < 0 || static_cast<std::size_t>(*index) >= course->problems.size()) {
    return error_response(404, "unknown course or problem");
  }
  if (!engine_.can_access(session.user_id, course_id, *index)) {
    return error_response(403, "problem is locked until the previous problem is solved");
  }
  const auto& p = course->problems[static_cast<std::size_t>(*index)];
  const auto progress = engine_.progress(session.user_id, course_id);
  Json view = {{"problem_id", p.problem_id},
               {"index", *index},
               {"kind", to_string(p.kind)},
               {"prompt_prefix", p.prompt_prefix},
               {"image_url", "/assets/" + course->course_id + "/" + p.image_asset},
               {"solved", progress.solved.contains(p.problem_id)}};
  if (p.max_prompt_words) view["max_prompt_words"] = *p.max_prompt_words;
  return json_response(200, view);
}

HttpResponse ApiService::submit(const SessionToken& session, const std::string& course_id,
                                const std::string& index_text, const HttpRequest& request) {
  const auto course = catalog_.find(course_id);
  const auto index = parse_index(index_text);
  if (!course || !index || *index < 0 || static_cast<std::size_t>(*index) >= course->problems.size()) {
    return error_response(404, "unknown course or problem");
  }
  const auto body = Json::parse(request.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("student_text") ||
      !body["student_text"].is_string()) {
    return error_response(400, "expected {student_text}");
  }

  Submission s;
  try {
    s = engine_.submit(session.user_id, course_id, *index, body["student_text"].get<std::string>());
  } catch (const LockedProblem& e) {
    return error_response(403, e.what());
  } catch (const EmptyStudentText& e) {
    return json_response(422, {{"error", e.what()}, {"code", "empty_student_text"}});
  } catch (const PromptTooLong& e) {
    return json_response(422,
                         {{"error", e.what()}, {"code", "prompt_too_long"}, {"limit", e.limit()}, {"actual", e.actual()}});
  }

  Json first_failure = nullptr;
  if (s.result.verdict == Verdict::Fail && s.result.first_failure) {
    const auto& f = *s.result.first_failure;
    first_failure = {{"test_id", f.test_id},
                     {"status", to_string(f.status)},
                     {"input_display", f.input_display},
                     {"expected_display", f.expected_display},
                     {"actual_display", f.actual_display}};
  }
  const auto next = static_cast<std::size_t>(*index) + 1;
  const bool unlocked_next = s.passed() && next < course->problems.size() &&
                             engine_.can_access(session.user_id, course_id, static_cast<long long>(next));
  Json out = {{"submission_id", s.submission_id},
              {"attempt_number", s.attempt_number},
              {"word_count", s.word_count},
              {"verdict", to_string(s.result.verdict)},
              {"feedback_message", feedback_for(s.result)},
              {"first_failure", std::move(first_failure)},
              {"unlocked_next", unlocked_next}};
  if (s.generated) out["generated_code"] = s.generated->source_code;

  const bool provider_down = s.generation_failure && (s.generation_failure->kind == "provider_timeout" ||
                                                      s.generation_failure->kind == "provider_rejected");
  return json_response(provider_down ? 502 : 200, out);
}

HttpResponse ApiService::analytics(const SessionToken& session, const std::string& course_id,
                                   const HttpRequest& request) {
  const auto user = store_.find_user(session.user_id);
  if (!user || user->role != Role::Instructor) return error_response(403, "instructors only");
  const auto course = catalog_.find(course_id);
  if (!course) return error_response(404, "unknown course");

  const auto kind_it = request.query.find("kind");
  const std::string kind = kind_it == request.query.end() ? "" : kind_it->second;
  ExportKind export_kind;
  if (kind == "summary") {
    export_kind = ExportKind::Summary;
  } else if (kind == "timeline") {
    export_kind = ExportKind::Timeline;
  } else {
    return error_response(400, "kind must be summary or timeline");
  }
  const auto format_it = request.query.find("format");
  const std::string format = format_it == request.query.end() ? "csv" : format_it->second;
  if (format != "csv" && format != "json") return error_response(400, "format must be csv or json");

  SubmissionFilter filter;
  filter.course_id = course_id;
  const auto log = store_.query_submissions(filter);
  if (format == "json") return json_response(200, export_json(export_kind, *course, log));
  return HttpResponse{200, "text/csv; charset=utf-8", export_csv(export_kind, *course, log)};
}

HttpResponse ApiService::asset(const std::string& course_id, const std::string& relative) {
  const auto course = catalog_.find(course_id);
  if (!course) return error_response(404, "not found");
  const fs::path rel(relative);
  for (const auto& part : rel) {
    if (part == ".." || part == ".") return error_response(404, "not found");
  }
  const auto path = course->assets_dir() / rel;
  if (!fs::is_regular_file(path)) return error_response(404, "not found");
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return HttpResponse{200, content_type_for(path), ss.str()};
}

void ApiService::mount(httplib::Server& server) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      r.headers[key] = v;
    }
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(".*", route);
  server.Post(".*", route);
}

}  // namespace promptgrade
