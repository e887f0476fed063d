#include "promptgrade/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "promptgrade/analytics.hpp"
#include "promptgrade/api_service.hpp"
#include "promptgrade/grading.hpp"
#include "promptgrade/hash.hpp"
#include "promptgrade/llm_gateway.hpp"
#include "promptgrade/persistence.hpp"
#include "promptgrade/problem_repository.hpp"
#include "promptgrade/sandbox.hpp"

namespace promptgrade {

namespace fs = std::filesystem;

namespace {

std::atomic<httplib::Server*> g_running_server{nullptr};

struct ServeOptions {
  std::vector<std::string> course_dirs;
  std::string listen = "127.0.0.1:8080";
  std::string provider;
  std::string data_dir = "data";
  double sandbox_timeout = 10.0;
  std::size_t pool = 4;
};

struct ValidateOptions {
  std::string course_dir;
  double sandbox_timeout = 10.0;
};

struct EvalOptions {
  std::string course_dir;
  std::string prompts;
  int k = 1;
  std::string provider;
  std::string out_csv;
  double sandbox_timeout = 10.0;
  std::size_t pool = 4;
};

struct AnalyticsOptions {
  std::string course_dir;
  std::string data_dir = "data";
  std::string kind;
  std::string out_csv;
};

struct UserAddOptions {
  std::string data_dir = "data";
  std::string user_id;
  std::string name;
  std::string role = "student";
  std::string secret;
};

ExecutionLimits limits_with_timeout(double seconds) {
  ExecutionLimits limits;
  limits.wall_clock_timeout = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
  return limits;
}

int serve(const ServeOptions& o, std::ostream& out, std::ostream& err, const CliHooks& hooks) {
  CourseCatalog catalog;
  try {
    for (const auto& dir : o.course_dirs) catalog.add(fs::path(dir));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  }

  std::unique_ptr<Provider> provider;
  std::unique_ptr<Store> store;
  ExecutionLimits limits;
  try {
    provider = make_provider(ProviderConfig::load(o.provider));
    store = std::make_unique<Store>(fs::path(o.data_dir));
    limits = limits_with_timeout(o.sandbox_timeout);
    limits.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  }

  const auto colon = o.listen.rfind(':');
  if (colon == std::string::npos) {
    err << "error: --listen must be host:port\n";
    return exit_code::kConfig;
  }
  const auto host = o.listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(o.listen.substr(colon + 1));
  } catch (const std::exception&) {
    err << "error: bad port in --listen " << o.listen << "\n";
    return exit_code::kConfig;
  }

  Sandbox sandbox(o.pool);
  SandboxJudge judge(sandbox, limits);
  SystemClock clock;
  GradingEngine engine(catalog, *provider, judge, *store, clock, o.pool);
  ApiService api(catalog, engine, *store, clock);

  httplib::Server server;
  // The library default enables SO_REUSEPORT, which would let a second server
  // share an occupied port instead of failing to bind.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  api.mount(server);

  int bound = -1;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) {
    err << "error: cannot bind " << o.listen << "\n";
    return exit_code::kBind;
  }

  out << "listening on http://" << host << ":" << bound << std::endl;
  g_running_server.store(&server);
  if (hooks.on_listening) hooks.on_listening(server, bound);
  server.listen_after_bind();
  g_running_server.store(nullptr);
  return exit_code::kOk;
}

int validate(const ValidateOptions& o, std::ostream& out, std::ostream& err) {
  Course course;
  try {
    course = load_course(fs::path(o.course_dir));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  }
  Sandbox sandbox;
  const auto limits = limits_with_timeout(o.sandbox_timeout);
  bool all_ok = true;
  for (const auto& problem : course.problems) {
    const auto reference = load_reference_solution(course, problem);
    if (!reference) {
      all_ok = false;
      out << "FAIL " << problem.problem_id << ": missing reference solution "
          << (course.solutions_dir() / (problem.problem_id + ".py")).string() << "\n";
      continue;
    }
    try {
      const auto report = validate_problem(problem, *reference, sandbox, limits);
      if (report.ok()) {
        out << "PASS " << problem.problem_id << "\n";
      } else {
        all_ok = false;
        out << "FAIL " << problem.problem_id << ": failing tests";
        for (std::size_t i = 0; i < report.failing_test_ids.size(); ++i) {
          out << (i ? ", " : " ") << report.failing_test_ids[i];
        }
        out << "\n";
        for (const auto& f : report.failures) {
          err << "  " << f.test_id << " [" << to_string(f.status) << "] expected " << Json(f.expected_display).dump()
              << ", got " << Json(f.actual_display).dump() << "\n";
        }
      }
    } catch (const SandboxUnavailable& e) {
      err << "error: sandbox unavailable: " << e.what() << "\n";
      return exit_code::kFailure;
    }
  }
  return all_ok ? exit_code::kOk : exit_code::kFailure;
}

struct EvalRow {
  std::string problem_id;
  std::string pass_at_1;
  std::string robustness;
  std::string word_count;
  std::string status;
};

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

EvalRow eval_line(const std::string& line, const Course& course, int k, Provider& provider, Judge& judge,
                  std::size_t pool) {
  EvalRow row;
  const auto j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("problem_id") || !j.contains("prompt_text") ||
      !j["problem_id"].is_string() || !j["prompt_text"].is_string()) {
    row.status = "malformed_line";
    return row;
  }
  row.problem_id = j["problem_id"].get<std::string>();
  const auto index = course.index_of(row.problem_id);
  if (!index) {
    row.status = "unknown_problem_id";
    return row;
  }
  const auto& problem = course.problems[*index];
  const auto body = j["prompt_text"].get<std::string>();
  row.word_count = std::to_string(word_count(body));
  std::string full_prompt;
  try {
    full_prompt = full_prompt_from_body(problem, body);
  } catch (const EmptyStudentText&) {
    row.status = "empty_prompt";
    return row;
  }

  Verdict first = Verdict::GenerationError;
  try {
    const auto program = request_generation(GenerationRequest{full_prompt, problem.problem_id, 0}, provider);
    first = judge.evaluate(problem, program.source_code).verdict;
  } catch (const SandboxSetupFailure&) {
    first = Verdict::ExecutionError;
  } catch (const std::exception&) {
    first = Verdict::GenerationError;
  }
  int passes = first == Verdict::Pass ? 1 : 0;
  if (k > 1) passes += measure_robustness(problem, full_prompt, k - 1, provider, judge, pool, 1).passes;
  row.pass_at_1 = std::string(to_string(first));
  row.robustness = format_fraction(static_cast<double>(passes) / k);
  row.status = "ok";
  return row;
}

int eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  if (o.k < 1) {
    err << "error: --k must be at least 1\n";
    return exit_code::kConfig;
  }
  Course course;
  std::unique_ptr<Provider> provider;
  ExecutionLimits limits;
  try {
    course = load_course(fs::path(o.course_dir));
    provider = make_provider(ProviderConfig::load(o.provider));
    limits = limits_with_timeout(o.sandbox_timeout);
    limits.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  }
  std::ifstream prompts(o.prompts);
  if (!prompts) {
    err << "error: cannot read prompts file " << o.prompts << "\n";
    return exit_code::kConfig;
  }
  std::vector<std::string> lines;
  for (std::string line; std::getline(prompts, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }

  Sandbox sandbox(o.pool);
  SandboxJudge judge(sandbox, limits);

  std::vector<EvalRow> rows(lines.size());
  const std::size_t batch = std::max<std::size_t>(1, o.pool);
  for (std::size_t start = 0; start < lines.size(); start += batch) {
    std::vector<std::future<EvalRow>> futures;
    for (std::size_t i = start; i < std::min(lines.size(), start + batch); ++i) {
      futures.push_back(std::async(std::launch::async, [&, i] {
        return eval_line(lines[i], course, o.k, *provider, judge, o.pool);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) rows[start + i] = futures[i].get();
  }

  std::ostringstream csv;
  csv << "problem_id,pass_at_1,robustness,k,word_count,status\r\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.status != "ok") err << "warning: line " << (i + 1) << ": " << r.status << "\n";
    csv << csv_field(r.problem_id) << "," << r.pass_at_1 << "," << r.robustness << "," << o.k << "," << r.word_count
        << "," << r.status << "\r\n";
  }
  out << csv.str();
  if (!o.out_csv.empty()) {
    std::ofstream file(o.out_csv, std::ios::binary);
    file << csv.str();
    if (!file) {
      err << "error: cannot write " << o.out_csv << "\n";
      return exit_code::kFailure;
    }
  }
  return exit_code::kOk;
}

int analytics(const AnalyticsOptions& o, std::ostream& out, std::ostream& err) {
  Course course;
  try {
    course = load_course(fs::path(o.course_dir));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  }
  const auto log_path = fs::path(o.data_dir) / ("submissions-" + course.course_id + ".jsonl");
  if (!fs::is_regular_file(log_path)) {
    err << "error: no submission log at " << log_path.string() << "\n";
    return exit_code::kFailure;
  }
  Store store(fs::path(o.data_dir));
  SubmissionFilter filter;
  filter.course_id = course.course_id;
  const auto log = store.query_submissions(filter);
  const auto csv = export_csv(o.kind == "summary" ? ExportKind::Summary : ExportKind::Timeline, course, log);
  if (o.out_csv.empty() || o.out_csv == "-") {
    out << csv;
    return exit_code::kOk;
  }
  std::ofstream file(o.out_csv, std::ios::binary);
  file << csv;
  if (!file) {
    err << "error: cannot write " << o.out_csv << "\n";
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}

int user_add(const UserAddOptions& o, std::ostream& out, std::ostream& err) {
  try {
    Store store(fs::path(o.data_dir));
    store.add_user(UserRecord{o.user_id, o.name.empty() ? o.user_id : o.name, role_from_string(o.role),
                              sha256_hex(o.secret)});
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kFailure;
  }
  out << "added " << o.role << " " << o.user_id << "\n";
  return exit_code::kOk;
}

}  // namespace

void request_shutdown() {
  if (auto* server = g_running_server.load()) server->stop();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliHooks& hooks) {
  CLI::App app{"Prompt problem platform: serve, validate courses, batch-evaluate prompts, export analytics"};
  app.require_subcommand(1);

  ServeOptions serve_opts;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--course-dir", serve_opts.course_dirs, "Course directory (repeatable)")->required();
  serve_cmd->add_option("--listen", serve_opts.listen, "host:port (port 0 picks a free port)");
  serve_cmd->add_option("--provider", serve_opts.provider, "Provider config JSON")->required();
  serve_cmd->add_option("--data-dir", serve_opts.data_dir, "Submission log and user store");
  serve_cmd->add_option("--sandbox-timeout", serve_opts.sandbox_timeout, "Seconds per sandbox run");
  serve_cmd->add_option("--pool", serve_opts.pool, "Concurrent sandboxes");

  ValidateOptions validate_opts;
  auto* validate_cmd = app.add_subcommand("validate", "Check reference solutions against every test");
  validate_cmd->add_option("--course-dir", validate_opts.course_dir)->required();
  validate_cmd->add_option("--sandbox-timeout", validate_opts.sandbox_timeout);

  EvalOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Batch pass@1 and robustness for a prompts file");
  eval_cmd->add_option("--course-dir", eval_opts.course_dir)->required();
  eval_cmd->add_option("--prompts", eval_opts.prompts, "JSONL of {problem_id, prompt_text}")->required();
  eval_cmd->add_option("--k", eval_opts.k, "Generations per prompt")->required();
  eval_cmd->add_option("--provider", eval_opts.provider)->required();
  eval_cmd->add_option("--out", eval_opts.out_csv, "Also write the CSV here");
  eval_cmd->add_option("--sandbox-timeout", eval_opts.sandbox_timeout);
  eval_cmd->add_option("--pool", eval_opts.pool);

  AnalyticsOptions analytics_opts;
  auto* analytics_cmd = app.add_subcommand("analytics", "Export summary or timeline CSV");
  analytics_cmd->add_option("--course-dir", analytics_opts.course_dir)->required();
  analytics_cmd->add_option("--data-dir", analytics_opts.data_dir);
  analytics_cmd->add_option("--kind", analytics_opts.kind)->required()->check(CLI::IsMember({"summary", "timeline"}));
  analytics_cmd->add_option("--out", analytics_opts.out_csv, "Output file ('-' for stdout)");

  UserAddOptions user_opts;
  auto* user_cmd = app.add_subcommand("user-add", "Register a student or instructor");
  user_cmd->add_option("--data-dir", user_opts.data_dir);
  user_cmd->add_option("--user-id", user_opts.user_id)->required();
  user_cmd->add_option("--name", user_opts.name);
  user_cmd->add_option("--role", user_opts.role)->check(CLI::IsMember({"student", "instructor"}));
  user_cmd->add_option("--secret", user_opts.secret)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kConfig;
  }

  if (*serve_cmd) return serve(serve_opts, out, err, hooks);
  if (*validate_cmd) return validate(validate_opts, out, err);
  if (*eval_cmd) return eval(eval_opts, out, err);
  if (*analytics_cmd) return analytics(analytics_opts, out, err);
  if (*user_cmd) return user_add(user_opts, out, err);
  return exit_code::kConfig;
}

}  // namespace promptgrade
