#include "promptgrade/analytics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace promptgrade {

namespace {

/// Attempts of one user on one problem, in attempt order.
using Series = std::vector<const Submission*>;

std::map<std::string, Series> series_by_user(std::string_view course_id, std::string_view problem_id,
                                             std::span<const Submission> log) {
  std::map<std::string, Series> by_user;
  for (const auto& s : log) {
    if (s.course_id == course_id && s.problem_id == problem_id) by_user[s.user_id].push_back(&s);
  }
  for (auto& [user, series] : by_user) {
    std::stable_sort(series.begin(), series.end(),
                     [](const Submission* a, const Submission* b) { return a->attempt_number < b->attempt_number; });
  }
  return by_user;
}

std::string format_tenths(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

template <typename T>
std::string opt_field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, double>) {
    return format_tenths(*v);
  } else {
    return std::to_string(*v);
  }
}

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

constexpr std::string_view kSummaryHeader =
    "problem_id,attempters,solvers,success_pct,avg_submissions,mean_words,min_words,max_words,"
    "avg_submissions_all_attempts";
constexpr std::string_view kTimelineHeader = "problem_id,user_id,attempt_number,word_count,passed,is_final_failure";
constexpr std::string_view kCrlf = "\r\n";

}  // namespace

double round_tenths(long long numerator, long long denominator) {
  if (denominator <= 0) throw std::invalid_argument("denominator must be positive");
  // floor((10 n / d) + 1/2) == floor((20 n + d) / (2 d)) for n >= 0.
  const long long tenths = (20 * numerator + denominator) / (2 * denominator);
  return static_cast<double>(tenths) / 10.0;
}

int round_percent(long long part, long long whole) {
  if (whole <= 0) throw std::invalid_argument("whole must be positive");
  return static_cast<int>((200 * part + whole) / (2 * whole));
}

ProblemSummary summarize(std::string_view course_id, std::string_view problem_id, std::span<const Submission> log) {
  ProblemSummary out;
  out.problem_id = std::string(problem_id);
  const auto by_user = series_by_user(course_id, problem_id, log);
  out.attempters = static_cast<int>(by_user.size());
  if (out.attempters == 0) return out;

  long long attempts_to_solve = 0;
  long long all_attempts = 0;
  long long words_sum = 0;
  int min_w = 0;
  int max_w = 0;
  for (const auto& [user, series] : by_user) {
    const auto first_pass = std::find_if(series.begin(), series.end(), [](const Submission* s) { return s->passed(); });
    if (first_pass == series.end()) continue;
    const int w = (*first_pass)->word_count;
    if (out.solvers == 0) {
      min_w = max_w = w;
    } else {
      min_w = std::min(min_w, w);
      max_w = std::max(max_w, w);
    }
    ++out.solvers;
    attempts_to_solve += (first_pass - series.begin()) + 1;
    all_attempts += static_cast<long long>(series.size());
    words_sum += w;
  }
  out.success_pct = round_percent(out.solvers, out.attempters);
  if (out.solvers > 0) {
    out.avg_submissions_to_solve = round_tenths(attempts_to_solve, out.solvers);
    out.avg_submissions_all_attempts = round_tenths(all_attempts, out.solvers);
    out.mean_words = round_tenths(words_sum, out.solvers);
    out.min_words = min_w;
    out.max_words = max_w;
  }
  return out;
}

std::string render_summary_row(const ProblemSummary& s) {
  if (s.attempters < 1) throw EmptySummary();
  return std::to_string(s.solvers) + " (" + std::to_string(s.success_pct) + "%) | " +
         opt_field(s.avg_submissions_to_solve) + " | " + opt_field(s.mean_words) + " | " + opt_field(s.min_words) +
         " | " + opt_field(s.max_words);
}

Timeline timeline(std::string_view course_id, std::string_view problem_id, std::span<const Submission> log) {
  Timeline out;
  for (const auto& [user, series] : series_by_user(course_id, problem_id, log)) {
    const bool ever_passed = std::any_of(series.begin(), series.end(), [](const Submission* s) { return s->passed(); });
    auto& points = out[user];
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto* s = series[i];
      points.push_back(TimelinePoint{user, s->attempt_number, s->word_count, s->passed(),
                                     !ever_passed && i + 1 == series.size()});
    }
  }
  return out;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (const char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string export_csv(ExportKind kind, const Course& course, std::span<const Submission> log) {
  std::string out;
  if (kind == ExportKind::Summary) {
    out += kSummaryHeader;
    out += kCrlf;
    for (const auto& p : course.problems) {
      const auto s = summarize(course.course_id, p.problem_id, log);
      if (s.attempters == 0) continue;
      out += csv_field(s.problem_id) + "," + std::to_string(s.attempters) + "," + std::to_string(s.solvers) + "," +
             std::to_string(s.success_pct) + "," + opt_field(s.avg_submissions_to_solve) + "," +
             opt_field(s.mean_words) + "," + opt_field(s.min_words) + "," + opt_field(s.max_words) + "," +
             opt_field(s.avg_submissions_all_attempts);
      out += kCrlf;
    }
    return out;
  }
  out += kTimelineHeader;
  out += kCrlf;
  for (const auto& p : course.problems) {
    for (const auto& [user, points] : timeline(course.course_id, p.problem_id, log)) {
      for (const auto& pt : points) {
        out += csv_field(p.problem_id) + "," + csv_field(pt.user_id) + "," + std::to_string(pt.attempt_number) + "," +
               std::to_string(pt.word_count) + "," + (pt.passed ? "true" : "false") + "," +
               (pt.is_final_failure ? "true" : "false");
        out += kCrlf;
      }
    }
  }
  return out;
}

Json export_json(ExportKind kind, const Course& course, std::span<const Submission> log) {
  Json rows = Json::array();
  for (const auto& p : course.problems) {
    if (kind == ExportKind::Summary) {
      const auto s = summarize(course.course_id, p.problem_id, log);
      if (s.attempters == 0) continue;
      rows.push_back({{"problem_id", s.problem_id},
                      {"attempters", s.attempters},
                      {"solvers", s.solvers},
                      {"success_pct", s.success_pct},
                      {"avg_submissions", opt_json(s.avg_submissions_to_solve)},
                      {"avg_submissions_all_attempts", opt_json(s.avg_submissions_all_attempts)},
                      {"mean_words", opt_json(s.mean_words)},
                      {"min_words", opt_json(s.min_words)},
                      {"max_words", opt_json(s.max_words)}});
    } else {
      for (const auto& [user, points] : timeline(course.course_id, p.problem_id, log)) {
        for (const auto& pt : points) {
          rows.push_back({{"problem_id", p.problem_id},
                          {"user_id", pt.user_id},
                          {"attempt_number", pt.attempt_number},
                          {"word_count", pt.word_count},
                          {"passed", pt.passed},
                          {"is_final_failure", pt.is_final_failure}});
        }
      }
    }
  }
  return {{"course_id", course.course_id},
          {"kind", kind == ExportKind::Summary ? "summary" : "timeline"},
          {"rows", std::move(rows)}};
}

}  // namespace promptgrade
