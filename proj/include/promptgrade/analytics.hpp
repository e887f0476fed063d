#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptgrade/json_value.hpp"
#include "promptgrade/problem.hpp"
#include "promptgrade/submission.hpp"

namespace promptgrade {

class EmptySummary : public std::invalid_argument {
 public:
  EmptySummary() : std::invalid_argument("summary has no attempters") {}
};

/// One Table-1 style row. "Successful prompt" means each solver's first
/// passing submission; averages are rounded half-up to one decimal and the
/// success percentage to an integer.
struct ProblemSummary {
  std::string problem_id;
  int attempters = 0;
  int solvers = 0;
  int success_pct = 0;
  /// Mean over solvers of attempts up to and including the first pass.
  std::optional<double> avg_submissions_to_solve;
  /// Mean over solvers of all their attempts, including post-success ones.
  std::optional<double> avg_submissions_all_attempts;
  std::optional<double> mean_words;
  std::optional<int> min_words;
  std::optional<int> max_words;

  bool operator==(const ProblemSummary&) const = default;
};

struct TimelinePoint {
  std::string user_id;
  int attempt_number = 0;
  int word_count = 0;
  bool passed = false;
  /// Last attempt of a user who never passed.
  bool is_final_failure = false;

  bool operator==(const TimelinePoint&) const = default;
};

using Timeline = std::map<std::string, std::vector<TimelinePoint>>;

/// round-half-up(numerator / denominator) in tenths, as a double.
double round_tenths(long long numerator, long long denominator);
/// round-half-up(100 * part / whole).
int round_percent(long long part, long long whole);

ProblemSummary summarize(std::string_view course_id, std::string_view problem_id, std::span<const Submission> log);

/// "<solvers> (<pct>%) | <avg> | <mean> | <min> | <max>". Throws EmptySummary.
std::string render_summary_row(const ProblemSummary& summary);

/// One series per attempter, ordered by attempt_number.
Timeline timeline(std::string_view course_id, std::string_view problem_id, std::span<const Submission> log);

enum class ExportKind { Summary, Timeline };

/// RFC 4180 CSV (CRLF line ends). Rows follow course problem order; problems
/// with no attempts are omitted.
std::string export_csv(ExportKind kind, const Course& course, std::span<const Submission> log);

/// JSON equivalent of export_csv.
Json export_json(ExportKind kind, const Course& course, std::span<const Submission> log);

/// Quote a CSV field when needed.
std::string csv_field(std::string_view value);

}  // namespace promptgrade
