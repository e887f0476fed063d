#include <gtest/gtest.h>

#include <future>
#include <random>
#include <regex>

#include "fakes.hpp"
#include "promptgrade/grading.hpp"
#include "promptgrade/hash.hpp"
#include "test_support.hpp"

using namespace promptgrade;
using namespace testsupport;

namespace {

constexpr const char* kListingPrompt =
    "Write me a Python program that takes five decimal number separated by spaces, and outputs the average of the 3 "
    "median numbers rounded to 2dp.";

Course synthetic_course(int n, std::optional<int> max_words = std::nullopt) {
  Course c;
  c.course_id = "syn";
  c.title = "Synthetic";
  for (int i = 0; i < n; ++i) {
    PromptProblem p;
    p.problem_id = "p" + std::to_string(i);
    p.prompt_prefix = "Write a Python program that";
    p.image_asset = "p.svg";
    p.max_prompt_words = max_words;
    p.tests = {TestCase{"t1", ProgramCase{"a", "b"}}, TestCase{"t2", ProgramCase{"c", "d"}}};
    c.problems.push_back(p);
  }
  return c;
}

struct Harness {
  explicit Harness(Course course, Provider& provider, Judge& judge) : provider(provider), judge(judge) {
    catalog.add(std::move(course));
    store.add_user(UserRecord{"ada", "Ada", Role::Student, sha256_hex("pw")});
    store.add_user(UserRecord{"bob", "Bob", Role::Student, sha256_hex("pw")});
  }
  TempDir dir;
  CourseCatalog catalog;
  Store store{dir.path(), StoreOptions{false}};
  ManualClock clock;
  Provider& provider;
  Judge& judge;
  GradingEngine engine{catalog, provider, judge, store, clock, 2};
};

}  // namespace

TEST(WordCount, TableAnchors) {
  EXPECT_EQ(word_count(kListingPrompt), 25);
  EXPECT_EQ(word_count("I want a function called initials which returns initials of the sentence"), 12);
  EXPECT_EQ(word_count(""), 0);
  EXPECT_EQ(word_count("  a\tb\n c  "), 3);
}

TEST(WordCount, AdditiveOverSpaceJoin) {
  std::mt19937 rng(1);
  const std::string alphabet = "ab1 \t\n.,";
  auto random_text = [&] {
    std::string s;
    const int len = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_text();
    const auto b = random_text();
    EXPECT_EQ(word_count(a + " " + b), word_count(a) + word_count(b)) << '[' << a << "][" << b << ']';
  }
}

TEST(Feedback, Messages) {
  EXPECT_EQ(feedback_for(EvaluationResult::from_outcomes({{"t1", TestStatus::Pass, "", "", ""}})),
            "Success — continue to the next problem.");
  EXPECT_EQ(feedback_for(EvaluationResult::without_run(Verdict::GenerationError)),
            "The model did not return code — revise your prompt.");
  const auto r = EvaluationResult::from_outcomes({{"t1", TestStatus::Pass, "i1", "e1", "e1"},
                                                  {"t2", TestStatus::WrongOutput, "i2", "e2", "a2"},
                                                  {"t3", TestStatus::WrongOutput, "i3", "e3", "a3"}});
  const auto msg = feedback_for(r);
  EXPECT_NE(msg.find("t2"), std::string::npos);
  EXPECT_NE(msg.find("e2"), std::string::npos);
  EXPECT_NE(msg.find("a2"), std::string::npos);
  EXPECT_EQ(msg.find("t3"), std::string::npos);
  EXPECT_EQ(msg.find("e3"), std::string::npos);
  EXPECT_EQ(msg.find("i1"), std::string::npos);
}

TEST(Feedback, OnlyFirstFailureIsRevealed) {
  std::mt19937 rng(5);
  const std::vector<TestStatus> fails{TestStatus::WrongOutput, TestStatus::RuntimeError, TestStatus::Timeout,
                                      TestStatus::OutputOverflow};
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<TestOutcome> outcomes;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) {
      const auto tag = "Q" + std::to_string(iter) + "x" + std::to_string(k) + "Z";
      const auto st = rng() % 3 == 0 ? TestStatus::Pass : fails[rng() % fails.size()];
      outcomes.push_back(TestOutcome{"id" + tag, st, "in" + tag, "exp" + tag, "act" + tag});
    }
    const auto r = EvaluationResult::from_outcomes(outcomes);
    const auto msg = feedback_for(r);
    for (const auto& o : outcomes) {
      const bool is_first = r.first_failure && o.test_id == r.first_failure->test_id;
      const auto tag = o.test_id.substr(2);
      EXPECT_EQ(msg.find(tag) != std::string::npos, is_first) << msg;
    }
  }
}

TEST(Progress, FromSolvedPrefix) {
  const auto c = synthetic_course(3);
  EXPECT_EQ(progress_from_solved(c, "u", {}).highest_unlocked_index, 0);
  EXPECT_EQ(progress_from_solved(c, "u", {"p0"}).highest_unlocked_index, 1);
  EXPECT_EQ(progress_from_solved(c, "u", {"p1"}).highest_unlocked_index, 0);
  EXPECT_EQ(progress_from_solved(c, "u", {"p0", "p1", "p2"}).highest_unlocked_index, 2);
}

TEST(Engine, EndToEndWithSandboxUnlocksNext) {
  const auto& course = fixture_course();
  const auto& p = fixture_problem("cs2-2");
  const std::string text = "initials which returns the uppercase first letter of each word joined together";
  const auto full = build_full_prompt(p, text);
  auto mock = MockProvider::configure({{prompt_hash(full), canned(reference_code("cs2-2"))}});
  Sandbox sandbox;
  SandboxJudge judge(sandbox);
  TempDir dir;
  CourseCatalog catalog;
  catalog.add(course);
  Store store(dir.path(), StoreOptions{false});
  store.add_user(UserRecord{"ada", "Ada", Role::Student, "x"});
  // Unlock cs2-2 (index 4) as if the earlier problems were solved.
  store.save_progress(progress_from_solved(course, "ada", {"cs1-1", "cs1-2", "cs1-3", "cs2-1"}));
  ManualClock clock;
  GradingEngine engine(catalog, *mock, judge, store, clock);
  EXPECT_FALSE(engine.can_access("ada", "table1", 5));
  const auto s = engine.submit("ada", "table1", 4, text);
  EXPECT_EQ(s.result.verdict, Verdict::Pass);
  EXPECT_EQ(s.full_prompt, full);
  EXPECT_TRUE(engine.can_access("ada", "table1", 5));
  EXPECT_EQ(engine.progress("ada", "table1").highest_unlocked_index, 5);
}

TEST(Engine, GatingAndAccess) {
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(synthetic_course(3), provider, judge);
  EXPECT_TRUE(h.engine.can_access("ada", "syn", 0));
  EXPECT_FALSE(h.engine.can_access("ada", "syn", 1));
  EXPECT_THROW(h.engine.submit("ada", "syn", 2, "GOOD"), LockedProblem);
  EXPECT_THROW(h.engine.submit("ada", "syn", 1, "GOOD"), LockedProblem);
  EXPECT_EQ(provider.calls.load(), 0);
  EXPECT_EQ(h.engine.submit("ada", "syn", 0, "x").result.verdict, Verdict::Fail);
  EXPECT_FALSE(h.engine.can_access("ada", "syn", 1));
  EXPECT_EQ(h.engine.submit("ada", "syn", 0, "GOOD").result.verdict, Verdict::Pass);
  EXPECT_TRUE(h.engine.can_access("ada", "syn", 1));
  EXPECT_FALSE(h.engine.can_access("bob", "syn", 1));
  EXPECT_THROW(h.engine.submit("zed", "syn", 0, "GOOD"), UnknownUser);
  EXPECT_THROW(h.engine.submit("ada", "syn", 3, "GOOD"), IndexOutOfRange);
  EXPECT_THROW(h.engine.submit("ada", "nope", 0, "GOOD"), std::out_of_range);
  EXPECT_THROW(h.engine.submit("ada", "syn", 0, "  "), EmptyStudentText);
}

TEST(Engine, PromptTooLongUsesBodyWordCount) {
  auto course = synthetic_course(1, 20);
  course.problems[0].prompt_prefix = "Write me a Python program that";
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(course, provider, judge);
  const std::string continuation(kListingPrompt + std::string("Write me a Python program that ").size());
  try {
    h.engine.submit("ada", "syn", 0, continuation);
    FAIL();
  } catch (const PromptTooLong& e) {
    EXPECT_EQ(e.limit(), 20);
    EXPECT_EQ(e.actual(), 25);
  }
  EXPECT_EQ(provider.calls.load(), 0);
  EXPECT_TRUE(h.store.query_submissions().empty());
}

TEST(Engine, RecordsGenerationAndExecutionErrors) {
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(synthetic_course(2), provider, judge);
  const auto s = h.engine.submit("ada", "syn", 0, "PROSE please");
  EXPECT_EQ(s.result.verdict, Verdict::GenerationError);
  ASSERT_TRUE(s.generation_failure);
  EXPECT_EQ(s.generation_failure->kind, "no_code");
  EXPECT_EQ(s.generation_failure->raw_response, "I am not able to write that.");
  EXPECT_FALSE(s.generated);
  EXPECT_EQ(judge.calls.load(), 0);

  auto unknown = MockProvider::configure({});
  BrokenJudge broken;
  TempDir dir;
  CourseCatalog catalog;
  catalog.add(synthetic_course(1));
  Store store(dir.path(), StoreOptions{false});
  store.add_user(UserRecord{"ada", "Ada", Role::Student, "x"});
  ManualClock clock;
  GradingEngine e1(catalog, *unknown, judge, store, clock);
  EXPECT_EQ(e1.submit("ada", "syn", 0, "anything").generation_failure->kind, "provider_error");
  GradingEngine e2(catalog, provider, broken, store, clock);
  const auto x = e2.submit("ada", "syn", 0, "GOOD");
  EXPECT_EQ(x.result.verdict, Verdict::ExecutionError);
  EXPECT_TRUE(x.generated);
  const auto log = store.query_submissions();
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0].attempt_number, 1);
  EXPECT_EQ(log[1].attempt_number, 2);
}

TEST(Engine, SubmissionsAfterPassAreRecordedWithoutRegression) {
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(synthetic_course(3), provider, judge);
  h.engine.submit("ada", "syn", 0, "GOOD");
  const auto before = h.engine.progress("ada", "syn");
  const auto again = h.engine.submit("ada", "syn", 0, "bad one");
  EXPECT_EQ(again.attempt_number, 2);
  EXPECT_EQ(again.result.verdict, Verdict::Fail);
  EXPECT_EQ(h.engine.progress("ada", "syn"), before);
}

TEST(Engine, ConcurrentSubmitsAreGapFree) {
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(synthetic_course(2), provider, judge);
  std::vector<std::future<Submission>> futures;
  for (int i = 0; i < 16; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      return h.engine.submit(i % 2 ? "ada" : "bob", "syn", 0, "try " + std::to_string(i));
    }));
  }
  for (auto& f : futures) f.get();
  for (const auto* user : {"ada", "bob"}) {
    SubmissionFilter filter;
    filter.user_id = user;
    std::vector<int> attempts;
    for (const auto& s : h.store.query_submissions(filter)) attempts.push_back(s.attempt_number);
    std::sort(attempts.begin(), attempts.end());
    ASSERT_EQ(attempts.size(), 8u);
    for (int i = 0; i < 8; ++i) EXPECT_EQ(attempts[i], i + 1);
  }
}

// Random interleavings of submit/can_access: every recorded submission on
// index i has passes on 0..i-1 earlier in the log, attempts are 1..n, and the
// stored progress equals the progress recomputed from the log.
TEST(Engine, GatingPropertyOverRandomSequences) {
  std::mt19937 rng(77);
  const std::vector<std::string> users{"ada", "bob"};
  for (int seq = 0; seq < 150; ++seq) {
    KeywordProvider provider;
    MarkerJudge judge;
    Harness h(synthetic_course(4), provider, judge);
    for (int step = 0; step < 30; ++step) {
      const auto& u = users[rng() % users.size()];
      const long long idx = static_cast<long long>(rng() % 4);
      const bool accessible = h.engine.can_access(u, "syn", idx);
      try {
        h.engine.submit(u, "syn", idx, rng() % 2 ? "GOOD" : "meh");
        EXPECT_TRUE(accessible);
      } catch (const LockedProblem&) {
        EXPECT_FALSE(accessible);
      }
    }
    const auto log = h.store.query_submissions();
    const auto& course = *h.catalog.get("syn");
    for (const auto& u : users) {
      std::set<std::string> solved;
      std::map<std::string, int> last_attempt;
      for (const auto& s : log) {
        if (s.user_id != u) continue;
        for (int j = 0; j < s.problem_index; ++j) EXPECT_TRUE(solved.contains(course.problems[j].problem_id));
        EXPECT_EQ(s.attempt_number, ++last_attempt[s.problem_id]);
        if (s.passed()) solved.insert(s.problem_id);
      }
      EXPECT_EQ(h.engine.progress(u, "syn"), progress_from_solved(course, u, solved));
    }
  }
}

TEST(Robustness, DeterministicExtremes) {
  const auto& p = fixture_problem("cs1-1");
  const auto full = build_full_prompt(p, "prints Hello followed by the name that was typed in");
  auto good = MockProvider::configure({{prompt_hash(full), canned(reference_code("cs1-1"))}});
  auto bad = MockProvider::configure({{prompt_hash(full), canned(mutant_code("cs1-1"))}});
  Sandbox sandbox;
  SandboxJudge judge(sandbox);
  EXPECT_EQ(measure_robustness(p, full, 5, *good, judge).fraction(), 1.0);
  EXPECT_EQ(measure_robustness(p, full, 5, *bad, judge).fraction(), 0.0);
}

TEST(Robustness, StochasticWithinBand) {
  const auto& p = fixture_problem("cs1-1");
  const auto full = build_full_prompt(p, "says hello");
  auto mock = MockProvider::configure({{prompt_hash(full), MockEntry{"# pass", "# fail", 0.7}}}, 42);
  MarkerJudge judge;
  const auto a = measure_robustness(p, full, 1000, *mock, judge, 4);
  EXPECT_GE(a.fraction(), 0.65);
  EXPECT_LE(a.fraction(), 0.75);
  // Same seed, different parallelism: same count.
  EXPECT_EQ(measure_robustness(p, full, 1000, *mock, judge, 1).passes, a.passes);
}

TEST(Robustness, EngineLogsSeparately) {
  KeywordProvider provider;
  MarkerJudge judge;
  Harness h(synthetic_course(2), provider, judge);
  EXPECT_EQ(h.engine.robustness("syn", 1, "GOOD", 7).passes, 7);
  EXPECT_EQ(h.engine.robustness_of_body("syn", 0, "Write code that is bad", 3).passes, 0);
  EXPECT_TRUE(h.store.query_submissions().empty());
  const auto runs = h.store.robustness_runs("syn");
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].k, 7);
  EXPECT_EQ(runs[0].word_count, 6);
  EXPECT_EQ(runs[1].word_count, 5);
}
