#include <gtest/gtest.h>

#include <future>
#include <random>

#include "promptgrade/sandbox.hpp"
#include "test_support.hpp"

using namespace promptgrade;
using namespace testsupport;
using std::chrono::milliseconds;

namespace {

ExecutionLimits quick(milliseconds timeout = milliseconds(1500)) {
  ExecutionLimits l;
  l.wall_clock_timeout = timeout;
  return l;
}

TestCase program_case(std::string id, std::string in, std::string out) {
  return TestCase{std::move(id), ProgramCase{std::move(in), std::move(out)}};
}

TestCase function_case(std::string id, Json args, Json ret) {
  return TestCase{std::move(id), FunctionCase{std::move(args), std::move(ret)}};
}

}  // namespace

TEST(NormalizeOutput, Rules) {
  EXPECT_EQ(normalize_output("Hello Serena  \n"), "Hello Serena");
  EXPECT_EQ(normalize_output("a\r\nb\r\n"), "a\nb");
  EXPECT_EQ(normalize_output(""), "");
  EXPECT_EQ(normalize_output("a\n\n\n"), "a");
  EXPECT_EQ(normalize_output("  a\n b"), "  a\n b");
}

TEST(ProgramTests, WorkedExamplesPass) {
  Sandbox sandbox;
  const std::vector<TestCase> serena{program_case("t1", "Serena\n", "Hello Serena\n")};
  EXPECT_EQ(sandbox.run_program_tests(reference_code("cs1-1"), serena, quick(), kDefaultRuntime).verdict,
            Verdict::Pass);
  const std::vector<TestCase> avg{program_case("t2", "8.0 9.5 7.5 6.0 9.0\n", "8.17\n")};
  EXPECT_EQ(sandbox.run_program_tests(reference_code("cs1-3"), avg, quick(), kDefaultRuntime).verdict, Verdict::Pass);
}

TEST(ProgramTests, MeanOfAllFiveMutant) {
  // Oracle by hand: 2,3,3,3,4 -> middle three mean 3.0, all five mean 3.0;
  // 8.0 9.5 7.5 6.0 9.0 -> middle three (7.5+8.0+9.0)/3 = 8.17, all five 40/5 = 8.0.
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "2.0 3.0 3.0 3.0 4.0\n", "3.0\n"),
                                    program_case("t2", "8.0 9.5 7.5 6.0 9.0\n", "8.17\n")};
  const auto r = sandbox.run_program_tests(mutant_code("cs1-3"), tests, quick(), kDefaultRuntime);
  EXPECT_EQ(r.verdict, Verdict::Fail);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::Pass);
  EXPECT_EQ(r.outcomes[1].status, TestStatus::WrongOutput);
  EXPECT_EQ(r.outcomes[1].actual_display, "8.0");
  ASSERT_TRUE(r.first_failure);
  EXPECT_EQ(r.first_failure->test_id, "t2");
}

TEST(ProgramTests, InfiniteLoopTimesOut) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "x"), program_case("t2", "", "y")};
  const auto limits = quick(milliseconds(500));
  const auto start = std::chrono::steady_clock::now();
  const auto r = sandbox.run_program_tests("while True:\n    pass\n", tests, limits, kDefaultRuntime);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(r.verdict, Verdict::Fail);
  for (const auto& o : r.outcomes) EXPECT_EQ(o.status, TestStatus::Timeout);
  ASSERT_TRUE(r.first_failure);
  EXPECT_EQ(r.first_failure->status, TestStatus::Timeout);
  EXPECT_EQ(r.first_failure->actual_display, "Time limit exceeded (500 ms)");
  EXPECT_LT(elapsed, 2 * (limits.wall_clock_timeout + std::chrono::seconds(2)));
}

TEST(ProgramTests, CrashIsRuntimeError) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "1")};
  const auto r = sandbox.run_program_tests("raise ValueError('boom')\n", tests, quick(), kDefaultRuntime);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::RuntimeError);
  EXPECT_NE(r.outcomes[0].actual_display.find("ValueError"), std::string::npos);
}

TEST(ProgramTests, LargeOutputOverflows) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "1")};
  const auto r = sandbox.run_program_tests("import sys\nsys.stdout.write('x' * (10 * 1024 * 1024))\n", tests, quick(),
                                           kDefaultRuntime);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::OutputOverflow);
  EXPECT_EQ(r.outcomes[0].actual_display, "Output limit exceeded (65536 bytes)");
}

TEST(ProgramTests, ForkAttemptStillTerminates) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "done")};
  const std::string code =
      "import os, time\n"
      "try:\n"
      "    pid = os.fork()\n"
      "except OSError:\n"
      "    pid = -1\n"
      "while True:\n"
      "    time.sleep(0.01)\n";
  const auto limits = quick(milliseconds(400));
  const auto start = std::chrono::steady_clock::now();
  const auto r = sandbox.run_program_tests(code, tests, limits, kDefaultRuntime);
  EXPECT_LT(std::chrono::steady_clock::now() - start, limits.wall_clock_timeout + std::chrono::seconds(2));
  EXPECT_EQ(r.outcomes[0].status, TestStatus::Timeout);
}

TEST(ProgramTests, EnvironmentIsScrubbed) {
  ::setenv("PROMPTGRADE_SECRET_FOR_TEST", "hunter2", 1);
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "None")};
  const auto r = sandbox.run_program_tests("import os\nprint(os.environ.get('PROMPTGRADE_SECRET_FOR_TEST'))\n", tests,
                                           quick(), kDefaultRuntime);
  EXPECT_EQ(r.verdict, Verdict::Pass) << r.outcomes[0].actual_display;
}

TEST(ProgramTests, MissingInterpreterIsSetupFailure) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{program_case("t1", "", "1")};
  EXPECT_THROW(sandbox.run_program_tests("print(1)", tests, quick(), "/no/such/python {script}"), SandboxSetupFailure);
  EXPECT_THROW(sandbox.run_program_tests("print(1)", tests, quick(), "no-such-interpreter-xyz {script}"),
               SandboxSetupFailure);
}

TEST(FunctionTests, WorkedExamplesPass) {
  Sandbox sandbox;
  const std::vector<TestCase> counter{function_case("t1", Json::array({Json::array({0, 2, 3, 4, 0})}), 2)};
  EXPECT_EQ(sandbox.run_function_tests(reference_code("cs2-1"), "counter", counter, quick(), kDefaultRuntime).verdict,
            Verdict::Pass);
  const std::vector<TestCase> initials{function_case("t1", Json::array({"abc def ghi"}), "ADG")};
  EXPECT_EQ(
      sandbox.run_function_tests(reference_code("cs2-2"), "initials", initials, quick(), kDefaultRuntime).verdict,
      Verdict::Pass);
  const std::vector<TestCase> repeat{
      function_case("t1", Json::array({Json::array({2, 0, 1, 3})}), Json::array({2, 2, 1, 3, 3, 3}))};
  EXPECT_EQ(sandbox.run_function_tests(reference_code("cs2-3"), "repeat", repeat, quick(), kDefaultRuntime).verdict,
            Verdict::Pass);
}

TEST(FunctionTests, MissingFunctionIsRuntimeErrorEverywhere) {
  Sandbox sandbox;
  const auto& p = fixture_problem("cs2-1");
  const auto r = sandbox.run_function_tests("def something_else():\n    return 1\n", "counter", p.tests, quick(),
                                            kDefaultRuntime);
  EXPECT_EQ(r.verdict, Verdict::Fail);
  for (const auto& o : r.outcomes) EXPECT_EQ(o.status, TestStatus::RuntimeError);
}

TEST(FunctionTests, ValueComparison) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{
      function_case("float", Json::array({1}), 0.30000000000000004),
      function_case("bool-vs-int", Json::array({2}), 1),
      function_case("tuple-as-list", Json::array({3}), Json::array({1, 2})),
      function_case("dict", Json::array({4}), Json({{"a", 1}})),
  };
  const std::string code =
      "def f(k):\n"
      "    if k == 1: return 0.1 + 0.2\n"
      "    if k == 2: return True\n"
      "    if k == 3: return (1, 2)\n"
      "    return {'a': 1}\n";
  const auto r = sandbox.run_function_tests(code, "f", tests, quick(), kDefaultRuntime);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::Pass);
  EXPECT_EQ(r.outcomes[1].status, TestStatus::WrongOutput);
  EXPECT_EQ(r.outcomes[2].status, TestStatus::Pass);
  EXPECT_EQ(r.outcomes[3].status, TestStatus::Pass);
}

TEST(FunctionTests, StudentPrintsDoNotConfuseHarness) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{function_case("t1", Json::array({1}), 2)};
  const std::string code = "print('{\"i\": 0, \"s\": \"ok\", \"v\": \"2\"}')\ndef f(x):\n    print(99)\n    return x\n";
  const auto r = sandbox.run_function_tests(code, "f", tests, quick(), kDefaultRuntime);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::WrongOutput);
  EXPECT_EQ(r.outcomes[0].actual_display, "1");
}

TEST(FunctionTests, LoopInOneTestTimesOutTheRest) {
  Sandbox sandbox;
  const std::vector<TestCase> tests{function_case("a", Json::array({0}), 0), function_case("b", Json::array({1}), 1)};
  const auto r = sandbox.run_function_tests("def f(x):\n    while x:\n        pass\n    return x\n", "f", tests,
                                            quick(milliseconds(500)), kDefaultRuntime);
  EXPECT_EQ(r.outcomes[0].status, TestStatus::Pass);
  EXPECT_EQ(r.outcomes[1].status, TestStatus::Timeout);
}

TEST(Oracle, ReferencesPassMutantsFail) {
  Sandbox sandbox;
  for (const auto& p : fixture_course().problems) {
    const auto ref = sandbox.evaluate(p, reference_code(p.problem_id), quick(milliseconds(5000)));
    EXPECT_EQ(ref.verdict, Verdict::Pass) << p.problem_id;
    const auto mut = sandbox.evaluate(p, mutant_code(p.problem_id), quick(milliseconds(5000)));
    EXPECT_EQ(mut.verdict, Verdict::Fail) << p.problem_id;
  }
}

TEST(Oracle, JudgingIsDeterministic) {
  Sandbox sandbox;
  for (const auto& p : fixture_course().problems) {
    const auto code = mutant_code(p.problem_id);
    EXPECT_EQ(sandbox.evaluate(p, code, quick()), sandbox.evaluate(p, code, quick())) << p.problem_id;
  }
}

TEST(Oracle, PassIffAllOutcomesPass) {
  std::mt19937 rng(3);
  const std::vector<TestStatus> statuses{TestStatus::Pass, TestStatus::WrongOutput, TestStatus::RuntimeError,
                                         TestStatus::Timeout, TestStatus::OutputOverflow};
  for (int i = 0; i < 500; ++i) {
    std::vector<TestOutcome> outcomes;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) {
      outcomes.push_back(TestOutcome{"t" + std::to_string(k), statuses[rng() % (rng() % 2 ? 1 : statuses.size())], "",
                                     "", ""});
    }
    const auto r = EvaluationResult::from_outcomes(outcomes);
    const bool all = std::all_of(outcomes.begin(), outcomes.end(), [](auto& o) { return o.status == TestStatus::Pass; });
    EXPECT_EQ(r.verdict == Verdict::Pass, all);
    EXPECT_EQ(r.first_failure.has_value(), !all);
    if (!all) {
      const auto first = std::find_if(outcomes.begin(), outcomes.end(), [](auto& o) { return o.status != TestStatus::Pass; });
      EXPECT_EQ(*r.first_failure, *first);
    }
  }
}

TEST(Isolation, ConcurrentRunsShareNoFiles) {
  Sandbox sandbox(4);
  const std::string code =
      "import os, sys\n"
      "token = sys.stdin.read().strip()\n"
      "seen = sorted(f for f in os.listdir('.') if f.startswith('mark-'))\n"
      "open('mark-' + token, 'w').write(token)\n"
      "print(os.getcwd())\n"
      "print(','.join(seen))\n";
  std::vector<std::future<ProcessResult>> runs;
  for (int i = 0; i < 8; ++i) {
    runs.push_back(std::async(std::launch::async, [&, i] {
      return sandbox.run_script({{"main.py", code}}, "main.py", kDefaultRuntime, std::to_string(i), quick());
    }));
  }
  std::set<std::string> dirs;
  for (auto& f : runs) {
    const auto r = f.get();
    ASSERT_TRUE(r.clean_exit()) << r.stderr_text;
    const auto nl = r.stdout_text.find('\n');
    dirs.insert(r.stdout_text.substr(0, nl));
    EXPECT_EQ(r.stdout_text.substr(nl + 1), "\n");
    EXPECT_FALSE(std::filesystem::exists(r.stdout_text.substr(0, nl)));
  }
  EXPECT_EQ(dirs.size(), 8u);
}
