#include "promptgrade/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <climits>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "promptgrade/hash.hpp"

namespace promptgrade {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kStderrCap = 64 * 1024;
constexpr std::size_t kDisplayCap = 2000;
constexpr std::string_view kSandboxPath = "/usr/local/bin:/usr/bin:/bin";

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<256>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<256>& sem_;
};

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "promptgrade-run-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw SandboxSetupFailure(std::string("cannot create sandbox directory: ") + std::strerror(errno));
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw SandboxSetupFailure(std::string("pipe failed: ") + std::strerror(errno));
  }
  return Pipe{Fd(fds[0]), Fd(fds[1])};
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string resolve_program(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    throw SandboxSetupFailure("interpreter not executable: " + name);
  }
  std::string_view dirs = kSandboxPath;
  while (!dirs.empty()) {
    const auto colon = dirs.find(':');
    const auto dir = dirs.substr(0, colon);
    const std::string candidate = std::string(dir) + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  throw SandboxSetupFailure("interpreter not found: " + name);
}

void set_limit(int resource, rlim_t value) {
  rlimit rl{value, value};
  ::setrlimit(resource, &rl);
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::string tail(std::string_view s, std::size_t n) {
  if (s.size() <= n) return std::string(s);
  return "..." + std::string(s.substr(s.size() - n));
}

std::string truncate_display(std::string_view s) {
  if (s.size() <= kDisplayCap) return std::string(s);
  return std::string(s.substr(0, kDisplayCap)) + "...[truncated]";
}

std::string error_summary(const ProcessResult& r) {
  std::string err = normalize_output(r.stderr_text);
  if (err.empty()) {
    if (r.term_signal != 0) return "terminated by signal " + std::to_string(r.term_signal);
    return "exited with status " + std::to_string(r.exit_code);
  }
  return tail(err, 600);
}

std::string timeout_display(const ExecutionLimits& limits) {
  std::ostringstream os;
  os << "Time limit exceeded (" << limits.wall_clock_timeout.count() << " ms)";
  return os.str();
}

std::string overflow_display(const ExecutionLimits& limits) {
  return "Output limit exceeded (" + std::to_string(limits.max_stdout_bytes) + " bytes)";
}

}  // namespace

std::string_view to_string(TestStatus status) {
  switch (status) {
    case TestStatus::Pass: return "pass";
    case TestStatus::WrongOutput: return "wrong_output";
    case TestStatus::RuntimeError: return "runtime_error";
    case TestStatus::Timeout: return "timeout";
    case TestStatus::OutputOverflow: return "output_overflow";
  }
  return "runtime_error";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::GenerationError: return "generation_error";
    case Verdict::ExecutionError: return "execution_error";
  }
  return "fail";
}

TestStatus test_status_from_string(std::string_view text) {
  for (auto s : {TestStatus::Pass, TestStatus::WrongOutput, TestStatus::RuntimeError, TestStatus::Timeout,
                 TestStatus::OutputOverflow}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown test status: " + std::string(text));
}

Verdict verdict_from_string(std::string_view text) {
  for (auto v : {Verdict::Pass, Verdict::Fail, Verdict::GenerationError, Verdict::ExecutionError}) {
    if (to_string(v) == text) return v;
  }
  throw std::invalid_argument("unknown verdict: " + std::string(text));
}

void ExecutionLimits::validate() const {
  if (wall_clock_timeout.count() <= 0 || max_stdout_bytes == 0 || max_processes <= 0 || max_file_bytes == 0 ||
      max_address_space_bytes == 0) {
    throw std::invalid_argument("execution limits must be positive");
  }
}

EvaluationResult EvaluationResult::from_outcomes(std::vector<TestOutcome> outcomes) {
  EvaluationResult r;
  r.outcomes = std::move(outcomes);
  const auto failing =
      std::find_if(r.outcomes.begin(), r.outcomes.end(), [](const auto& o) { return o.status != TestStatus::Pass; });
  if (failing == r.outcomes.end() && !r.outcomes.empty()) {
    r.verdict = Verdict::Pass;
  } else {
    r.verdict = Verdict::Fail;
    if (failing != r.outcomes.end()) r.first_failure = *failing;
  }
  return r;
}

EvaluationResult EvaluationResult::without_run(Verdict verdict) {
  EvaluationResult r;
  r.verdict = verdict;
  return r;
}

std::string normalize_output(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.push_back(std::move(current));
      current.clear();
    } else if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  lines.push_back(std::move(current));
  for (auto& line : lines) {
    const auto end = line.find_last_not_of(" \t\f\v");
    line.erase(end == std::string::npos ? 0 : end + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

Sandbox::Sandbox(std::size_t pool_size) : pool_size_(std::clamp<std::size_t>(pool_size, 1, 256)), slots_(0) {
  ignore_sigpipe_once();
  slots_.release(static_cast<std::ptrdiff_t>(pool_size_));
}

ProcessResult Sandbox::run_script(const std::map<std::string, std::string>& files, const std::string& script_name,
                                  std::string_view runtime, std::string_view stdin_text,
                                  const ExecutionLimits& limits) {
  limits.validate();
  SlotGuard slot(slots_);
  TempDir dir;

  for (const auto& [name, content] : files) {
    std::ofstream out(dir.path() / name, std::ios::binary);
    out << content;
    if (!out) throw SandboxSetupFailure("cannot write " + name + " into sandbox directory");
  }
  const std::string script_path = (dir.path() / script_name).string();

  auto tokens = split_ws(runtime);
  if (tokens.empty()) throw SandboxSetupFailure("empty runtime command");
  for (auto& tok : tokens) {
    for (std::string_view key : {"{script_path}", "{script}"}) {
      for (auto pos = tok.find(key); pos != std::string::npos; pos = tok.find(key)) {
        tok.replace(pos, key.size(), script_path);
      }
    }
  }
  tokens[0] = resolve_program(tokens[0]);

  const std::string workdir = dir.path().string();
  std::vector<std::string> env_strings = {
      "PATH=" + std::string(kSandboxPath),
      "HOME=" + workdir,
      "TMPDIR=" + workdir,
      "LANG=C.UTF-8",
      "LC_ALL=C.UTF-8",
      "PYTHONIOENCODING=utf-8",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONHASHSEED=0",
  };
  std::vector<char*> argv;
  for (auto& t : tokens) argv.push_back(t.data());
  argv.push_back(nullptr);
  std::vector<char*> envp;
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);

  Pipe in = make_pipe();
  Pipe out = make_pipe();
  Pipe err = make_pipe();
  Pipe exec_status = make_pipe();

  const auto cpu_secs = static_cast<rlim_t>(
      std::chrono::ceil<std::chrono::seconds>(limits.wall_clock_timeout).count() + 1);
  const auto nproc = static_cast<rlim_t>(limits.max_processes);
  const auto fsize = static_cast<rlim_t>(limits.max_file_bytes);
  const auto as = static_cast<rlim_t>(limits.max_address_space_bytes);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw SandboxSetupFailure(std::string("fork failed: ") + std::strerror(errno));

  if (pid == 0) {
    // Child: async-signal-safe calls only.
    ::setpgid(0, 0);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    ::close_range(3, UINT_MAX, CLOSE_RANGE_CLOEXEC);
    if (::chdir(workdir.c_str()) != 0) {
      const int e = errno;
      [[maybe_unused]] auto n = ::write(exec_status.write.get(), &e, sizeof e);
      ::_exit(127);
    }
    ::umask(077);
    set_limit(RLIMIT_CPU, cpu_secs);
    set_limit(RLIMIT_NPROC, nproc);
    set_limit(RLIMIT_FSIZE, fsize);
    set_limit(RLIMIT_AS, as);
    set_limit(RLIMIT_CORE, 0);
    ::execve(argv[0], argv.data(), envp.data());
    const int e = errno;
    [[maybe_unused]] auto n = ::write(exec_status.write.get(), &e, sizeof e);
    ::_exit(127);
  }

  ::setpgid(pid, pid);
  in.read.reset();
  out.write.reset();
  err.write.reset();
  exec_status.write.reset();

  int child_errno = 0;
  ssize_t got;
  do {
    got = ::read(exec_status.read.get(), &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    int status;
    ::waitpid(pid, &status, 0);
    throw SandboxSetupFailure("cannot start interpreter " + tokens[0] + ": " + std::strerror(child_errno));
  }

  ProcessResult result;
  set_nonblocking(in.write.get());
  set_nonblocking(out.read.get());
  set_nonblocking(err.read.get());

  std::size_t stdin_off = 0;
  if (stdin_text.empty()) in.write.reset();

  const auto deadline = start + limits.wall_clock_timeout;
  bool reaped = false;
  int wait_status = 0;
  std::optional<std::chrono::steady_clock::time_point> drain_deadline;
  std::array<char, 16384> buf{};

  auto kill_group = [pid] { ::kill(-pid, SIGKILL); };

  while (out.read || err.read) {
    const auto now = std::chrono::steady_clock::now();
    if (!reaped && now >= deadline) {
      result.timed_out = true;
      kill_group();
      break;
    }
    if (drain_deadline && now >= *drain_deadline) break;

    std::array<pollfd, 3> pfds{};
    nfds_t n = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1;
    if (out.read) {
      out_idx = static_cast<int>(n);
      pfds[n++] = {out.read.get(), POLLIN, 0};
    }
    if (err.read) {
      err_idx = static_cast<int>(n);
      pfds[n++] = {err.read.get(), POLLIN, 0};
    }
    if (in.write) {
      in_idx = static_cast<int>(n);
      pfds[n++] = {in.write.get(), POLLOUT, 0};
    }
    const auto until = drain_deadline ? *drain_deadline : deadline;
    const auto wait_ms = std::clamp<long long>(
        std::chrono::duration_cast<std::chrono::milliseconds>(until - now).count(), 0, 20);
    const int rc = ::poll(pfds.data(), n, static_cast<int>(wait_ms));
    if (rc < 0 && errno != EINTR) break;

    if (rc > 0) {
      if (in_idx >= 0 && (pfds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const auto w = ::write(in.write.get(), stdin_text.data() + stdin_off, stdin_text.size() - stdin_off);
        if (w > 0) stdin_off += static_cast<std::size_t>(w);
        if (w < 0 && errno != EAGAIN && errno != EINTR) in.write.reset();
        if (stdin_off >= stdin_text.size()) in.write.reset();
      }
      if (out_idx >= 0 && (pfds[out_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
        const auto r = ::read(out.read.get(), buf.data(), buf.size());
        if (r > 0) {
          result.stdout_text.append(buf.data(), static_cast<std::size_t>(r));
          if (result.stdout_text.size() > limits.max_stdout_bytes) {
            result.stdout_text.resize(limits.max_stdout_bytes);
            result.stdout_overflow = true;
            kill_group();
            break;
          }
        } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
          out.read.reset();
        }
      }
      if (err_idx >= 0 && (pfds[err_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
        const auto r = ::read(err.read.get(), buf.data(), buf.size());
        if (r > 0) {
          if (result.stderr_text.size() < kStderrCap) {
            result.stderr_text.append(buf.data(),
                                      std::min<std::size_t>(static_cast<std::size_t>(r),
                                                            kStderrCap - result.stderr_text.size()));
          }
        } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
          err.read.reset();
        }
      }
    }

    if (!reaped && ::waitpid(pid, &wait_status, WNOHANG) == pid) {
      reaped = true;
      // Stragglers in the group may still hold the pipes open.
      kill_group();
      drain_deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(200);
    }
  }

  if (!reaped) {
    if (!result.timed_out && !result.stdout_overflow) {
      // Pipes closed but the process is still running: wait out the clock.
      while (::waitpid(pid, &wait_status, WNOHANG) != pid) {
        if (std::chrono::steady_clock::now() >= deadline) {
          result.timed_out = true;
          kill_group();
          ::waitpid(pid, &wait_status, 0);
          break;
        }
        ::usleep(5000);
      }
    } else {
      ::waitpid(pid, &wait_status, 0);
    }
  }
  kill_group();

  if (WIFEXITED(wait_status)) {
    result.exit_code = WEXITSTATUS(wait_status);
  } else if (WIFSIGNALED(wait_status)) {
    result.term_signal = WTERMSIG(wait_status);
  }
  result.elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return result;
}

EvaluationResult Sandbox::run_program_tests(std::string_view code, std::span<const TestCase> tests,
                                            const ExecutionLimits& limits, std::string_view runtime) {
  const std::map<std::string, std::string> files{{"main.py", std::string(code)}};
  std::vector<TestOutcome> outcomes;
  outcomes.reserve(tests.size());
  for (const auto& test : tests) {
    if (!test.is_program()) throw std::invalid_argument("test " + test.test_id + " is not a program test");
    const auto& io = test.program();
    TestOutcome o;
    o.test_id = test.test_id;
    o.input_display = truncate_display(io.stdin_text);
    o.expected_display = truncate_display(normalize_output(io.expected_stdout));

    const auto run = run_script(files, "main.py", runtime, io.stdin_text, limits);
    if (run.stdout_overflow) {
      o.status = TestStatus::OutputOverflow;
      o.actual_display = overflow_display(limits);
    } else if (run.timed_out) {
      o.status = TestStatus::Timeout;
      o.actual_display = timeout_display(limits);
    } else if (run.exit_code != 0 || run.term_signal != 0) {
      o.status = TestStatus::RuntimeError;
      o.actual_display = truncate_display(error_summary(run));
    } else {
      const auto actual = normalize_output(run.stdout_text);
      o.status = actual == normalize_output(io.expected_stdout) ? TestStatus::Pass : TestStatus::WrongOutput;
      o.actual_display = truncate_display(actual);
    }
    outcomes.push_back(std::move(o));
  }
  return EvaluationResult::from_outcomes(std::move(outcomes));
}

static std::string python_literal(const Json& v) {
  switch (v.type()) {
    case Json::value_t::null: return "None";
    case Json::value_t::boolean: return v.get<bool>() ? "True" : "False";
    case Json::value_t::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + python_literal(v[i]);
      return out + "]";
    }
    case Json::value_t::object: {
      std::string out = "{";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        out += (first ? "" : ", ") + Json(it.key()).dump() + ": " + python_literal(it.value());
        first = false;
      }
      return out + "}";
    }
    default:
      // Strings and numbers share JSON and Python literal syntax when non-ASCII
      // text is kept as raw UTF-8.
      return v.dump();
  }
}

std::string build_function_harness(std::string_view function_name, std::span<const TestCase> tests,
                                   std::string_view marker) {
  std::string cases = "[\n";
  for (const auto& t : tests) cases += "    " + python_literal(t.function().arguments) + ",\n";
  cases += "]";

  std::string h;
  h += "import _json as _pp_cjson\n";
  h += "import sys as _pp_sys\n\n";
  h += "_PP_MARK = " + Json(std::string(marker)).dump() + "\n";
  h += "_PP_NAME = " + Json(std::string(function_name)).dump() + "\n";
  h += "_PP_CASES = " + cases + "\n";
  h += R"PY(_pp_out = _pp_sys.stdout
_pp_str = _pp_cjson.encode_basestring_ascii


def _pp_key(k):
    if isinstance(k, str):
        return k
    if k is True or k is False or k is None:
        return {True: "true", False: "false", None: "null"}[k]
    if isinstance(k, (int, float)):
        return _pp_enc(k)
    raise TypeError("keys must be str, int, float, bool or None, not " + type(k).__name__)


def _pp_enc(v):
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return int.__repr__(v)
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("Out of range float values are not JSON compliant")
        return float.__repr__(v)
    if isinstance(v, str):
        return _pp_str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_pp_enc(x) for x in v) + "]"
    if isinstance(v, dict):
        items = sorted((_pp_key(k), x) for k, x in v.items())
        return "{" + ",".join(_pp_str(k) + ":" + _pp_enc(x) for k, x in items) + "}"
    raise TypeError("Object of type " + type(v).__name__ + " is not JSON serializable")


def _pp_emit(index, status, value):
    try:
        _pp_sys.stdout.flush()
    except Exception:
        pass
    _pp_out.write("\n" + _PP_MARK + ' {"i":' + str(index) + ',"s":' + _pp_str(status) + ',"v":' + _pp_str(value) + "}\n")
    _pp_out.flush()


_pp_ns = {"__name__": "solution", "__builtins__": __builtins__}
_pp_load_error = None
try:
    with open("solution.py", encoding="utf-8") as _pp_f:
        _pp_src = _pp_f.read()
    exec(compile(_pp_src, "solution.py", "exec"), _pp_ns)
except BaseException as _pp_e:
    _pp_load_error = type(_pp_e).__name__ + ": " + str(_pp_e)

for _pp_i, _pp_args in enumerate(_PP_CASES):
    if _pp_load_error is not None:
        _pp_emit(_pp_i, "error", _pp_load_error)
        continue
    _pp_fn = _pp_ns.get(_PP_NAME)
    if not callable(_pp_fn):
        _pp_emit(_pp_i, "error", "NameError: function '" + _PP_NAME + "' is not defined")
        continue
    try:
        _pp_value = _pp_fn(*_pp_args)
        _pp_emit(_pp_i, "ok", _pp_enc(_pp_value))
    except BaseException as _pp_e:
        _pp_emit(_pp_i, "error", type(_pp_e).__name__ + ": " + str(_pp_e))
)PY";
  return h;
}

EvaluationResult Sandbox::run_function_tests(std::string_view code, std::string_view function_name,
                                             std::span<const TestCase> tests, const ExecutionLimits& limits,
                                             std::string_view runtime) {
  for (const auto& t : tests) {
    if (t.is_program()) throw std::invalid_argument("test " + t.test_id + " is not a function test");
  }
  const std::string marker = "@@PP-RESULT-" + random_hex(12) + "@@";
  const std::map<std::string, std::string> files{
      {"solution.py", std::string(code)},
      {"main.py", build_function_harness(function_name, tests, marker)},
  };
  const auto run = run_script(files, "main.py", runtime, "", limits);

  struct Reported {
    std::string status;
    std::string value;
  };
  std::unordered_map<std::size_t, Reported> reported;
  std::istringstream lines(run.stdout_text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(marker, 0) != 0) continue;
    const auto parsed = Json::parse(line.substr(marker.size()), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    const auto i = parsed.value("i", std::size_t{0});
    if (i < tests.size() && !reported.contains(i)) {
      reported[i] = Reported{parsed.value("s", ""), parsed.value("v", "")};
    }
  }

  std::vector<TestOutcome> outcomes;
  outcomes.reserve(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto& io = tests[i].function();
    TestOutcome o;
    o.test_id = tests[i].test_id;
    std::string call = std::string(function_name) + "(";
    for (std::size_t a = 0; a < io.arguments.size(); ++a) {
      if (a) call += ", ";
      call += canonical_json(io.arguments[a]);
    }
    call += ")";
    o.input_display = truncate_display(call);
    o.expected_display = truncate_display(canonical_json(io.expected_return));

    const auto it = reported.find(i);
    if (it != reported.end() && it->second.status == "ok") {
      const auto value = Json::parse(it->second.value, nullptr, false);
      o.actual_display = truncate_display(it->second.value);
      o.status = !value.is_discarded() && json_values_equal(value, io.expected_return) ? TestStatus::Pass
                                                                                         : TestStatus::WrongOutput;
    } else if (it != reported.end()) {
      o.status = TestStatus::RuntimeError;
      o.actual_display = truncate_display(it->second.value);
    } else if (run.stdout_overflow) {
      o.status = TestStatus::OutputOverflow;
      o.actual_display = overflow_display(limits);
    } else if (run.timed_out) {
      o.status = TestStatus::Timeout;
      o.actual_display = timeout_display(limits);
    } else {
      o.status = TestStatus::RuntimeError;
      o.actual_display = truncate_display(error_summary(run));
    }
    outcomes.push_back(std::move(o));
  }
  return EvaluationResult::from_outcomes(std::move(outcomes));
}

EvaluationResult Sandbox::evaluate(const PromptProblem& problem, std::string_view code,
                                   const ExecutionLimits& limits) {
  if (problem.kind == ProblemKind::Function) {
    return run_function_tests(code, problem.function_name.value_or(""), problem.tests, limits, problem.runtime);
  }
  return run_program_tests(code, problem.tests, limits, problem.runtime);
}

SandboxJudge::SandboxJudge(Sandbox& sandbox, ExecutionLimits limits) : sandbox_(sandbox), limits_(limits) {
  limits_.validate();
}

EvaluationResult SandboxJudge::evaluate(const PromptProblem& problem, std::string_view code) {
  return sandbox_.evaluate(problem, code, limits_);
}

}  // namespace promptgrade
