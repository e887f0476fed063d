#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace promptgrade {

/// Exit codes shared by every subcommand.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfig = 2;
inline constexpr int kBind = 3;
}  // namespace exit_code

struct CliHooks {
  /// Called by `serve` once the socket is bound, before accepting requests.
  std::function<void(httplib::Server&, int port)> on_listening;
};

/// `args` excludes the program name. Machine-readable output goes to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliHooks& hooks = {});

/// Stop a running `serve` (safe to call from a signal-handling thread).
void request_shutdown();

}  // namespace promptgrade
