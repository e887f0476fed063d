#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "promptgrade/cli.hpp"

int main(int argc, char** argv) {
  // SIGINT/SIGTERM are handled on a dedicated thread so the server can stop
  // cleanly; block them before any other thread exists.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread([set] {
    int sig = 0;
    sigwait(&set, &sig);
    promptgrade::request_shutdown();
    // A second signal (or one arriving outside serve) terminates immediately.
    sigwait(&set, &sig);
    std::_Exit(128 + sig);
  }).detach();

  std::vector<std::string> args(argv + 1, argv + argc);
  return promptgrade::run_cli(args, std::cout, std::cerr);
}
