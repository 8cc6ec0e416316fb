#pragma once

#include <csignal>
#include <pthread.h>

namespace unitor::tools {

/// Blocks SIGINT/SIGTERM in this thread and every thread started after the
/// call, so only wait_for_shutdown() sees them.
inline sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

inline int wait_for_shutdown(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

}  // namespace unitor::tools
