#include "flipaudit/util/parallel.hpp"

#include <string>

namespace flipaudit {

namespace {
std::atomic<std::size_t> g_cap{0};
}

void set_thread_cap(std::size_t cap) { g_cap.store(cap); }

std::size_t default_thread_count() {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLIPAUDIT_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) n = static_cast<std::size_t>(v);
    } catch (...) {
      // unparsable values are ignored
    }
  }
  const std::size_t cap = g_cap.load();
  if (cap > 0) n = std::min(n, cap);
  return n;
}

}  // namespace flipaudit
